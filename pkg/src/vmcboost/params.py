"""Converter and device parameter sets.

The bare defaults reproduce the operating point of the reference design:
30 V input, 75 % duty, 100 kHz, 120 uH inductors, 20 uF multiplier
capacitors and a 640 ohm load.  Device parasitics default to zero (ideal);
``Parasitics.shipped()`` returns the documented loss-model set.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

from .errors import ConfigurationError, UnsupportedRegionError

__all__ = [
    "Parasitics",
    "ConverterParams",
    "ComponentLibraryEntry",
    "COMPONENT_LIBRARY",
    "check_duty",
]


def _check_finite(name, value):
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigurationError(f"{name} must be a number, got {value!r}", name)
    if not math.isfinite(value):
        raise ConfigurationError(f"{name} must be finite, got {value!r}", name)


def check_duty(duty):
    """Raise unless ``duty`` lies strictly inside (0.5, 1)."""
    _check_finite("duty", duty)
    if not 0.5 < duty < 1.0:
        raise UnsupportedRegionError(
            f"duty={duty} outside three-mode operation: requires 0.5 < duty < 1 "
            "(both switches must overlap for a nonzero Mode I interval)",
            "duty",
        )


@dataclass(frozen=True)
class Parasitics:
    """Device non-idealities.  A zero value means ideal for that mechanism.

    ``c_oss`` is the effective switch output capacitance discharged at each
    hard turn-on; it only enters the loss model.
    """

    r_ds_on: float = 0.0  # ohm, per switch
    v_f: float = 0.0  # V, diode forward drop
    dcr: float = 0.0  # ohm, per inductor
    esr: float = 0.0  # ohm, per capacitor
    t_on: float = 0.0  # s
    t_off: float = 0.0  # s
    c_oss: float = 0.0  # F, per switch

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            _check_finite(f"parasitics.{f.name}", value)
            if value < 0:
                raise ConfigurationError(
                    f"parasitics.{f.name} must be >= 0, got {value}",
                    f"parasitics.{f.name}",
                )

    @classmethod
    def shipped(cls) -> "Parasitics":
        """Loss-model defaults.

        R_ds(on) and V_F are the datasheet values of the prototype parts.
        Winding resistance, ESR, transition times and output capacitance are
        not published for the prototype; the values here are plausible for
        the part classes and put the rated-load efficiency at 96 %.
        """
        return cls(
            r_ds_on=7.5e-3,
            v_f=0.61,
            dcr=0.115,
            esr=0.01,
            t_on=20e-9,
            t_off=20e-9,
            c_oss=300e-12,
        )

    @property
    def is_ideal(self) -> bool:
        return all(getattr(self, f.name) == 0 for f in dataclasses.fields(self))


@dataclass(frozen=True)
class ConverterParams:
    """Electrical parameters of the two-phase multiplier converter (SI units)."""

    v_in: float = 30.0
    duty: float = 0.75
    f_sw: float = 100e3
    l1: float = 120e-6
    l2: float = 120e-6
    c1: float = 20e-6
    c2: float = 20e-6
    c3: float = 20e-6
    c4: float = 20e-6
    c_out: float = 0.0
    r_load: float = 640.0
    parasitics: Parasitics = field(default_factory=Parasitics)

    def __post_init__(self):
        for name in ("v_in", "duty", "f_sw", "l1", "l2", "c1", "c2", "c3", "c4", "c_out", "r_load"):
            _check_finite(name, getattr(self, name))
        # v_in = 0 is allowed: it is the trivial unexcited circuit.
        if self.v_in < 0:
            raise ConfigurationError(f"v_in must be >= 0, got {self.v_in}", "v_in")
        for name in ("f_sw", "l1", "l2", "c1", "c2", "c3", "c4", "r_load"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be > 0, got {getattr(self, name)}", name)
        if self.c_out < 0:
            raise ConfigurationError(f"c_out must be >= 0, got {self.c_out}", "c_out")
        if not 0.0 < self.duty < 1.0:
            raise ConfigurationError(f"duty must lie in (0, 1), got {self.duty}", "duty")
        if not isinstance(self.parasitics, Parasitics):
            raise ConfigurationError("parasitics must be a Parasitics instance", "parasitics")

    @classmethod
    def reference_design(cls, **overrides) -> "ConverterParams":
        """Reference operating point with the shipped loss-model parasitics."""
        overrides.setdefault("parasitics", Parasitics.shipped())
        return cls(**overrides)

    @property
    def period(self) -> float:
        return 1.0 / self.f_sw

    def replace(self, **changes) -> "ConverterParams":
        return dataclasses.replace(self, **changes)

    def ideal(self) -> "ConverterParams":
        """Copy with every parasitic set to zero."""
        return dataclasses.replace(self, parasitics=Parasitics())

    def swapped_legs(self) -> "ConverterParams":
        """Mirror image: phase 1 and phase 2 exchange roles."""
        return dataclasses.replace(
            self, l1=self.l2, l2=self.l1, c1=self.c4, c4=self.c1, c2=self.c3, c3=self.c2
        )


@dataclass(frozen=True)
class ComponentLibraryEntry:
    part: str
    role: str
    parasitics: dict


COMPONENT_LIBRARY = {
    "IPA075N15N3GXKSA1": ComponentLibraryEntry(
        "IPA075N15N3GXKSA1", "switch", {"r_ds_on": 7.5e-3}
    ),
    "40CPQ100": ComponentLibraryEntry("40CPQ100", "diode", {"v_f": 0.61}),
    "TVA1966-E3": ComponentLibraryEntry("TVA1966-E3", "capacitor", {}),
}

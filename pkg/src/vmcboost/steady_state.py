"""Closed-form steady state of the ideal converter and the inverse design.

Everything here is lossless by construction: parasitic effects are
handled only by the loss model, so these values can serve as an
independent reference for simulation results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InfeasibleTargetError
from .params import ConverterParams, check_duty

__all__ = [
    "OperatingPoint",
    "output_voltage",
    "capacitor_voltages",
    "switch_stress",
    "diode_stress",
    "avg_inductor_current",
    "inductor_ripple",
    "input_ripple_estimate",
    "analytic_operating_point",
    "solve_duty",
    "DesignResult",
    "design_for",
]


@dataclass(frozen=True)
class OperatingPoint:
    v_out: float
    v_c1: float
    v_c2: float
    v_c3: float
    v_c4: float
    v_sw: float
    v_d: float
    i_out: float
    i_l_avg: float
    i_in_avg: float
    delta_i_l: float
    delta_i_in: float
    p_out: float


def switch_stress(v_in, duty):
    """Off-state voltage of either switch, v_in / (1 - D)."""
    check_duty(duty)
    return v_in / (1.0 - duty)


def output_voltage(v_in, duty):
    """Ideal output voltage, four times the switch stress."""
    return 4.0 * switch_stress(v_in, duty)


def capacitor_voltages(v_in, duty):
    """(v_c1, v_c2, v_c3, v_c4): the inner pair clamps to the switch
    stress, the outer pair to twice it."""
    v = switch_stress(v_in, duty)
    return 2.0 * v, v, v, 2.0 * v


def diode_stress(v_in, duty):
    """Reverse voltage blocked by every diode."""
    return 2.0 * switch_stress(v_in, duty)


def avg_inductor_current(i_out, duty):
    check_duty(duty)
    if i_out < 0:
        raise ConfigurationError(f"i_out must be >= 0, got {i_out}", "i_out")
    return 2.0 * i_out / (1.0 - duty)


def inductor_ripple(v_in, duty, l, f_sw):
    """Peak-to-peak inductor current ripple over the switch-on interval."""
    check_duty(duty)
    if l <= 0 or f_sw <= 0:
        raise ConfigurationError("l and f_sw must be > 0", "l" if l <= 0 else "f_sw")
    return v_in * duty / (l * f_sw)


def input_ripple_estimate(params: ConverterParams):
    """Peak-to-peak ripple of i_L1 + i_L2 from the superposed triangles.

    Each inductor rises at v_in/l while its switch conducts and falls at
    (v_in - v_sw)/l otherwise; phase 2 lags by half a period.
    """
    d = params.duty
    check_duty(d)
    T = params.period
    v_sw = switch_stress(params.v_in, d)
    edges = sorted({0.0, d, 0.5, (0.5 + d) % 1.0, 1.0})
    i = [0.0]
    for a, b in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (a + b)
        on1 = mid < d
        on2 = ((mid - 0.5) % 1.0) < d
        slope = (params.v_in - (0.0 if on1 else v_sw)) / params.l1
        slope += (params.v_in - (0.0 if on2 else v_sw)) / params.l2
        i.append(i[-1] + slope * (b - a) * T)
    i = np.array(i)
    return float(i.max() - i.min())


def analytic_operating_point(params: ConverterParams) -> OperatingPoint:
    v_in, d = params.v_in, params.duty
    v_c1, v_c2, v_c3, v_c4 = capacitor_voltages(v_in, d)
    v_out = v_c1 + v_c4
    i_out = v_out / params.r_load
    p_out = v_out * i_out
    return OperatingPoint(
        v_out=v_out,
        v_c1=v_c1,
        v_c2=v_c2,
        v_c3=v_c3,
        v_c4=v_c4,
        v_sw=switch_stress(v_in, d),
        v_d=diode_stress(v_in, d),
        i_out=i_out,
        i_l_avg=avg_inductor_current(i_out, d),
        i_in_avg=p_out / v_in if v_in > 0 else 0.0,
        delta_i_l=inductor_ripple(v_in, d, params.l1, params.f_sw),
        delta_i_in=input_ripple_estimate(params),
        p_out=p_out,
    )


def solve_duty(v_in, v_out_target):
    """Duty giving ``v_out_target`` from ``v_in`` in three-mode operation."""
    if not v_in > 0:
        raise ConfigurationError(f"v_in must be > 0, got {v_in}", "v_in")
    duty = 1.0 - 4.0 * v_in / v_out_target if v_out_target > 0 else 0.0
    # the duty test also catches targets within rounding of the boundary
    if not (v_out_target > 8.0 * v_in and duty > 0.5):
        raise InfeasibleTargetError(
            f"target {v_out_target} V needs a gain of {v_out_target / v_in:.4g}; three-mode "
            f"operation requires a gain above 8 (more than {8.0 * v_in:g} V from {v_in:g} V)",
            "v_out_target",
        )
    return duty


@dataclass(frozen=True)
class DesignResult:
    duty: float
    operating_point: OperatingPoint
    margin: float
    ratings: dict  # device class -> {"voltage": V, "current": A}


def design_for(params: ConverterParams, v_out_target, margin=0.25) -> DesignResult:
    """Duty for ``v_out_target`` and the device ratings it implies.

    Ratings are the ideal stresses scaled by (1 + margin): blocking voltage
    and peak current for switches and inductors, reverse voltage and
    average current for diodes, working voltage for each capacitor.
    """
    if not margin >= 0:
        raise ConfigurationError(f"margin must be >= 0, got {margin}", "margin")
    duty = solve_duty(params.v_in, v_out_target)
    op = analytic_operating_point(params.replace(duty=duty))
    k = 1.0 + margin
    i_peak = op.i_l_avg + op.delta_i_l / 2
    ratings = {
        "switch": {"voltage": k * op.v_sw, "current": k * i_peak},
        "diode": {"voltage": k * op.v_d, "current": k * op.i_out},
        "inductor": {"current": k * i_peak},
        "capacitor_inner": {"voltage": k * op.v_c2},
        "capacitor_outer": {"voltage": k * op.v_c1},
    }
    return DesignResult(duty=duty, operating_point=op, margin=margin, ratings=ratings)

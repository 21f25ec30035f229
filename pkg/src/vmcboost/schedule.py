"""Interleaved gate timing and the mode sequence it induces."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ConfigurationError
from .params import check_duty

__all__ = ["Tile", "GateSchedule", "gate_schedule", "mode_of_gates", "DUTY_DENOMINATOR"]

# Duty is snapped to a rational with this bounded denominator so that every
# tile is an exact fraction of the period and sample grids can align to it.
DUTY_DENOMINATOR = 1000


def mode_of_gates(s1_on, s2_on):
    """Operating mode for a pair of gate states."""
    if s1_on and s2_on:
        return "I"
    if s2_on:
        return "II"
    if s1_on:
        return "III"
    raise ConfigurationError("both switches off is not a mode of this converter")


@dataclass(frozen=True)
class Tile:
    mode: str
    t_start: float
    duration: float
    fraction: Fraction  # duration / period, exact


@dataclass(frozen=True)
class GateSchedule:
    period: float
    duty: Fraction
    tiles: tuple

    def occupancy(self):
        """Total time spent in each mode over one period."""
        out = {"I": 0.0, "II": 0.0, "III": 0.0}
        for tile in self.tiles:
            out[tile.mode] += tile.duration
        return out

    def gates(self, t):
        """Gate states (S1, S2) at time ``t``."""
        phase = Fraction(t / self.period).limit_denominator(10**9) % 1
        s1 = phase < self.duty
        s2 = (phase - Fraction(1, 2)) % 1 < self.duty
        return bool(s1), bool(s2)


def gate_schedule(duty, f_sw):
    """Build the 180-degree interleaved schedule.

    S1 conducts on [0, D*T) and S2 on [T/2, T/2 + D*T) modulo T.  For
    0.5 < D < 1 this yields the sequence I, III, I, II.
    """
    check_duty(duty)
    if not f_sw > 0:
        raise ConfigurationError(f"f_sw must be > 0, got {f_sw}", "f_sw")
    d = Fraction(duty).limit_denominator(DUTY_DENOMINATOR)
    half = Fraction(1, 2)
    edges = sorted({Fraction(0), d, half, (half + d) % 1, Fraction(1)})
    period = 1.0 / f_sw
    tiles = []
    for a, b in zip(edges[:-1], edges[1:]):
        mid = (a + b) / 2
        s1 = mid < d
        s2 = (mid - half) % 1 < d
        tiles.append(Tile(mode_of_gates(s1, s2), float(a) * period, float(b - a) * period, b - a))
    return GateSchedule(period=period, duty=d, tiles=tuple(tiles))

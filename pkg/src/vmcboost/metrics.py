"""Averages, RMS, ripple, device stresses and balance checks of periodic
waveforms.

Integrals use the trapezoidal rule on each smooth piece: an interval
starts from the right limit of its first sample and ends at the left limit
of its last one, so steps at tile boundaries and diode turn-on instants
are integrated without bias.  Instantaneous charge (impulses) counts
toward the mean only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError

__all__ = [
    "PeriodicMetrics",
    "BalanceReport",
    "periodic_metrics",
    "column_metrics",
    "stress_report",
    "balance_checks",
    "mean_product",
]


@dataclass(frozen=True)
class PeriodicMetrics:
    mean: float
    rms: float
    ripple_pp: float
    min: float
    max: float


@dataclass
class BalanceReport:
    volt_second: dict = field(default_factory=dict)  # per inductor, normalized
    charge: dict = field(default_factory=dict)  # per capacitor, normalized
    power_residual: float = 0.0

    def worst(self):
        vals = list(self.volt_second.values()) + list(self.charge.values()) + [self.power_residual]
        return max(abs(v) for v in vals)


def _times(n, dt):
    if np.ndim(dt) == 0:
        if not dt > 0:
            raise PreconditionError(f"dt must be > 0, got {dt}")
        return np.arange(n) * float(dt)
    t = np.asarray(dt, dtype=float)
    if t.shape != (n,):
        raise PreconditionError(f"time array has {t.size} entries, series has {n}")
    return t


def _pieces(column, dt, jumps):
    y = np.asarray(column, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise PreconditionError("series must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(y)):
        raise PreconditionError("series contains non-finite samples")
    t = _times(y.size, dt)
    j = np.zeros_like(y) if jumps is None else np.asarray(jumps, dtype=float)
    left, right = y - j / 2, y + j / 2
    return t, left, right


def periodic_metrics(column, dt, jumps=None, impulses=None) -> PeriodicMetrics:
    """Mean, RMS and extremes of one period of a sampled signal.

    ``dt`` is the uniform sample spacing or the array of sample times.
    A series with a single sample is treated as a constant.
    """
    t, left, right = _pieces(column, dt, jumps)
    lo = float(min(left.min(), right.min()))
    hi = float(max(left.max(), right.max()))
    if t.size == 1 or t[-1] == t[0]:
        v = float(right[0])
        return PeriodicMetrics(v, abs(v), 0.0, v, v)
    d = np.diff(t)
    a, b = right[:-1], left[1:]
    T = t[-1] - t[0]
    integral = float(np.sum(d * (a + b)) / 2)
    square = float(np.sum(d * (a * a + b * b)) / 2)
    rms = math.sqrt(max(square / T, 0.0))
    if impulses is not None:
        q = np.asarray(impulses, dtype=float)
        integral += float(q.sum())
        # numerically negligible charge is ignored for the extremes and RMS
        tiny = 1e-9 * T * max(abs(lo), abs(hi), 1e-12)
        if np.any(q > tiny):
            hi, rms = math.inf, math.inf
        if np.any(q < -tiny):
            lo, rms = -math.inf, math.inf
    mean = integral / T
    # exact-arithmetic bounds can be crossed by rounding
    mean = min(max(mean, lo), hi)
    if math.isfinite(rms):
        rms = max(rms, abs(mean))
    return PeriodicMetrics(mean=mean, rms=rms, ripple_pp=hi - lo, min=lo, max=hi)


def column_metrics(waveforms, name) -> PeriodicMetrics:
    """:func:`periodic_metrics` of a named column of a WaveformSet."""
    if name not in waveforms.columns:
        raise PreconditionError(f"waveform set has no column {name!r}")
    return periodic_metrics(
        waveforms.columns[name], waveforms.t, waveforms.jumps.get(name), waveforms.impulses.get(name)
    )


def mean_product(waveforms, a, b):
    """Period average of the product of two columns (e.g. instantaneous power)."""
    t = waveforms.t
    la, ra = waveforms.limits(a)
    lb, rb = waveforms.limits(b)
    d = np.diff(t)
    T = t[-1] - t[0]
    if T <= 0:
        return float(ra[0] * rb[0])
    return float(np.sum(d * (ra[:-1] * rb[:-1] + la[1:] * lb[1:])) / 2 / T)


def _require(waveforms, names):
    for name in names:
        if name not in waveforms.columns:
            raise PreconditionError(f"waveform set has no column {name!r}")


def stress_report(waveforms) -> dict:
    """Peak off-state voltage of every switch and diode, mean current of each."""
    devices = {"S1": ("vsw1", "isw1"), "S2": ("vsw2", "isw2")}
    devices.update({f"D{k}": (f"vd{k}", f"id{k}") for k in range(1, 5)})
    _require(waveforms, [v for v, _ in devices.values()] + [f"id{k}" for k in range(1, 5)])
    report = {}
    for dev, (v, i) in devices.items():
        entry = {"peak_voltage": column_metrics(waveforms, v).max}
        if i in waveforms.columns:
            entry["mean_current"] = column_metrics(waveforms, i).mean
        report[dev] = entry
    return report


def balance_checks(waveforms, params, p_loss=0.0) -> BalanceReport:
    """Steady-state residuals over one period.

    Volt-seconds per inductor are normalized by v_in T, charge per capacitor
    by i_out T, and the power residual (P_in - P_out - p_loss) by P_in.  A
    zero normalizer (unexcited circuit) leaves the raw value.
    """
    _require(waveforms, ["iin", "vout", "iout"])
    T = waveforms.duration
    v_in = params.v_in
    report = BalanceReport()
    vs_norm = v_in * T if v_in * T > 0 else 1.0
    for k in (1, 2):
        name = f"vL{k}"
        if name in waveforms.columns:
            report.volt_second[f"L{k}"] = column_metrics(waveforms, name).mean * T / vs_norm
    i_out = column_metrics(waveforms, "iout").mean
    q_norm = abs(i_out) * T if abs(i_out) * T > 0 else 1.0
    for k in range(1, 6):
        name = f"iC{k}" if k < 5 else "iCout"
        if name in waveforms.columns:
            report.charge[name[1:]] = column_metrics(waveforms, name).mean * T / q_norm
    p_in = v_in * column_metrics(waveforms, "iin").mean
    p_out = mean_product(waveforms, "vout", "iout")
    report.power_residual = (p_in - p_out - p_loss) / p_in if p_in != 0 else p_in - p_out - p_loss
    return report

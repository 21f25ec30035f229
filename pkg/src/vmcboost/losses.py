"""Loss itemization, efficiency and efficiency-vs-load sweeps.

Every category is evaluated from simulated waveforms: RMS currents for the
resistive terms, average currents for the diode forward drop, and the
switch blocking voltage with the average inductor current for the
transition losses.  The converter is simulated with its resistive
parasitics and forward drops in the dynamics, so the same waveforms also
give a measured input and output power.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import metrics as mt
from . import steady_state as ss
from .errors import ConfigurationError, PreconditionError
from .model import build_proposed_converter
from .params import ConverterParams, check_duty
from .schedule import DUTY_DENOMINATOR, gate_schedule
from .simulation import SimConfig, check_diode_consistency, run_to_steady_state

__all__ = [
    "CATEGORIES",
    "LossReport",
    "SweepPoint",
    "inductor_dcr_loss",
    "switch_conduction_loss",
    "switch_switching_loss",
    "switch_output_capacitance_loss",
    "diode_conduction_loss",
    "capacitor_esr_loss",
    "loss_breakdown",
    "lossy_steady_state",
    "rated_operating_point",
    "efficiency_sweep",
]

CATEGORIES = ("inductor_dcr", "switch_conduction", "switch_switching", "diode", "capacitor_esr")

# steady-state settings for loss evaluation: Newton shooting from the analytic point
LOSS_SIM = SimConfig(method="shooting", initial_state="analytic-preload", steady_tol=1e-10, max_cycles=400)


def _check(**values):
    for name, v in values.items():
        arr = np.atleast_1d(np.asarray(v, dtype=float))
        if not np.all(np.isfinite(arr)):
            raise ConfigurationError(f"{name} must be finite, got {v!r}", name)
        if np.any(arr < 0):
            raise ConfigurationError(f"{name} must be >= 0, got {v!r}", name)


def _per_device(value, count):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        return np.repeat(arr, count)
    return arr


def inductor_dcr_loss(i_rms, dcr, count=2):
    """Winding loss: count * i_rms**2 * dcr, or the sum over per-inductor RMS values."""
    _check(i_rms=i_rms, dcr=dcr, count=count)
    i = _per_device(i_rms, count)
    return float(np.sum(i * i) * dcr)


def switch_conduction_loss(r_ds_on, i_s1_rms, i_s2_rms):
    _check(r_ds_on=r_ds_on, i_s1_rms=i_s1_rms, i_s2_rms=i_s2_rms)
    return float(r_ds_on * (i_s1_rms ** 2 + i_s2_rms ** 2))


def switch_switching_loss(v_s, i_l_avg, t_on, t_off, f_sw, switches=2):
    """Hard-switching transition loss summed over the switches.

    ``v_s`` and ``i_l_avg`` are scalars shared by every switch or one value
    per switch.
    """
    _check(v_s=v_s, i_l_avg=i_l_avg, t_on=t_on, t_off=t_off, f_sw=f_sw, switches=switches)
    v = _per_device(v_s, switches)
    i = _per_device(i_l_avg, switches)
    return float(np.sum(v * i) * (t_on + t_off) * f_sw / 2)


def switch_output_capacitance_loss(c_oss, v_s, f_sw, switches=2):
    """Energy of the switch output capacitance dumped at every turn-on."""
    _check(c_oss=c_oss, v_s=v_s, f_sw=f_sw, switches=switches)
    v = _per_device(v_s, switches)
    return float(0.5 * c_oss * np.sum(v * v) * f_sw)


def diode_conduction_loss(v_f, i_d_avg, diode_count=4):
    _check(v_f=v_f, i_d_avg=i_d_avg, diode_count=diode_count)
    i = _per_device(i_d_avg, diode_count)
    return float(v_f * np.sum(i))


def capacitor_esr_loss(i_c_rms, esr):
    _check(i_c_rms=i_c_rms, esr=esr)
    i = np.atleast_1d(np.asarray(i_c_rms, dtype=float))
    return float(np.sum(i * i) * esr)


@dataclass(frozen=True)
class LossReport:
    p_inductor_dcr: float
    p_switch_conduction: float
    p_switch_switching: float
    p_diode: float
    p_capacitor_esr: float
    p_total: float
    shares: dict
    efficiency: float  # p_out / (p_out + p_total)
    p_out: float
    p_in_simulated: float
    efficiency_simulated: float  # measured P_out / P_in of the simulated circuit
    lossless: bool
    duty: float
    r_load: float

    def items(self):
        return {c: getattr(self, "p_" + c) for c in CATEGORIES}

    def as_dict(self):
        return asdict(self)


def loss_breakdown(params: ConverterParams, steady) -> LossReport:
    """Itemized losses of a converged steady-state period."""
    if not steady.converged:
        raise PreconditionError("loss breakdown needs a converged steady state")
    wf = steady.final_cycle
    par = params.parasitics
    m = {name: mt.column_metrics(wf, name) for name in wf.columns}
    caps = [n for n in ("iC1", "iC2", "iC3", "iC4", "iCout") if n in m]
    cap_rms = [m[n].rms for n in caps]
    if par.esr > 0 and not all(math.isfinite(v) for v in cap_rms):
        raise PreconditionError(
            "capacitor currents contain instantaneous charge transfers; "
            "simulate with the ESR in the dynamics to evaluate ESR loss"
        )
    v_s = [m["vsw1"].max, m["vsw2"].max]
    i_l = [m["iL1"].mean, m["iL2"].mean]
    items = {
        "inductor_dcr": inductor_dcr_loss([m["iL1"].rms, m["iL2"].rms], par.dcr),
        "switch_conduction": switch_conduction_loss(par.r_ds_on, m["isw1"].rms, m["isw2"].rms),
        "switch_switching": switch_switching_loss(v_s, i_l, par.t_on, par.t_off, params.f_sw)
        + switch_output_capacitance_loss(par.c_oss, v_s, params.f_sw),
        "diode": diode_conduction_loss(par.v_f, [max(m[f"id{k}"].mean, 0.0) for k in range(1, 5)]),
        "capacitor_esr": capacitor_esr_loss(cap_rms, par.esr) if par.esr > 0 else 0.0,
    }
    p_total = sum(items.values())
    lossless = p_total == 0
    shares = {c: (0.0 if lossless else v / p_total) for c, v in items.items()}
    p_out = mt.mean_product(wf, "vout", "iout")
    p_in = params.v_in * m["iin"].mean
    efficiency = 1.0 if lossless else p_out / (p_out + p_total)
    eff_sim = p_out / p_in if p_in > 0 else math.nan
    return LossReport(
        p_inductor_dcr=items["inductor_dcr"],
        p_switch_conduction=items["switch_conduction"],
        p_switch_switching=items["switch_switching"],
        p_diode=items["diode"],
        p_capacitor_esr=items["capacitor_esr"],
        p_total=p_total,
        shares=shares,
        efficiency=efficiency,
        p_out=p_out,
        p_in_simulated=p_in,
        efficiency_simulated=eff_sim,
        lossless=lossless,
        duty=float(gate_schedule(params.duty, params.f_sw).duty),
        r_load=params.r_load,
    )


def lossy_steady_state(params: ConverterParams, config: SimConfig = None):
    """Steady state with every resistive parasitic and forward drop in the dynamics."""
    model = build_proposed_converter(params, include_parasitics=True)
    schedule = gate_schedule(params.duty, params.f_sw)
    return model, run_to_steady_state(model, schedule, params, config or LOSS_SIM)


def _mean_vout(params, config):
    _, res = lossy_steady_state(params, config)
    if not res.converged:
        raise PreconditionError(f"steady state not reached at duty {params.duty}")
    return mt.column_metrics(res.final_cycle, "vout").mean, res


def rated_operating_point(params: ConverterParams, v_out_target=None, config: SimConfig = None):
    """Trim the duty so the lossy converter delivers ``v_out_target``.

    The default target is the ideal output voltage at ``params.duty``, so
    the trimmed point carries the rated load current.  The duty is kept on
    the schedule's 1/1000 grid; the grid point closest to the target wins.
    Returns ``(trimmed_params, steady_state_result)``.
    """
    if v_out_target is None:
        v_out_target = ss.output_voltage(params.v_in, params.duty)
    if not v_out_target > 0:
        raise ConfigurationError("v_out_target must be > 0", "v_out_target")
    config = config or LOSS_SIM
    d0 = params.duty
    v0, res0 = _mean_vout(params, config)
    if params.v_in == 0 or params.parasitics.is_ideal:
        return params, res0
    # secant on the duty; the ideal gain law supplies the first slope
    d1 = 1.0 - (1.0 - d0) * v0 / v_out_target
    d1 = min(max(d1, 0.5 + 1.0 / DUTY_DENOMINATOR), 1.0 - 1.0 / DUTY_DENOMINATOR)
    pts = [(d0, v0)]
    d = d1
    for _ in range(12):
        v, _ = _mean_vout(params.replace(duty=d), config)
        pts.append((d, v))
        (da, va), (db, vb) = pts[-2], pts[-1]
        if abs(vb - v_out_target) < 1e-6 * v_out_target or vb == va:
            break
        d = db + (v_out_target - vb) * (db - da) / (vb - va)
        d = min(max(d, 0.5 + 1.0 / DUTY_DENOMINATOR), 1.0 - 1.0 / DUTY_DENOMINATOR)
    lo = math.floor(d * DUTY_DENOMINATOR) / DUTY_DENOMINATOR
    best = None
    for cand in (lo, lo + 1.0 / DUTY_DENOMINATOR):
        try:
            check_duty(cand)
        except ConfigurationError:
            continue
        p = params.replace(duty=cand)
        v, res = _mean_vout(p, config)
        if best is None or abs(v - v_out_target) < best[0]:
            best = (abs(v - v_out_target), p, res)
    return best[1], best[2]


@dataclass(frozen=True)
class SweepPoint:
    p_out_target: float
    p_out: float = math.nan
    efficiency: float = math.nan
    r_load: float = math.nan
    report: LossReport = None
    warning: str = ""


def _sweep_point(params, p_target, v_nominal, config):
    if not (isinstance(p_target, (int, float)) and math.isfinite(p_target) and p_target > 0):
        return SweepPoint(float(p_target) if isinstance(p_target, (int, float)) else math.nan,
                          warning=f"skipped: output power {p_target!r} is not realizable")
    r_load = v_nominal ** 2 / p_target
    p = params.replace(r_load=r_load)
    model, res = lossy_steady_state(p, config)
    if not res.converged:
        return SweepPoint(p_target, r_load=r_load, warning="skipped: steady state not reached")
    report = loss_breakdown(p, res)
    warning = ""
    consistency = check_diode_consistency(model, res, tol_i=1e-4, tol_v=1e-4)
    if not consistency.ok:
        warning = "imposed conduction pattern violated (discontinuous conduction)"
    return SweepPoint(p_target, report.p_out, report.efficiency, r_load, report, warning)


def efficiency_sweep(params: ConverterParams, p_out_range, v_out_nominal=None, config: SimConfig = None,
                     max_workers=None):
    """Efficiency over a list of output powers at fixed duty.

    Each point sets r_load = v_out_nominal**2 / p_out (default nominal: the
    ideal output voltage at ``params.duty``).  Points run concurrently and
    come back in input order; unrealizable points carry a warning instead
    of numbers.
    """
    if v_out_nominal is None:
        v_out_nominal = ss.output_voltage(params.v_in, params.duty)
    config = config or LOSS_SIM
    targets = list(p_out_range)
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        points = list(pool.map(lambda p: _sweep_point(params, p, v_out_nominal, config), targets))
    for pt in points:
        if pt.warning:
            warnings.warn(f"sweep point {pt.p_out_target} W: {pt.warning}", RuntimeWarning, stacklevel=2)
    return points

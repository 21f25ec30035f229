"""Time-domain simulation of the switched model.

Each tile of the gate schedule is advanced with the exact discretization
of its linear mode (matrix exponential of the input-augmented system).

Entering Mode II or III closes a capacitor loop.  If the loop voltages
disagree, the loop diode that would have to carry reverse charge is held
off and the tile starts in the corresponding held variant; the diode joins
as soon as its forward voltage reaches V_F (located by Newton iteration on
the exact solution).  Any remaining mismatch on entry is removed by ideal
charge sharing and kept as an impulse on the affected current signals, so
averages and charge balance stay exact.

Samples lie on a uniform grid of ``samples_per_period`` points per period,
aligned with every tile boundary, plus one extra sample at each diode
turn-on instant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, NumericalError, PreconditionError
from .model import DIODES, SwitchedModel
from .params import ConverterParams
from .schedule import GateSchedule
from . import steady_state as ss

__all__ = [
    "CSV_COLUMNS",
    "SimConfig",
    "WaveformSet",
    "SteadyStateResult",
    "ConsistencyReport",
    "step_mode",
    "simulate",
    "period_map",
    "initial_state",
    "run_to_steady_state",
    "check_diode_consistency",
    "rk4_reference",
    "exact_reference",
]

CSV_COLUMNS = (
    "t", "iL1", "iL2", "vC1", "vC2", "vC3", "vC4", "vout", "iin",
    "vsw1", "vsw2", "vd1", "vd2", "vd3", "vd4", "id1", "id2", "id3", "id4",
)

# coarse sub-steps per tile used to bracket a diode turn-on when nothing is recorded
_BRACKET_STEPS = 8


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``method`` selects how ``run_to_steady_state`` reaches the periodic
    state: "iterate" applies whole periods until the snapshot settles,
    "shooting" solves x = P(x) by Newton's method on the period map.
    """

    samples_per_period: int = 512
    max_cycles: int = 100_000
    steady_tol: float = 1e-6
    initial_state: object = "zero"  # "zero", "analytic-preload" or a state vector
    record_cycles: int = 1
    method: str = "iterate"

    def __post_init__(self):
        if not _is_int(self.samples_per_period) or self.samples_per_period < 64:
            raise ConfigurationError("samples_per_period must be an integer >= 64", "samples_per_period")
        if not _is_int(self.max_cycles) or self.max_cycles < 1:
            raise ConfigurationError("max_cycles must be a positive integer", "max_cycles")
        if not (isinstance(self.steady_tol, (int, float)) and self.steady_tol > 0):
            raise ConfigurationError("steady_tol must be > 0", "steady_tol")
        if not _is_int(self.record_cycles) or self.record_cycles < 1:
            raise ConfigurationError("record_cycles must be a positive integer", "record_cycles")
        if isinstance(self.initial_state, str) and self.initial_state not in ("zero", "analytic-preload"):
            raise ConfigurationError(
                f"initial_state must be 'zero', 'analytic-preload' or a vector, got {self.initial_state!r}",
                "initial_state",
            )
        if self.method not in ("iterate", "shooting"):
            raise ConfigurationError(f"method must be 'iterate' or 'shooting', got {self.method!r}", "method")


def _is_int(v):
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


@dataclass
class WaveformSet:
    """Sampled signals.

    Where a signal steps, the stored sample is the mean of its one-sided
    limits and ``jumps`` holds right minus left limit.  ``impulses`` holds
    the charge a current signal carries instantaneously at a sample.
    ``segments`` lists ``(mode, first_index, last_index)`` per tile and
    ``events`` lists ``(time, mode, diode)`` for every delayed diode turn-on.
    """

    t: np.ndarray
    dt: float
    columns: dict
    jumps: dict = field(default_factory=dict)
    impulses: dict = field(default_factory=dict)
    segments: list = field(default_factory=list)
    events: list = field(default_factory=list)
    on_grid: np.ndarray = None
    v_in: float = 0.0
    v_f: float = 0.0

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        if self.on_grid is None:
            self.on_grid = np.ones(len(self.t), dtype=bool)
        for name, col in self.columns.items():
            if len(col) != len(self.t):
                raise PreconditionError(f"column {name} has {len(col)} samples, expected {len(self.t)}")

    def __len__(self):
        return len(self.t)

    @property
    def t0(self):
        return float(self.t[0])

    @property
    def duration(self):
        return float(self.t[-1] - self.t[0])

    def __getitem__(self, name):
        return self.columns[name]

    def __contains__(self, name):
        return name in self.columns

    def limits(self, name):
        """Left and right limits of a column at every sample."""
        y = self.columns[name]
        j = self.jumps.get(name)
        if j is None:
            return y, y
        return y - j / 2, y + j / 2

    def to_csv(self, path_or_buffer):
        """Write the waveform CSV (one row per sample, header per CSV_COLUMNS)."""
        missing = [c for c in CSV_COLUMNS[1:] if c not in self.columns]
        if missing:
            raise PreconditionError(f"waveform set lacks CSV columns {missing}")
        data = np.column_stack([self.t] + [self.columns[c] for c in CSV_COLUMNS[1:]])
        lines = [",".join(CSV_COLUMNS)]
        lines += [",".join(repr(float(v)) for v in row) for row in data]
        text = "\n".join(lines) + "\n"
        if hasattr(path_or_buffer, "write"):
            path_or_buffer.write(text)
        else:
            with open(path_or_buffer, "w", newline="") as fh:
                fh.write(text)


@dataclass
class SteadyStateResult:
    converged: bool
    cycles_used: int
    final_cycle: WaveformSet
    state_snapshot: np.ndarray
    last_change: float = math.nan


@dataclass
class ConsistencyReport:
    violations: list = field(default_factory=list)  # (time, device, kind, value)
    delayed_turn_on: list = field(default_factory=list)  # (time, mode, diode)

    @property
    def ok(self):
        return not self.violations


def _flows(model):
    cache = model.__dict__.get("_flow_cache")
    if cache is None:
        cache = {}
        object.__setattr__(model, "_flow_cache", cache)
    return cache


def _flow_matrices(model, key, h, cache=True):
    """(Phi, Gamma) with x(h) = Phi x(0) + Gamma [v_in, v_f]."""
    store = _flows(model)
    k = (key, float(h))
    hit = store.get(k) if cache else None
    if hit is None:
        dyn = model.dynamics(key)
        n = dyn.A.shape[0]
        M = np.zeros((n + 2, n + 2))
        M[:n, :n] = dyn.A
        M[:n, n] = dyn.b
        M[:n, n + 1] = dyn.e
        E = scipy.linalg.expm(M * h)
        hit = (E[:n, :n], E[:n, n:])
        if cache:
            store[k] = hit
    return hit


def step_mode(model: SwitchedModel, mode_id, x, v_in, dt):
    """Advance ``x`` by ``dt`` seconds inside one mode, exactly."""
    if mode_id not in model.modes and mode_id not in model.held:
        raise ConfigurationError(f"unknown mode {mode_id!r}", "mode")
    if not dt >= 0:
        raise ConfigurationError("dt must be >= 0", "dt")
    x = np.asarray(x, dtype=float)
    if dt == 0:
        return x.copy()
    phi, gam = _flow_matrices(model, mode_id, dt)
    out = phi @ x + gam @ np.array([v_in, model.v_f])
    if not np.all(np.isfinite(out)):
        raise NumericalError(f"non-finite state in mode {mode_id}", mode=mode_id, time=dt)
    return out


class _Recorder:
    def __init__(self):
        self.t, self.kl, self.xl, self.kr, self.xr, self.imp, self.grid = [], [], [], [], [], [], []

    def add(self, t, kl, xl, kr=None, xr=None, imp=None, grid=True):
        self.t.append(t)
        self.kl.append(kl)
        self.xl.append(xl)
        self.kr.append(kl if kr is None else kr)
        self.xr.append(xl if xr is None else xr)
        self.imp.append(imp)
        self.grid.append(grid)


class _Engine:
    def __init__(self, model: SwitchedModel, schedule: GateSchedule, v_in):
        self.model = model
        self.schedule = schedule
        self.u = np.array([float(v_in), model.v_f])
        self._cache = {}
        self.events = []
        self._ind = [i for i, n in enumerate(model.state_names) if n.startswith("i")]

    def flow(self, key, h, cache=True):
        k = (key, float(h))
        hit = self._cache.get(k) if cache else None
        if hit is None:
            phi, gam = _flow_matrices(self.model, key, h, cache)
            hit = (phi, gam @ self.u)
            if cache:
                self._cache[k] = hit
        return hit

    def _current_scale(self, x):
        return float(np.sum(np.abs(x[self._ind]))) + 1e-3

    def _event_row(self, key):
        if isinstance(key, str):
            return None
        k = DIODES.index(key[1]) + 1
        c, d = self.model.held[key].observers[f"vd{k}"]
        # forward voltage beyond V_F; turn-on when it reaches zero
        return -c, -(d @ self.u) - self.model.v_f

    def _held_diode(self, mode, x):
        dyn = self.model.modes[mode]
        cands = [d for d in sorted(dyn.conduction_set) if (mode, d) in self.model.held]
        if not cands:
            return None
        scale = self._current_scale(x)
        score = {}
        for d in cands:
            name = f"id{DIODES.index(d) + 1}"
            if name in dyn.impulses:
                c, dd = dyn.impulses[name]
                score[d] = (c @ x + dd @ self.u) / (scale * self.schedule.period)
        if not score or min(score.values()) >= -1e-9:
            xr = dyn.entry @ x + dyn.entry_u @ self.u
            score = {}
            for d in cands:
                c, dd = dyn.observers[f"id{DIODES.index(d) + 1}"]
                score[d] = (c @ xr + dd @ self.u) / scale
        held = min(score, key=score.get)
        if score[held] >= -1e-9:
            return None
        c, g0 = self._event_row((mode, held))
        if c @ x + g0 >= 0:
            return None
        return held

    def enter(self, mode, x):
        held = self._held_diode(mode, x)
        key = mode if held is None else (mode, held)
        dyn = self.model.dynamics(key)
        imp = {n: c @ x + d @ self.u for n, (c, d) in dyn.impulses.items()}
        return key, dyn.entry @ x + dyn.entry_u @ self.u, imp

    def _locate(self, key, x, h, ev, g_hi):
        """Instant in (0, h] at which the event function crosses zero."""
        c, g0 = ev
        dyn = self.model.dynamics(key)
        bu = dyn.b * self.u[0] + dyn.e * self.u[1]
        g_lo = c @ x + g0
        lo, hi = 0.0, h
        s = h * (-g_lo) / (g_hi - g_lo)
        tol = 1e-12 * (abs(g0) + float(np.abs(c) @ np.abs(x)) + 1.0)
        for _ in range(60):
            phi, gam = self.flow(key, s, cache=False)
            xs = phi @ x + gam
            val = c @ xs + g0
            if val >= 0:
                hi = s
            else:
                lo = s
            if abs(val) <= tol or hi - lo <= 1e-15 * h:
                break
            deriv = c @ (dyn.A @ xs + bu)
            s_new = s - val / deriv if deriv != 0 else 0.5 * (lo + hi)
            s = s_new if lo < s_new < hi else 0.5 * (lo + hi)
        return s, xs

    def tile(self, x, mode, steps, h, prev_key, rec=None, t=0.0):
        key, xr, imp = self.enter(mode, x)
        if rec is not None:
            rec.add(t, prev_key, x, key, xr, imp)
        x = xr
        ev = self._event_row(key)
        for j in range(steps):
            phi, gam = self.flow(key, h)
            xn = phi @ x + gam
            if ev is not None:
                g_hi = ev[0] @ xn + ev[1]
                if g_hi >= 0:
                    s, xs = self._locate(key, x, h, ev, g_hi)
                    full = self.model.modes[mode]
                    xf = full.entry @ xs + full.entry_u @ self.u
                    imp2 = {n: c @ xs + d @ self.u for n, (c, d) in full.impulses.items()}
                    te = t + j * h + s
                    self.events.append((te, mode, key[1]))
                    if rec is not None:
                        rec.add(te, key, xs, mode, xf, imp2, grid=False)
                    key, ev = mode, None
                    if s < h:
                        phi, gam = self.flow(key, h - s, cache=False)
                        xn = phi @ xf + gam
                    else:
                        xn = xf
            if not np.all(np.isfinite(xn)):
                raise NumericalError(f"non-finite state in mode {mode}", mode=mode, time=t + (j + 1) * h)
            x = xn
            if rec is not None and j < steps - 1:
                rec.add(t + (j + 1) * h, key, x)
        return x, key

    def period(self, x):
        """One period without recording."""
        key = self.schedule.tiles[-1].mode
        for tile in self.schedule.tiles:
            held = self._held_diode(tile.mode, x)
            if held is None:
                dyn = self.model.modes[tile.mode]
                x = dyn.entry @ x + dyn.entry_u @ self.u
                phi, gam = self.flow(tile.mode, tile.duration)
                x = phi @ x + gam
                key = tile.mode
            else:
                x, key = self.tile(x, tile.mode, _BRACKET_STEPS, tile.duration / _BRACKET_STEPS, key)
        if not np.all(np.isfinite(x)):
            raise NumericalError("non-finite state at period boundary", mode=key)
        return x


def _grid(schedule: GateSchedule, samples_per_period):
    den = 1
    for tile in schedule.tiles:
        den = math.lcm(den, Fraction(tile.fraction).denominator)
    n = den * math.ceil(samples_per_period / den)
    counts = [int(tile.fraction * n) for tile in schedule.tiles]
    return n, counts


def period_map(model: SwitchedModel, schedule: GateSchedule, v_in):
    """Affine one-period map x(T) = M x(0) + c of the nominal mode sequence
    (no held diodes)."""
    u = np.array([v_in, model.v_f])
    n = model.state_dim
    M = np.eye(n)
    c = np.zeros(n)
    for tile in schedule.tiles:
        dyn = model.modes[tile.mode]
        M = dyn.entry @ M
        c = dyn.entry @ c + dyn.entry_u @ u
        phi, gam = _flow_matrices(model, tile.mode, tile.duration)
        M = phi @ M
        c = phi @ c + gam @ u
    return M, c


def initial_state(model: SwitchedModel, schedule: GateSchedule, params: ConverterParams, start):
    """Resolve the initial-state choice to a vector."""
    n = model.state_dim
    if isinstance(start, str):
        if start == "zero":
            return np.zeros(n)
        if start == "analytic-preload":
            return _preload(model, schedule, params)
        raise ConfigurationError(f"unknown initial state {start!r}", "initial_state")
    x = np.asarray(start, dtype=float)
    if x.shape != (n,) or not np.all(np.isfinite(x)):
        raise ConfigurationError(f"initial state must be a finite vector of length {n}", "initial_state")
    return x


def _preload(model, schedule, params):
    """Analytic capacitor voltages; inductor currents at the analytic average,
    placed on their ideal triangular ripple for t = 0."""
    duty = float(schedule.duty)
    op = ss.analytic_operating_point(params.replace(duty=duty))
    T = schedule.period
    values = {"vC1": op.v_c1, "vC2": op.v_c2, "vC3": op.v_c3, "vC4": op.v_c4, "vCout": op.v_out}
    # S1 turns on at t = 0 (current at its valley), S2 at T/2
    d1 = ss.inductor_ripple(params.v_in, duty, params.l1, params.f_sw)
    d2 = ss.inductor_ripple(params.v_in, duty, params.l2, params.f_sw)
    values["iL1"] = op.i_l_avg - d1 / 2
    values["iL2"] = op.i_l_avg - d2 / 2 + params.v_in / params.l2 * (T / 2)
    return np.array([values[name] for name in model.state_names])


def _record(model, schedule, x0, v_in, cycles, samples_per_period, t0=0.0):
    eng = _Engine(model, schedule, v_in)
    n_per, counts = _grid(schedule, samples_per_period)
    h = schedule.period / n_per
    rec = _Recorder()
    segments = []
    x = np.asarray(x0, dtype=float).copy()
    key = schedule.tiles[-1].mode
    idx = 0
    for cyc in range(cycles):
        for tile, count in zip(schedule.tiles, counts):
            start = len(rec.t)
            t = t0 + h * idx
            x, key = eng.tile(x, tile.mode, count, h, key, rec, t)
            idx += count
            segments.append((tile.mode, start, len(rec.t)))
    # closing boundary: right limit belongs to the first tile of the next period
    first = schedule.tiles[0].mode
    kr, xr, imp = eng.enter(first, x)
    rec.add(t0 + h * idx, key, x, kr, xr, imp)

    names = list(model.modes[first].observers)
    XL, XR = np.array(rec.xl), np.array(rec.xr)
    left = {k: np.empty(len(rec.t)) for k in names}
    right = {k: np.empty(len(rec.t)) for k in names}
    for keys, X, out in ((rec.kl, XL, left), (rec.kr, XR, right)):
        for dkey in dict.fromkeys(keys):
            rows = np.array([i for i, k in enumerate(keys) if k == dkey])
            dyn = model.dynamics(dkey)
            for name in names:
                c, d = dyn.observers[name]
                out[name][rows] = X[rows] @ c + d @ eng.u
    columns, jumps, imps = {}, {}, {}
    for name in names:
        columns[name] = 0.5 * (left[name] + right[name])
        j = right[name] - left[name]
        if np.any(j != 0):
            jumps[name] = j
    for i, imp in enumerate(rec.imp):
        for name, q in (imp or {}).items():
            if q != 0:
                imps.setdefault(name, np.zeros(len(rec.t)))[i] += q
    wf = WaveformSet(
        t=np.array(rec.t), dt=h, columns=columns, jumps=jumps, impulses=imps, segments=segments,
        events=list(eng.events), on_grid=np.array(rec.grid), v_in=v_in, v_f=model.v_f,
    )
    return wf, x


def simulate(model: SwitchedModel, schedule: GateSchedule, params: ConverterParams, config: SimConfig = None):
    """Run ``config.record_cycles`` periods from the configured initial state
    and return every sample."""
    config = config or SimConfig()
    x0 = initial_state(model, schedule, params, config.initial_state)
    wf, _ = _record(model, schedule, x0, params.v_in, config.record_cycles, config.samples_per_period)
    return wf


def _change(x_new, x_old):
    return float(np.max(np.abs(x_new - x_old) / np.maximum(np.abs(x_new), 1e-9)))


def _iterate(eng, x, config):
    change = math.inf
    cycles = 0
    while cycles < config.max_cycles:
        x_new = eng.period(x)
        cycles += 1
        change = _change(x_new, x)
        x = x_new
        if change < config.steady_tol:
            return x, True, cycles, change
    return x, False, cycles, change


def _shoot(eng, x, config):
    """Newton's method on x = P(x) with a finite-difference Jacobian.
    Every period evaluation counts as one cycle."""
    n = x.size
    cycles = 0
    change = math.inf
    while cycles < config.max_cycles:
        px = eng.period(x)
        cycles += 1
        change = _change(px, x)
        if change < config.steady_tol:
            return px, True, cycles, change
        if cycles + n >= config.max_cycles:
            return px, False, cycles, change
        J = np.empty((n, n))
        for i in range(n):
            step = 1e-6 * max(abs(x[i]), 1.0)
            xp = x.copy()
            xp[i] += step
            J[:, i] = (eng.period(xp) - px) / step
        cycles += n
        try:
            x = x - np.linalg.solve(J - np.eye(n), px - x)
        except np.linalg.LinAlgError:
            x = px
    return x, False, cycles, change


def run_to_steady_state(model, schedule, params, config: SimConfig = None):
    """Reach the periodic steady state and record its final period.

    Convergence: max_i |x_i(k+1) - x_i(k)| / max(|x_i(k+1)|, 1e-9) below
    ``steady_tol`` for successive period-boundary snapshots.  Hitting
    ``max_cycles`` first is reported, not raised.
    """
    config = config or SimConfig()
    eng = _Engine(model, schedule, params.v_in)
    x0 = initial_state(model, schedule, params, config.initial_state)
    solve = _iterate if config.method == "iterate" else _shoot
    x, converged, cycles, change = solve(eng, x0, config)
    wf, _ = _record(model, schedule, x, params.v_in, 1, config.samples_per_period,
                    t0=cycles * schedule.period)
    return SteadyStateResult(converged, cycles, wf, x.copy(), change)


def check_diode_consistency(model, result: SteadyStateResult, tol_i=1e-6, tol_v=1e-6):
    """Verify the imposed conduction pattern a posteriori.

    Tolerances are relative to the largest inductor current and the largest
    blocking voltage seen in the cycle.  A delayed turn-on inside a tile is
    legitimate and listed separately.
    """
    wf = result.final_cycle
    i_scale = max(np.max(np.abs(wf["iL1"])), np.max(np.abs(wf["iL2"])), 1e-12)
    v_scale = max(max(np.max(np.abs(wf[f"vd{k}"])) for k in range(1, 5)), 1e-12)
    ti = tol_i * i_scale
    tv = tol_v * v_scale + model.v_f
    t = wf.t
    report = ConsistencyReport(delayed_turn_on=list(wf.events))
    for mode, a, b in wf.segments:
        on = model.modes[mode].conduction_set
        for k, diode in enumerate(DIODES, start=1):
            if diode in on:
                lo, hi = wf.limits(f"id{k}")
                seg = np.concatenate(([hi[a]], wf[f"id{k}"][a + 1:b], [lo[b]]))
                for i in np.flatnonzero(seg < -ti):
                    report.violations.append((float(t[a + i]), diode, "reverse-current", float(seg[i])))
                imp = wf.impulses.get(f"id{k}")
                if imp is not None:
                    for i in np.flatnonzero(imp[a:b] < -ti * wf.dt):
                        report.violations.append((float(t[a + i]), diode, "reverse-charge", float(imp[a + i])))
            else:
                lo, hi = wf.limits(f"vd{k}")
                seg = np.concatenate(([hi[a]], wf[f"vd{k}"][a + 1:b], [lo[b]]))
                for i in np.flatnonzero(-seg > tv):
                    report.violations.append((float(t[a + i]), diode, "forward-bias", float(-seg[i])))
    return report


def rk4_reference(model, schedule, x0, v_in, substeps_per_sample=1000, samples_per_period=256):
    """Dense classical Runge-Kutta integration over one period of the nominal
    mode sequence, used as an independent check of the exact
    discretization.  Returns the state at every grid sample."""
    u = np.array([v_in, model.v_f])
    n_per, counts = _grid(schedule, samples_per_period)
    h = schedule.period / n_per / substeps_per_sample
    x = np.asarray(x0, dtype=float).copy()
    out = [x.copy()]
    for tile, count in zip(schedule.tiles, counts):
        dyn = model.modes[tile.mode]
        x = dyn.entry @ x + dyn.entry_u @ u
        out[-1] = x.copy()
        A = dyn.A
        f0 = dyn.b * u[0] + dyn.e * u[1]
        for _ in range(count):
            for _ in range(substeps_per_sample):
                k1 = A @ x + f0
                k2 = A @ (x + 0.5 * h * k1) + f0
                k3 = A @ (x + 0.5 * h * k2) + f0
                k4 = A @ (x + h * k3) + f0
                x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            out.append(x.copy())
    return np.array(out)


def exact_reference(model, schedule, x0, v_in, samples_per_period=256):
    """Nominal-sequence trajectory from the exact discretization, on the same
    grid as :func:`rk4_reference`."""
    u = np.array([v_in, model.v_f])
    n_per, counts = _grid(schedule, samples_per_period)
    h = schedule.period / n_per
    x = np.asarray(x0, dtype=float).copy()
    out = [x.copy()]
    for tile, count in zip(schedule.tiles, counts):
        dyn = model.modes[tile.mode]
        x = dyn.entry @ x + dyn.entry_u @ u
        out[-1] = x.copy()
        phi, gam = _flow_matrices(model, tile.mode, h)
        g = gam @ u
        for _ in range(count):
            x = phi @ x + g
            out.append(x.copy())
    return np.array(out)

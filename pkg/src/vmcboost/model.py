"""Switched model of the two-phase voltage-multiplier converter.

Topology (node names in brackets)::

    v_in -- L1 --[sw1]-- S1 -- gnd          v_in -- L2 --[sw2]-- S2 -- gnd

    C2: [x](+)  .. [sw1](-)     D2: [sw2] -> [x]      positive doubler
    C1: [p](+)  .. [sw2](-)     D3: [x]   -> [p]
    C3: [sw1](+) .. [z](-)      D1: [z]   -> [sw2]    negative doubler
    C4: [sw2](+) .. [r](-)      D4: [r]   -> [z]
    R_load (and optional C_out) between [p] and [r]

Entering Mode II or III closes a capacitor loop (C1 = C2 + C3, or
C4 = C2 + C3).  When the loop voltages disagree on entry, the diode that
would have to conduct backwards stays off until it becomes forward biased;
the model therefore also carries one "held" variant per loop diode.

The pair of doublers is driven by the differential switch-node voltage
sw1 - sw2, which swings +-V_in/(1 - D) in Modes II and III.  C2 and C3
clamp to the switch stress, C1 and C4 to twice it, and the load sees
C1 + C4.  Modes:

    I    S1, S2 on; every diode blocks; C1 + C4 feed the load
    II   S2 on; D1, D3 conduct; i_L1 charges C3 and, through C2, C1
    III  S1 on; D2, D4 conduct; i_L2 charges C2 and, through C3, C4
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import network as nw
from .params import ConverterParams

__all__ = [
    "MODES",
    "MODE_TABLE",
    "REQUIRED_OBSERVERS",
    "ModeDynamics",
    "SwitchedModel",
    "ValidationReport",
    "build_proposed_converter",
    "validate_model",
]

MODES = ("I", "II", "III")

# (switches on, diodes conducting)
MODE_TABLE = {
    "I": (frozenset({"S1", "S2"}), frozenset()),
    "II": (frozenset({"S2"}), frozenset({"D1", "D3"})),
    "III": (frozenset({"S1"}), frozenset({"D2", "D4"})),
}

DIODES = ("D1", "D2", "D3", "D4")

REQUIRED_OBSERVERS = (
    "iL1", "iL2", "vC1", "vC2", "vC3", "vC4", "vout", "iin",
    "vsw1", "vsw2", "vd1", "vd2", "vd3", "vd4", "id1", "id2", "id3", "id4",
)


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModeDynamics:
    """Linear dynamics of one mode: dx/dt = A x + b v_in + e v_f.

    ``entry`` and ``entry_u`` map the state on entering the mode onto the
    mode's capacitor-loop constraints (identity when the mode has none).
    Observers map ``(x, [v_in, v_f])`` to a signal: y = C x + D u.
    ``impulses`` maps the pre-entry state to the charge each current signal
    carries instantaneously at entry (empty when the mode has no loop).
    """

    A: np.ndarray
    b: np.ndarray
    e: np.ndarray
    entry: np.ndarray
    entry_u: np.ndarray
    observers: dict
    conduction_set: frozenset
    switch_set: frozenset
    impulses: dict = field(default_factory=dict)

    def observe(self, name, x, v_in, v_f=0.0):
        c, d = self.observers[name]
        return c @ x + d[0] * v_in + d[1] * v_f


@dataclass(frozen=True)
class SwitchedModel:
    """Mode dynamics keyed by mode name; ``held`` maps (mode, diode) to the
    variant of that mode with the diode still blocking."""

    state_names: tuple
    modes: dict
    v_f: float = 0.0
    held: dict = field(default_factory=dict)

    @property
    def state_dim(self):
        return len(self.state_names)

    def dynamics(self, key):
        return self.modes[key] if isinstance(key, str) else self.held[key]


def _network(params: ConverterParams, include_parasitics=True):
    par = params.parasitics if include_parasitics else params.ideal().parasitics
    net = nw.Network()
    net.inductors = [nw.Inductor("iL1", "sw1", params.l1, par.dcr), nw.Inductor("iL2", "sw2", params.l2, par.dcr)]
    net.capacitors = [
        nw.Capacitor("vC1", "p", "sw2", params.c1, par.esr),
        nw.Capacitor("vC2", "x", "sw1", params.c2, par.esr),
        nw.Capacitor("vC3", "sw1", "z", params.c3, par.esr),
        nw.Capacitor("vC4", "sw2", "r", params.c4, par.esr),
    ]
    if params.c_out > 0:
        net.capacitors.append(nw.Capacitor("vCout", "p", "r", params.c_out, par.esr))
    net.resistors = [nw.Resistor("Rload", "p", "r", params.r_load)]
    net.switches = [nw.Switch("S1", "sw1", nw.GND, par.r_ds_on), nw.Switch("S2", "sw2", nw.GND, par.r_ds_on)]
    net.diodes = [
        nw.Diode("D1", "z", "sw2"),
        nw.Diode("D2", "sw2", "x"),
        nw.Diode("D3", "x", "p"),
        nw.Diode("D4", "r", "z"),
    ]
    return net


def _named_observers(net, raw, impulses_only=False):
    obs = {}
    nx = len(net.state_names)
    if impulses_only:
        zero = (np.zeros(nx), np.zeros(nw.N_INPUTS))
        raw = {**{k: zero for k in _raw_keys(net)}, **raw}
    else:
        for name in net.state_names:
            obs[name] = raw["v:" + name] if name.startswith("v") else raw["i:" + name]

    def combine(*terms):
        c = np.zeros(nx)
        d = np.zeros(nw.N_INPUTS)
        for sign, key in terms:
            c = c + sign * raw[key][0]
            d = d + sign * raw[key][1]
        return c, d

    if not impulses_only:
        obs["vout"] = combine((1, "v:p"), (-1, "v:r"))
        obs["iin"] = combine((1, "i:iL1"), (1, "i:iL2"))
        obs["iout"] = combine((1, "i:Rload"))
        obs["vsw1"] = combine((1, "v:sw1"))
        obs["vsw2"] = combine((1, "v:sw2"))
        for k, ind in enumerate(net.inductors, start=1):
            # voltage across the ideal inductance: source minus node minus winding drop
            c, d = combine((-1, "v:" + ind.node), (-ind.r, "i:" + ind.name))
            d = d.copy()
            d[0] += 1.0
            obs[f"vL{k}"] = (c, d)
    obs["isw1"] = combine((1, "i:S1"))
    obs["isw2"] = combine((1, "i:S2"))
    for k, d in enumerate(net.diodes, start=1):
        if not impulses_only:
            # blocking voltage, positive when reverse biased
            obs[f"vd{k}"] = combine((1, "v:" + d.cathode), (-1, "v:" + d.anode))
        obs[f"id{k}"] = combine((1, "i:" + d.name))
    for cap in net.capacitors:
        obs["i" + cap.name[1:]] = combine((1, "i:" + cap.name))
    if impulses_only:
        obs = {k: v for k, v in obs.items() if np.abs(v[0]).max(initial=0) + np.abs(v[1]).max() > 0}
    return {k: (_readonly(c), _readonly(d)) for k, (c, d) in obs.items()}


def _raw_keys(net):
    keys = ["i:S1", "i:S2"] + ["i:" + d.name for d in net.diodes] + ["i:" + c.name for c in net.capacitors]
    return keys


def build_proposed_converter(params: ConverterParams, include_parasitics=True) -> SwitchedModel:
    """Assemble the three-mode switched model.

    Resistive parasitics (winding, on-state, ESR) and the diode forward
    drop enter the dynamics only when nonzero in ``params.parasitics``;
    pass ``include_parasitics=False`` to keep the devices ideal regardless.
    Switching transitions never enter the dynamics.
    """
    net = _network(params, include_parasitics)

    def dynamics(switches, diodes):
        m = nw.derive_mode(net, switches, diodes)
        return ModeDynamics(
            A=_readonly(m.A),
            b=_readonly(m.B[:, 0]),
            e=_readonly(m.B[:, 1]),
            entry=_readonly(m.P),
            entry_u=_readonly(m.Pu),
            observers=_named_observers(net, m.observers),
            conduction_set=frozenset(diodes),
            switch_set=frozenset(switches),
            impulses=_named_observers(net, m.impulses, impulses_only=True),
        )

    modes = {}
    held = {}
    for mode in MODES:
        switches, diodes = MODE_TABLE[mode]
        modes[mode] = dynamics(switches, diodes)
        if len(diodes) > 1:
            for d in sorted(diodes):
                held[(mode, d)] = dynamics(switches, diodes - {d})
    v_f = params.parasitics.v_f if include_parasitics else 0.0
    return SwitchedModel(state_names=tuple(net.state_names), modes=modes, v_f=v_f, held=held)


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)  # (name, passed, message)

    @property
    def ok(self):
        return all(passed for _, passed, _ in self.checks)

    @property
    def failures(self):
        return [(name, msg) for name, passed, msg in self.checks if not passed]

    def add(self, name, passed, message=""):
        self.checks.append((name, bool(passed), message))


def validate_model(model: SwitchedModel) -> ValidationReport:
    """Structural checks; failures are reported, never raised."""
    report = ValidationReport()
    keys = tuple(sorted(model.modes))
    report.add("three_modes", keys == tuple(sorted(MODES)), f"modes present: {keys}")
    for mode in MODES:
        dyn = model.modes.get(mode)
        if dyn is None:
            continue
        switches, diodes = MODE_TABLE[mode]
        report.add(
            f"mode_{mode}_conduction",
            dyn.conduction_set == diodes and dyn.switch_set == switches,
            f"mode {mode}: expected diodes {sorted(diodes)} and switches {sorted(switches)}, "
            f"got {sorted(dyn.conduction_set)} and {sorted(dyn.switch_set)}",
        )
        missing = [name for name in REQUIRED_OBSERVERS if name not in dyn.observers]
        report.add(f"mode_{mode}_observers", not missing, f"mode {mode}: missing observers {missing}")
        n = model.state_dim
        finite = (
            dyn.A.shape == (n, n)
            and np.all(np.isfinite(dyn.A))
            and np.all(np.isfinite(dyn.b))
            and np.all(np.isfinite(dyn.entry))
        )
        report.add(f"mode_{mode}_finite", finite, f"mode {mode}: state matrix not finite or mis-shaped")
    return report

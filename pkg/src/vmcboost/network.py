"""Per-mode state equations of a switched linear network.

A mode fixes which switches and diodes conduct.  Conducting ideal devices
are contracted into their neighbours (a diode contributes a forward-drop
offset), capacitor branches become the dynamic elements and the inductors
are fed from the input source, whose negative terminal is ``gnd``.

The state is ``[inductor currents..., capacitor voltages...]`` and the
input vector is ``u = [v_in, v_f]``.  Ideal capacitor loops are allowed:
the node potentials of the contracted network are the true dynamic
coordinates, and capacitor voltages that are inconsistent with a mode's
loop constraints are mapped onto it by conserving the charge on every
contracted node (the limit of ideal charge sharing).  For each mode this
yields

    x+    = P x + Pu u               applied on entry to the mode
    dx/dt = A x + B u                while the mode lasts
    y     = C x + D u                for every observer

Only the elements needed by this package are supported.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

GND = "gnd"
N_INPUTS = 2  # v_in, v_f


@dataclass(frozen=True)
class Capacitor:
    name: str
    pos: str
    neg: str
    c: float
    esr: float = 0.0


@dataclass(frozen=True)
class Inductor:
    """Inductor fed from the input source positive terminal into ``node``."""

    name: str
    node: str
    l: float
    r: float = 0.0


@dataclass(frozen=True)
class Resistor:
    name: str
    a: str
    b: str
    r: float


@dataclass(frozen=True)
class Switch:
    name: str
    a: str
    b: str
    r_on: float = 0.0


@dataclass(frozen=True)
class Diode:
    name: str
    anode: str
    cathode: str


@dataclass
class Network:
    inductors: list = field(default_factory=list)
    capacitors: list = field(default_factory=list)
    resistors: list = field(default_factory=list)
    switches: list = field(default_factory=list)
    diodes: list = field(default_factory=list)

    @property
    def state_names(self):
        return [ind.name for ind in self.inductors] + [cap.name for cap in self.capacitors]

    def nodes(self):
        seen = [GND]
        for el in self.inductors:
            seen.append(el.node)
        for el in self.capacitors:
            seen += [el.pos, el.neg]
        for el in self.resistors + self.switches:
            seen += [el.a, el.b]
        for el in self.diodes:
            seen += [el.anode, el.cathode]
        return list(dict.fromkeys(seen))


@dataclass(frozen=True)
class ModeMatrices:
    A: np.ndarray
    B: np.ndarray
    P: np.ndarray
    Pu: np.ndarray
    observers: dict  # name -> (C row, D row)
    impulses: dict = field(default_factory=dict)  # charge moved on entry, same row format


class _Groups:
    """Union-find over nodes with potential offsets (linear in u)."""

    def __init__(self, nodes):
        self.parent = {n: n for n in nodes}
        self.offset = {n: np.zeros(N_INPUTS) for n in nodes}  # e_n = e_parent + offset

    def find(self, n):
        if self.parent[n] == n:
            return n, np.zeros(N_INPUTS)
        root, off = self.find(self.parent[n])
        return root, off + self.offset[n]

    def join(self, a, b, drop):
        """Impose e_a - e_b = drop."""
        ra, oa = self.find(a)
        rb, ob = self.find(b)
        if ra == rb:
            raise ConfigurationError(f"loop of conducting devices through {a} and {b}")
        # keep ground as the root of its group
        if ra == GND:
            ra, rb, oa, ob, drop = rb, ra, ob, oa, -drop
        # e_ra + oa - e_rb - ob = drop  =>  e_ra = e_rb + drop + ob - oa
        self.parent[ra] = rb
        self.offset[ra] = drop + ob - oa


def derive_mode(net: Network, on_switches, on_diodes) -> ModeMatrices:
    nodes = net.nodes()
    for cap in net.capacitors:
        if cap.esr > 0:
            nodes.append(cap.name + "#")
    groups = _Groups(nodes)

    shorts = []  # (name, a, b) with current flowing a -> b
    resistors = [(r.name, r.a, r.b, 1.0 / r.r, np.zeros(N_INPUTS)) for r in net.resistors]
    for sw in net.switches:
        if sw.name not in on_switches:
            continue
        if sw.r_on > 0:
            resistors.append((sw.name, sw.a, sw.b, 1.0 / sw.r_on, np.zeros(N_INPUTS)))
        else:
            groups.join(sw.a, sw.b, np.zeros(N_INPUTS))
            shorts.append((sw.name, sw.a, sw.b))
    for d in net.diodes:
        if d.name in on_diodes:
            groups.join(d.anode, d.cathode, np.array([0.0, 1.0]))
            shorts.append((d.name, d.anode, d.cathode))

    cap_top = {}
    for cap in net.capacitors:
        if cap.esr > 0:
            cap_top[cap.name] = cap.name + "#"
            resistors.append((cap.name + "#esr", cap.pos, cap.name + "#", 1.0 / cap.esr, np.zeros(N_INPUTS)))
        else:
            cap_top[cap.name] = cap.pos

    roots = [n for n in nodes if groups.find(n)[0] == n and n != GND]
    index = {n: i for i, n in enumerate(roots)}
    n_free = len(roots)
    nL, nC = len(net.inductors), len(net.capacitors)
    nx = nL + nC
    nw = nx + N_INPUTS

    def sel(node):
        root, off = groups.find(node)
        s = np.zeros(n_free)
        if root != GND:
            s[index[root]] = 1.0
        return s, off

    # Linear maps over w = [x; u]
    Ui = np.zeros((N_INPUTS, nw))
    Ui[:, nx:] = np.eye(N_INPUTS)
    Xi = np.zeros((nL, nw))
    Xi[:, :nL] = np.eye(nL)
    Xv = np.zeros((nC, nw))
    Xv[:, nL:nx] = np.eye(nC)

    Gc = np.zeros((n_free, nC))
    Hc = np.zeros((nC, N_INPUTS))
    cvals = np.array([cap.c for cap in net.capacitors])
    for k, cap in enumerate(net.capacitors):
        sp, op = sel(cap_top[cap.name])
        sn, on = sel(cap.neg)
        Gc[:, k] = sp - sn
        Hc[k] = op - on
    Cn = Gc @ np.diag(cvals) @ Gc.T

    Gn = np.zeros((n_free, n_free))
    H = np.zeros((n_free, N_INPUTS))
    res_maps = []
    for name, a, b, g, src in resistors:
        sa, oa = sel(a)
        sb, ob = sel(b)
        gv = sa - sb
        hv = oa - ob - src
        Gn += g * np.outer(gv, gv)
        H += g * np.outer(gv, hv)
        res_maps.append((name, a, b, g, gv, hv))

    F = np.zeros((n_free, nL))
    Sb = np.zeros((nL, n_free))
    Ob = np.zeros((nL, N_INPUTS))
    for j, ind in enumerate(net.inductors):
        s, o = sel(ind.node)
        F[:, j] = s
        Sb[j] = s
        Ob[j] = o
    Linv = np.diag([1.0 / ind.l for ind in net.inductors])
    Rl = np.diag([ind.r for ind in net.inductors])

    lam, Q = np.linalg.eigh(Cn) if n_free else (np.zeros(0), np.zeros((0, 0)))
    tol = 1e-12 * (lam.max() if lam.size else 1.0)
    dyn = lam > tol
    Qd, Q0, lam_d = Q[:, dyn], Q[:, ~dyn], lam[dyn]
    Linv_d = np.diag(1.0 / lam_d)

    # dynamic coordinates from conserved node charge
    Ma = Linv_d @ Qd.T @ Gc @ np.diag(cvals) @ (Xv - Hc @ Ui)
    if Q0.shape[1]:
        M0 = Q0.T @ Gn @ Q0
        if np.linalg.matrix_rank(M0) < M0.shape[0]:
            raise ConfigurationError("network has a node with neither capacitive nor resistive support")
        M0inv = np.linalg.inv(M0)
        Mb = M0inv @ (-Q0.T @ Gn @ Qd @ Ma - Q0.T @ H @ Ui + Q0.T @ F @ Xi)
    else:
        M0inv = np.zeros((0, 0))
        Mb = np.zeros((0, nw))
    Me = Qd @ Ma + Q0 @ Mb

    Mad = Linv_d @ Qd.T @ (-Gn @ Me - H @ Ui + F @ Xi)
    vin_row = np.zeros((nL, nw))
    vin_row[:, nx] = 1.0
    Mid = Linv @ (vin_row - Sb @ Me - Ob @ Ui - Rl @ Xi)
    if Q0.shape[1]:
        Mbd = M0inv @ (-Q0.T @ Gn @ Qd @ Mad + Q0.T @ F @ Mid)
    else:
        Mbd = np.zeros((0, nw))
    Med = Qd @ Mad + Q0 @ Mbd
    Mvd = Gc.T @ Med

    xdot = np.vstack([Mid, Mvd])
    proj = np.vstack([Xi, Gc.T @ Me + Hc @ Ui])

    obs = {}

    def node_v(node):
        s, o = sel(node)
        return s @ Me + o @ Ui

    for n in net.nodes():
        obs["v:" + n] = node_v(n)
    for j, ind in enumerate(net.inductors):
        obs["i:" + ind.name] = Xi[j]
    cap_i = {}
    for k, cap in enumerate(net.capacitors):
        cap_i[cap.name] = cvals[k] * Mvd[k]
        obs["i:" + cap.name] = cap_i[cap.name]
        obs["v:" + cap.name] = proj[nL + k]
    res_i = {}
    for name, a, b, g, gv, hv in res_maps:
        res_i[name] = g * (gv @ Me + hv @ Ui)
        obs["i:" + name] = res_i[name]

    # currents leaving each node through non-short elements
    leaving = {n: np.zeros(nw) for n in nodes}
    for j, ind in enumerate(net.inductors):
        leaving[GND] += Xi[j]
        leaving[ind.node] -= Xi[j]
    for cap in net.capacitors:
        leaving[cap_top[cap.name]] += cap_i[cap.name]
        leaving[cap.neg] -= cap_i[cap.name]
    for name, a, b, g, gv, hv in res_maps:
        leaving[a] += res_i[name]
        leaving[b] -= res_i[name]

    adjacency = {n: [] for n in nodes}
    for name, a, b in shorts:
        adjacency[a].append((name, b))
        adjacency[b].append((name, a))

    def side(start, cut):
        seen, stack = {start}, [start]
        while stack:
            n = stack.pop()
            for name, m in adjacency[n]:
                if name != cut and m not in seen:
                    seen.add(m)
                    stack.append(m)
        return seen

    # charge displaced by the entry projection, carried by capacitors and shorts
    jump = proj - np.hstack([np.eye(nx), np.zeros((nx, N_INPUTS))])
    imp = {}
    imp_leaving = {n: np.zeros(nw) for n in nodes}
    for k, cap in enumerate(net.capacitors):
        q = cvals[k] * jump[nL + k]
        imp["i:" + cap.name] = q
        imp_leaving[cap_top[cap.name]] += q
        imp_leaving[cap.neg] -= q

    for name, a, b in shorts:
        obs["i:" + name] = sum((leaving[n] for n in side(b, name)), np.zeros(nw))
        imp["i:" + name] = sum((imp_leaving[n] for n in side(b, name)), np.zeros(nw))
    for el in net.switches + net.diodes:
        obs.setdefault("i:" + el.name, np.zeros(nw))

    observers = {k: (v[:nx].copy(), v[nx:].copy()) for k, v in obs.items()}
    scale = max(np.abs(proj).max(), 1.0) * cvals.max(initial=1.0)
    impulses = {
        k: (v[:nx].copy(), v[nx:].copy()) for k, v in imp.items() if np.abs(v).max() > 1e-12 * scale
    }
    return ModeMatrices(
        A=xdot[:, :nx],
        B=xdot[:, nx:],
        P=proj[:, :nx],
        Pu=proj[:, nx:],
        observers=observers,
        impulses=impulses,
    )

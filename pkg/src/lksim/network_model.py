"""Networked model: per-node populations on manoeuvre and engagement graphs.

Every node carries a phase and a population.  Phases follow a frustrated
Kuramoto-Sakaguchi rule masked by the smoothed Heaviside of the populations
(dead nodes neither move nor pull on neighbours).  Populations exchange
resource along the manoeuvre graph and are attrited along the engagement
graph, with lethality scaled by the attacker's local order parameter and
phase lead.

State layout: all phases (Blue nodes then Red nodes), then all populations
in the same order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .global_model import (TWO_PI, ScenarioError, _write_csv, coupling_edges,
                           smooth_heaviside)
from .graphs import EngagementMap, ForceGraph
from .integrate import (FreezeRule, IntegratorSettings, Trajectory,
                        compile_rhs, integrate_with_freeze)

NETWORK_FEEDBACK_MODES = ("none", "pairwise")


class NetworkedModelError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class NetworkedScenario:
    blue_graph: ForceGraph
    red_graph: ForceGraph
    engagement: EngagementMap
    omega: np.ndarray
    theta0: np.ndarray
    p0: np.ndarray
    sigma_B: float
    sigma_R: float
    zeta_BR: float
    zeta_RB: float
    phi_BR: float
    phi_RB: float
    kappa_BR: float
    kappa_RB: float
    gamma_B: float = 1.0
    gamma_R: float = 1.0
    standing_force: float = 1.0
    feedback: str = "none"
    extinction_threshold: float | None = None
    eps1: float = 1e-15
    eps2: float = 1e-20

    def __post_init__(self):
        n = self.n_nodes
        for name in ("omega", "theta0", "p0"):
            a = np.asarray(getattr(self, name), dtype=float).ravel()
            if a.size != n:
                raise ScenarioError(f"{name} has {a.size} entries, expected {n}")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if (self.engagement.n_blue, self.engagement.n_red) != (self.blue_graph.n,
                                                                self.red_graph.n):
            raise ScenarioError("engagement map does not match graph sizes")
        for name in ("sigma_B", "sigma_R", "zeta_BR", "zeta_RB", "kappa_BR", "kappa_RB",
                     "gamma_B", "gamma_R"):
            if getattr(self, name) < 0:
                raise ScenarioError(f"{name} must be non-negative")
        if np.any(self.p0 < 0):
            raise ScenarioError("initial populations must be non-negative")
        for name in ("phi_BR", "phi_RB"):
            if not 0.0 <= getattr(self, name) < TWO_PI:
                raise ScenarioError(f"{name} must lie in [0, 2pi)")
        if not self.standing_force > 0:
            raise ScenarioError("standing_force must be positive")
        if self.feedback not in NETWORK_FEEDBACK_MODES:
            raise ScenarioError(f"feedback must be one of {NETWORK_FEEDBACK_MODES}")
        if not self.eps1 > self.eps2 > 0:
            raise ScenarioError("need eps1 > eps2 > 0")
        if self.extinction_threshold is None:
            object.__setattr__(self, "extinction_threshold", self.eps1)

    @property
    def n_blue(self) -> int:
        return self.blue_graph.n

    @property
    def n_red(self) -> int:
        return self.red_graph.n

    @property
    def n_nodes(self) -> int:
        return self.blue_graph.n + self.red_graph.n

    # reduced_constants() reads per-force frequency vectors
    @property
    def omega_B(self) -> np.ndarray:
        return self.omega[:self.n_blue]

    @property
    def omega_R(self) -> np.ndarray:
        return self.omega[self.n_blue:]

    def initial_state(self) -> np.ndarray:
        return np.concatenate([self.theta0, self.p0])

    def mirrored(self) -> "NetworkedScenario":
        """Swap the roles of Blue and Red."""
        nB = self.n_blue
        e = self.engagement

        def swap(a):
            return np.concatenate([a[nB:], a[:nB]])

        return replace(
            self, blue_graph=self.red_graph, red_graph=self.blue_graph,
            engagement=EngagementMap(e.n_red, e.n_blue, e.pairs[:, ::-1]),
            omega=swap(self.omega), theta0=swap(self.theta0), p0=swap(self.p0),
            sigma_B=self.sigma_R, sigma_R=self.sigma_B,
            zeta_BR=self.zeta_RB, zeta_RB=self.zeta_BR,
            phi_BR=self.phi_RB, phi_RB=self.phi_BR,
            kappa_BR=self.kappa_RB, kappa_RB=self.kappa_BR,
            gamma_B=self.gamma_R, gamma_R=self.gamma_B)

    def with_params(self, **changes) -> "NetworkedScenario":
        return replace(self, **changes)


@dataclass(frozen=True)
class NetworkedState:
    theta: np.ndarray
    p: np.ndarray
    threshold: float = 1e-15

    @property
    def alive(self) -> np.ndarray:
        return self.p > self.threshold

    def flat(self) -> np.ndarray:
        return np.concatenate([self.theta, self.p])

    @classmethod
    def from_flat(cls, y, n_nodes: int, threshold: float = 1e-15) -> "NetworkedState":
        y = np.asarray(y, dtype=float)
        return cls(y[:n_nodes], y[n_nodes:], threshold)


# -- kernel ------------------------------------------------------------------------

def kernel_args(scn: NetworkedScenario):
    """Packed arrays for the compiled right-hand side.

    ``dst, src, kind`` is the directed coupling list (kinds: 0 Blue intra,
    1 Red intra, 2 Blue engaging Red, 3 Red engaging Blue).  ``gamma_edge``
    holds the manoeuvre rate of each directed edge so that the symmetrised
    ``(Gamma_ih + Gamma_hi)/2`` can be formed from per-edge values.
    """
    dst, src, kind = coupling_edges(scn.blue_graph, scn.red_graph, scn.engagement)
    gamma_edge = np.where(kind == 0, scn.gamma_B, np.where(kind == 1, scn.gamma_R, 0.0))
    # index of the reverse edge, for (Gamma_ih + Gamma_hi)/2
    key = {(int(d), int(s)): k for k, (d, s) in enumerate(zip(dst, src))}
    rev = np.array([key[(int(s), int(d))] for d, s in zip(dst, src)], dtype=np.int64)
    params = np.array([scn.sigma_B, scn.sigma_R, scn.zeta_BR, scn.zeta_RB,
                       scn.phi_BR, scn.phi_RB, scn.kappa_BR, scn.kappa_RB,
                       scn.standing_force, scn.extinction_threshold, scn.eps1, scn.eps2,
                       1.0 if scn.feedback == "pairwise" else 0.0])
    return (int(scn.n_blue), int(scn.n_red), scn.omega.copy(), dst, src, kind,
            gamma_edge.astype(float), rev, params)


@njit(cache=True)
def _pair_weight(p_num, p_i, p_j):
    s = p_i + p_j
    if s == 0.0:
        return 1.0
    return 2.0 * p_num / s


@njit(cache=True)
def _node_terms(n, y, eps1, eps2):
    """Per-node cos, sin and smoothed Heaviside, shared by every edge term."""
    c = np.empty(n)
    s = np.empty(n)
    h = np.empty(n)
    for i in range(n):
        c[i] = math.cos(y[i])
        s[i] = math.sin(y[i])
        h[i] = smooth_heaviside(y[n + i], eps1, eps2)
    return c, s, h


@njit(cache=True)
def _moderators(n, y, c, s, h, dst, src, kind, standing, eps2):
    """Local order, flow moderator ``delta`` and engagement moderator ``d``."""
    re = np.zeros(n)
    im = np.zeros(n)
    wsum = np.zeros(n)
    ep = np.zeros(n)
    eh = np.zeros(n)
    for k in range(dst.size):
        i = dst[k]
        j = src[k]
        if kind[k] <= 1:
            re[i] += h[j] * c[j]
            im[i] += h[j] * s[j]
            wsum[i] += h[j]
        else:
            ep[i] += y[n + j]
            eh[i] += h[j]
    order = np.empty(n)
    delta = np.empty(n)
    d = np.empty(n)
    for i in range(n):
        order[i] = (math.sqrt(re[i] * re[i] + im[i] * im[i]) + eps2) / (wsum[i] + eps2)
        delta[i] = 1.0 / (ep[i] + standing)
        d[i] = 1.0 / (eh[i] + eps2)
    return order, delta, d


@njit(cache=True)
def _network_kernel(t, y, args):
    nB, nR, omega, dst, src, kind, gamma_edge, rev, params = args
    n = nB + nR
    sigma_B, sigma_R, zeta_BR, zeta_RB = params[0], params[1], params[2], params[3]
    phi_BR, phi_RB, kappa_BR, kappa_RB = params[4], params[5], params[6], params[7]
    standing, threshold, eps1, eps2 = params[8], params[9], params[10], params[11]
    pairwise = params[12] > 0.0
    cos_BR, sin_BR = math.cos(phi_BR), math.sin(phi_BR)
    cos_RB, sin_RB = math.cos(phi_RB), math.sin(phi_RB)

    c, s, h = _node_terms(n, y, eps1, eps2)
    order, delta, d = _moderators(n, y, c, s, h, dst, src, kind, standing, eps2)

    phase = np.zeros(n)
    flow = np.zeros(n)
    for k in range(dst.size):
        i = dst[k]
        j = src[k]
        e = kind[k]
        p_i = y[n + i]
        p_j = y[n + j]
        # sin and cos of theta_i - theta_j
        sin_ij = s[i] * c[j] - c[i] * s[j]
        cos_ij = c[i] * c[j] + s[i] * s[j]
        if e == 0 or e == 1:
            coupling = sigma_B if e == 0 else sigma_R
            if pairwise:
                coupling *= _pair_weight(p_j, p_i, p_j)
            phase[i] -= h[j] * coupling * sin_ij
            rate = 0.5 * (gamma_edge[k] + gamma_edge[rev[k]])
            flow[i] += h[j] * rate * (delta[j] * p_j - delta[i] * p_i) * (cos_ij + 1.0) / 2.0
        else:
            if e == 2:
                coupling = zeta_BR
                cphi, sphi = cos_BR, sin_BR
                kappa = kappa_RB  # Red attacking Blue node i
            else:
                coupling = zeta_RB
                cphi, sphi = cos_RB, sin_RB
                kappa = kappa_BR
            if pairwise:
                coupling *= _pair_weight(p_i, p_i, p_j)
            phase[i] -= h[j] * coupling * (sin_ij * cphi - cos_ij * sphi)
            flow[i] -= h[j] * kappa * p_j * d[j] * (1.0 - sin_ij) / 2.0 * order[j]

    out = np.empty(2 * n)
    for i in range(n):
        if y[n + i] <= threshold:
            out[i] = 0.0
            out[n + i] = 0.0
        else:
            out[i] = h[i] * (omega[i] + phase[i])
            out[n + i] = h[i] * flow[i]
    return out


NETWORK_RHS = compile_rhs(_network_kernel)


# -- python-facing helpers -----------------------------------------------------------

def _flat(state, scn: NetworkedScenario) -> np.ndarray:
    y = state.flat() if isinstance(state, NetworkedState) else np.asarray(state, dtype=float)
    if y.shape != (2 * scn.n_nodes,):
        raise ScenarioError(f"state has shape {y.shape}, scenario needs ({2 * scn.n_nodes},)")
    return np.ascontiguousarray(y)


def _all_moderators(y, scn: NetworkedScenario, args):
    n = scn.n_nodes
    c, s, h = _node_terms(n, y, scn.eps1, scn.eps2)
    return _moderators(n, y, c, s, h, args[3], args[4], args[5], scn.standing_force, scn.eps2)


def local_order(k: int, state, scn: NetworkedScenario) -> float:
    """Local order parameter of node ``k`` (0-based) over its living manoeuvre neighbours."""
    y = _flat(state, scn)
    args = kernel_args(scn)
    return float(_all_moderators(y, scn, args)[0][k])


def local_orders(state, scn: NetworkedScenario) -> np.ndarray:
    y = _flat(state, scn)
    args = kernel_args(scn)
    return _all_moderators(y, scn, args)[0]


def flow_moderators(state, scn: NetworkedScenario) -> tuple[np.ndarray, np.ndarray]:
    """``(delta, d)`` per node."""
    y = _flat(state, scn)
    args = kernel_args(scn)
    _, delta, d = _all_moderators(y, scn, args)
    return delta, d


def networked_rhs(state, scn: NetworkedScenario) -> np.ndarray:
    """Time derivative of the networked state; raises on NaN with the node index."""
    y = _flat(state, scn)
    out = _network_kernel(0.0, y, kernel_args(scn))
    bad = np.flatnonzero(np.isnan(out))
    if bad.size:
        k = int(bad[0])
        node = k % scn.n_nodes
        what = "phase" if k < scn.n_nodes else "population"
        raise NetworkedModelError(f"NaN in {what} derivative at node {_node_label(scn, node)}")
    return out


def _node_label(scn: NetworkedScenario, node: int) -> str:
    if node < scn.n_blue:
        return f"B{node + 1}"
    return f"R{node - scn.n_blue + 1}"


# -- runs ------------------------------------------------------------------------------

@dataclass
class NetworkedRun:
    scenario: NetworkedScenario
    trajectory: Trajectory = field(repr=False)

    @property
    def times(self):
        return self.trajectory.times

    @property
    def theta(self) -> np.ndarray:
        return self.trajectory.states[:, :self.scenario.n_nodes]

    @property
    def p(self) -> np.ndarray:
        return self.trajectory.states[:, self.scenario.n_nodes:]

    @property
    def p_B_total(self) -> np.ndarray:
        return self.p[:, :self.scenario.n_blue].sum(axis=1)

    @property
    def p_R_total(self) -> np.ndarray:
        return self.p[:, self.scenario.n_blue:].sum(axis=1)

    @property
    def p_final(self) -> float:
        return float(self.p_B_total[-1] - self.p_R_total[-1])

    @property
    def status(self) -> str:
        return self.trajectory.status

    def local_orders(self) -> np.ndarray:
        """Local order parameters on every output sample, shape (samples, nodes)."""
        scn = self.scenario
        args = kernel_args(scn)
        return np.array([_all_moderators(np.ascontiguousarray(y), scn, args)[0]
                         for y in self.trajectory.states])


def node_freeze(scn: NetworkedScenario, stop: bool) -> FreezeRule:
    n = scn.n_nodes
    group = np.r_[np.zeros(scn.n_blue, dtype=np.int64), np.ones(scn.n_red, dtype=np.int64)]
    return FreezeRule(watch=np.arange(n, 2 * n), level=scn.extinction_threshold,
                      link=np.arange(n), group=group, snap=0.0,
                      stop_when_group_frozen=stop)


def run_networked(scn: NetworkedScenario, t_final: float,
                  settings: IntegratorSettings | None = None,
                  stop_when_extinct: bool = False) -> NetworkedRun:
    """Integrate the networked model to ``t_final``.

    A node whose population falls to the extinction threshold is frozen
    (population snapped to 0, phase held).  With ``stop_when_extinct`` the
    run ends once every node of one force is frozen.
    """
    traj = integrate_with_freeze(NETWORK_RHS, node_freeze(scn, stop_when_extinct),
                                 scn.initial_state(), t_final, settings,
                                 args=kernel_args(scn))
    if not traj.completed:
        # surfaces a NaN with its node index, if that was the cause
        networked_rhs(traj.final, scn)
    return NetworkedRun(scn, traj)


NETWORK_CSV_COLUMNS = ("t", "node", "force", "p", "theta", "O_local")


def write_networked_csv(run: NetworkedRun, path, header: str = "") -> None:
    """Long-format per-node trajectory; ``force`` is 0 for Blue and 1 for Red."""
    scn = run.scenario
    n = scn.n_nodes
    samples = run.times.size
    node = np.tile(np.r_[np.arange(1, scn.n_blue + 1), np.arange(1, scn.n_red + 1)], samples)
    force = np.tile(np.r_[np.zeros(scn.n_blue), np.ones(scn.n_red)], samples)
    data = np.column_stack([np.repeat(run.times, n), node, force, run.p.ravel(),
                            run.theta.ravel(), run.local_orders().ravel()])
    _write_csv(path, NETWORK_CSV_COLUMNS, data, header)

"""Homogeneous-force unified model and the classical Lanchester baseline.

Two Kuramoto-Sakaguchi networks (Blue, Red) are coupled internally with
strength ``sigma`` and across the engagement edges with strength ``zeta`` and
frustration ``phi``.  Their order parameters and global-phase gap set the
organisational factors that scale two scalar Lanchester populations.

State layout (``SystemState``): Blue phases, Red phases, ``p_B``, ``p_R``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from numba import njit

from .graphs import EngagementMap, ForceGraph
from .integrate import (FreezeRule, IntegratorSettings, Trajectory,
                        compile_rhs, integrate_with_freeze)

TWO_PI = 2.0 * math.pi
HEAVISIDE_CLAMP = 50.0
EFFORT_GAIN_EPS = 1e-3

FEEDBACK_MODES = ("none", "focus_loss", "effort_gain")
_FEEDBACK_CODE = {name: k for k, name in enumerate(FEEDBACK_MODES)}

# edge kinds in the packed coupling list
_INTRA_B, _INTRA_R, _ENGAGE_B, _ENGAGE_R = 0, 1, 2, 3


class ScenarioError(ValueError):
    pass


# -- scalar building blocks -----------------------------------------------------

@njit(cache=True)
def smooth_heaviside(x, eps1, eps2):
    """``[1 + tanh((x - eps1)/eps2)] / 2`` with the tanh argument clamped to +-50."""
    arg = (x - eps1) / eps2
    if arg > HEAVISIDE_CLAMP:
        arg = HEAVISIDE_CLAMP
    elif arg < -HEAVISIDE_CLAMP:
        arg = -HEAVISIDE_CLAMP
    return 0.5 * (1.0 + math.tanh(arg))


def order_parameter(phases) -> float:
    phases = np.asarray(phases, dtype=float)
    if phases.size == 0:
        raise ValueError("order parameter of an empty phase set")
    return float(abs(np.exp(1j * phases).sum()) / phases.size)


def organisational_factors(O_B: float, O_R: float, delta_BR: float) -> tuple[float, float]:
    s = math.sin(delta_BR)
    return O_B * (1.0 + s) / 2.0, O_R * (1.0 - s) / 2.0


def classical_lanchester_rhs(state, alphas):
    """Square-law derivative; ``alphas = (alpha_RB, alpha_BR)``."""
    p_B, p_R = state
    alpha_RB, alpha_BR = alphas
    return -alpha_RB * p_R, -alpha_BR * p_B


def classical_lanchester_solution(t, p_B0, p_R0, alpha_RB, alpha_BR):
    """Closed-form square-law trajectory (valid until a force reaches zero)."""
    t = np.asarray(t, dtype=float)
    rate = math.sqrt(alpha_BR * alpha_RB)
    c, s = np.cosh(rate * t), np.sinh(rate * t)
    p_B = p_B0 * c - math.sqrt(alpha_RB / alpha_BR) * p_R0 * s
    p_R = p_R0 * c - math.sqrt(alpha_BR / alpha_RB) * p_B0 * s
    return p_B, p_R


@njit(cache=True)
def _classical_kernel(t, y, args):
    alpha_RB = args[0]
    alpha_BR = args[1]
    out = np.empty(2)
    out[0] = -alpha_RB * y[1]
    out[1] = -alpha_BR * y[0]
    return out


_CLASSICAL = compile_rhs(_classical_kernel)


def run_classical(p_B0, p_R0, alpha_RB, alpha_BR, t_final,
                  settings: IntegratorSettings | None = None) -> Trajectory:
    return integrate_with_freeze(_CLASSICAL, None, [p_B0, p_R0], t_final, settings,
                                 args=(float(alpha_RB), float(alpha_BR)))


# -- scenario -------------------------------------------------------------------

def equispaced_phases(n: int, half_width: float = math.pi / 4) -> np.ndarray:
    """``-w + 2w (j-1)/(n-1)`` for j = 1..n (a single node sits at -w)."""
    if n == 1:
        return np.array([-half_width])
    return -half_width + 2.0 * half_width * np.arange(n) / (n - 1)


@dataclass(frozen=True, eq=False)
class GlobalScenario:
    blue_graph: ForceGraph
    red_graph: ForceGraph
    engagement: EngagementMap
    sigma_B: float
    sigma_R: float
    zeta_BR: float
    zeta_RB: float
    phi_BR: float
    phi_RB: float
    omega_B: np.ndarray
    omega_R: np.ndarray
    kappa_BR: float
    kappa_RB: float
    p_B0: float
    p_R0: float
    theta0_B: np.ndarray
    theta0_R: np.ndarray
    feedback: str = "none"
    # attenuation of the intra couplings (f); the standard modes keep f = 1
    intra_feedback: str = "none"
    eps1: float = 1e-15
    eps2: float = 1e-20

    def __post_init__(self):
        nB, nR = self.blue_graph.n, self.red_graph.n
        for name, arr, n in (("omega_B", self.omega_B, nB), ("omega_R", self.omega_R, nR),
                             ("theta0_B", self.theta0_B, nB), ("theta0_R", self.theta0_R, nR)):
            a = np.asarray(arr, dtype=float).ravel()
            if a.size != n:
                raise ScenarioError(f"{name} has {a.size} entries, graph has {n} nodes")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if (self.engagement.n_blue, self.engagement.n_red) != (nB, nR):
            raise ScenarioError("engagement map does not match graph sizes")
        for name in ("sigma_B", "sigma_R", "zeta_BR", "zeta_RB", "kappa_BR", "kappa_RB",
                     "p_B0", "p_R0"):
            if getattr(self, name) < 0:
                raise ScenarioError(f"{name} must be non-negative")
        for name in ("phi_BR", "phi_RB"):
            if not 0.0 <= getattr(self, name) < TWO_PI:
                raise ScenarioError(f"{name} must lie in [0, 2pi)")
        if self.feedback not in FEEDBACK_MODES:
            raise ScenarioError(f"feedback must be one of {FEEDBACK_MODES}")
        if self.intra_feedback not in ("none", "focus_loss"):
            raise ScenarioError("intra_feedback must be 'none' or 'focus_loss'")
        if not self.eps1 > self.eps2 > 0:
            raise ScenarioError("need eps1 > eps2 > 0")

    @property
    def n_blue(self) -> int:
        return self.blue_graph.n

    @property
    def n_red(self) -> int:
        return self.red_graph.n

    def initial_state(self) -> np.ndarray:
        return np.concatenate([self.theta0_B, self.theta0_R, [self.p_B0, self.p_R0]])

    def mirrored(self) -> "GlobalScenario":
        """Swap the roles of Blue and Red."""
        e = self.engagement
        return replace(
            self, blue_graph=self.red_graph, red_graph=self.blue_graph,
            engagement=EngagementMap(e.n_red, e.n_blue, e.pairs[:, ::-1]),
            sigma_B=self.sigma_R, sigma_R=self.sigma_B,
            zeta_BR=self.zeta_RB, zeta_RB=self.zeta_BR,
            phi_BR=self.phi_RB, phi_RB=self.phi_BR,
            omega_B=self.omega_R, omega_R=self.omega_B,
            kappa_BR=self.kappa_RB, kappa_RB=self.kappa_BR,
            p_B0=self.p_R0, p_R0=self.p_B0,
            theta0_B=self.theta0_R, theta0_R=self.theta0_B)

    def with_params(self, **changes) -> "GlobalScenario":
        return replace(self, **changes)


@dataclass(frozen=True)
class GlobalState:
    theta_B: np.ndarray
    theta_R: np.ndarray
    p_B: float
    p_R: float

    def flat(self) -> np.ndarray:
        return np.concatenate([self.theta_B, self.theta_R, [self.p_B, self.p_R]])

    @classmethod
    def from_flat(cls, y, n_blue: int) -> "GlobalState":
        y = np.asarray(y, dtype=float)
        return cls(y[:n_blue], y[n_blue:-2], float(y[-2]), float(y[-1]))


# -- right-hand side ---------------------------------------------------------------

def coupling_edges(blue: ForceGraph, red: ForceGraph, engagement: EngagementMap):
    """Packed directed coupling list ``(dst, src, kind)`` over all nodes.

    Red nodes are offset by ``blue.n``.  Edges are grouped by destination
    node so that each node's coupling sum is accumulated in a fixed order.
    """
    nB = blue.n
    b_dst, b_src = blue.directed_pairs()
    r_dst, r_src = red.directed_pairs()
    e_b, e_r = engagement.pairs[:, 0], engagement.pairs[:, 1] + nB
    dst = np.concatenate([b_dst, r_dst + nB, e_b, e_r])
    src = np.concatenate([b_src, r_src + nB, e_r, e_b])
    kind = np.concatenate([np.full(b_dst.size, _INTRA_B), np.full(r_dst.size, _INTRA_R),
                           np.full(e_b.size, _ENGAGE_B), np.full(e_r.size, _ENGAGE_R)])
    order = np.lexsort((src, kind, dst))
    return (dst[order].astype(np.int64), src[order].astype(np.int64),
            kind[order].astype(np.int64))


def kernel_args(scn: GlobalScenario):
    dst, src, kind = coupling_edges(scn.blue_graph, scn.red_graph, scn.engagement)
    omega = np.concatenate([scn.omega_B, scn.omega_R])
    params = np.array([scn.sigma_B, scn.sigma_R, scn.zeta_BR, scn.zeta_RB,
                       scn.phi_BR, scn.phi_RB, scn.kappa_BR, scn.kappa_RB,
                       scn.p_B0, scn.p_R0, scn.eps1, scn.eps2,
                       _FEEDBACK_CODE[scn.feedback],
                       1.0 if scn.intra_feedback == "focus_loss" else 0.0])
    return (int(scn.n_blue), int(scn.n_red), omega, dst, src, kind, params)


@njit(cache=True)
def _attenuation(p, p0, code):
    if code == 1:
        return p / p0
    if code == 2:
        return 1.0 / (p / p0 + EFFORT_GAIN_EPS)
    return 1.0


@njit(cache=True)
def _global_kernel(t, y, args):
    nB, nR, omega, dst, src, kind, params = args
    n = nB + nR
    sigma_B, sigma_R, zeta_BR, zeta_RB = params[0], params[1], params[2], params[3]
    phi_BR, phi_RB, kappa_BR, kappa_RB = params[4], params[5], params[6], params[7]
    p_B0, p_R0, eps1, eps2 = params[8], params[9], params[10], params[11]
    code = int(params[12])
    p_B = y[n]
    p_R = y[n + 1]

    g_B = _attenuation(p_B, p_B0, code)
    g_R = _attenuation(p_R, p_R0, code)
    f_B = 1.0
    f_R = 1.0
    if params[13] > 0.0:
        f_B = p_B / p_B0
        f_R = p_R / p_R0
    coef0 = f_B * sigma_B
    coef1 = f_R * sigma_R
    coef2 = g_B * zeta_BR
    coef3 = g_R * zeta_RB

    c = np.empty(n)
    s = np.empty(n)
    for i in range(n):
        c[i] = math.cos(y[i])
        s[i] = math.sin(y[i])
    cos_BR, sin_BR = math.cos(phi_BR), math.sin(phi_BR)
    cos_RB, sin_RB = math.cos(phi_RB), math.sin(phi_RB)

    out = np.empty(n + 2)
    for i in range(n):
        out[i] = omega[i]
    for k in range(dst.size):
        i = dst[k]
        j = src[k]
        e = kind[k]
        # sin and cos of theta_i - theta_j
        sin_ij = s[i] * c[j] - c[i] * s[j]
        if e == 0:
            out[i] -= coef0 * sin_ij
        elif e == 1:
            out[i] -= coef1 * sin_ij
        else:
            cos_ij = c[i] * c[j] + s[i] * s[j]
            if e == 2:
                out[i] -= coef2 * (sin_ij * cos_BR - cos_ij * sin_BR)
            else:
                out[i] -= coef3 * (sin_ij * cos_RB - cos_ij * sin_RB)

    cb = 0.0
    sb = 0.0
    mb = 0.0
    for i in range(nB):
        cb += c[i]
        sb += s[i]
        mb += y[i]
    cr = 0.0
    sr = 0.0
    mr = 0.0
    for i in range(nB, n):
        cr += c[i]
        sr += s[i]
        mr += y[i]
    O_B = math.sqrt(cb * cb + sb * sb) / nB
    O_R = math.sqrt(cr * cr + sr * sr) / nR
    sin_delta = math.sin(mb / nB - mr / nR)

    out[n] = -kappa_RB * O_R * (1.0 - sin_delta) / 2.0 * p_R * smooth_heaviside(p_B, eps1, eps2)
    out[n + 1] = -kappa_BR * O_B * (1.0 + sin_delta) / 2.0 * p_B * smooth_heaviside(p_R, eps1, eps2)
    return out


GLOBAL_RHS = compile_rhs(_global_kernel)


def global_rhs(state, scn: GlobalScenario) -> np.ndarray:
    """Time derivative of a :class:`GlobalState` (or flat state vector)."""
    y = state.flat() if isinstance(state, GlobalState) else np.asarray(state, dtype=float)
    if y.shape != (scn.n_blue + scn.n_red + 2,):
        raise ScenarioError(f"state has shape {y.shape}, scenario needs "
                            f"({scn.n_blue + scn.n_red + 2},)")
    return _global_kernel(0.0, np.ascontiguousarray(y), kernel_args(scn))


# -- observables and runs ------------------------------------------------------------

@dataclass
class GlobalObservables:
    O_B: np.ndarray
    O_R: np.ndarray
    Theta_B: np.ndarray
    Theta_R: np.ndarray
    Delta_BR: np.ndarray
    Omega_BR: np.ndarray
    Omega_RB: np.ndarray


def global_observables(states: np.ndarray, n_blue: int, n_red: int) -> GlobalObservables:
    states = np.atleast_2d(states)
    tb = states[:, :n_blue]
    tr = states[:, n_blue:n_blue + n_red]
    O_B = np.abs(np.exp(1j * tb).mean(axis=1))
    O_R = np.abs(np.exp(1j * tr).mean(axis=1))
    Theta_B = tb.mean(axis=1)
    Theta_R = tr.mean(axis=1)
    delta = Theta_B - Theta_R
    s = np.sin(delta)
    return GlobalObservables(O_B, O_R, Theta_B, Theta_R, delta,
                             O_B * (1 + s) / 2, O_R * (1 - s) / 2)


@dataclass
class GlobalRun:
    scenario: GlobalScenario
    trajectory: Trajectory
    observables: GlobalObservables = field(repr=False)

    @property
    def times(self):
        return self.trajectory.times

    @property
    def p_B(self):
        return self.trajectory.states[:, -2]

    @property
    def p_R(self):
        return self.trajectory.states[:, -1]

    @property
    def p_final(self) -> float:
        return float(self.p_B[-1] - self.p_R[-1])

    @property
    def status(self) -> str:
        return self.trajectory.status


def population_freeze(n_phases: int, level: float, stop: bool) -> FreezeRule:
    return FreezeRule(watch=np.array([n_phases, n_phases + 1]), level=level,
                      group=np.array([0, 1]), snap=0.0, stop_when_group_frozen=stop)


def run_global(scn: GlobalScenario, t_final: float,
               settings: IntegratorSettings | None = None,
               stop_when_extinct: bool = False) -> GlobalRun:
    """Integrate the global model to ``t_final``.

    Populations freeze at 0 once they reach ``eps1``, which removes the
    near-discontinuity of the smoothed Heaviside from the step control.
    With ``stop_when_extinct`` the run ends at the first extinction; the
    populations cannot change after that point, so ``p_final`` is unaffected.
    """
    n = scn.n_blue + scn.n_red
    traj = integrate_with_freeze(GLOBAL_RHS, population_freeze(n, scn.eps1, stop_when_extinct),
                                 scn.initial_state(), t_final, settings, args=kernel_args(scn))
    obs = global_observables(traj.states, scn.n_blue, scn.n_red)
    return GlobalRun(scn, traj, obs)


GLOBAL_CSV_COLUMNS = ("t", "p_B", "p_R", "O_B", "O_R", "Theta_B", "Theta_R",
                      "Delta_BR", "Omega_BR", "Omega_RB")


def write_global_csv(run: GlobalRun, path, header: str = "") -> None:
    o = run.observables
    cols = np.column_stack([run.times, run.p_B, run.p_R, o.O_B, o.O_R, o.Theta_B,
                            o.Theta_R, o.Delta_BR, o.Omega_BR, o.Omega_RB])
    _write_csv(path, GLOBAL_CSV_COLUMNS, cols, header)


def _write_csv(path, columns, data, header: str = "") -> None:
    lines = [f"# {line}" for line in header.splitlines() if line]
    lines.append(",".join(columns))
    lines.extend(",".join(format(float(v), ".17g") for v in row)
                 for row in data)
    Path(path).write_text("\n".join(lines) + "\n")

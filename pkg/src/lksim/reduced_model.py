"""Dimensionally reduced surrogate of the global model.

Assuming each force is internally phase-locked, the phase dynamics collapse
onto the global-phase gap ``Delta_BR``:

    dDelta/dt = w - C sin(Delta) + S cos(Delta)        (g = 1)

with ``w = mean(omega_B) - mean(omega_R)``.  For ``K = C^2 + S^2 - w^2 > 0``
this is solvable in closed form; for ``K < 0`` the gap rotates periodically
with period ``2 pi / sqrt(-K)``.

The reduced state is three-dimensional (gap plus two populations), even
though the dimension count quoted alongside the original derivation is two.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .global_model import (FEEDBACK_MODES, GlobalScenario, ScenarioError,
                           _attenuation, _write_csv, population_freeze,
                           smooth_heaviside)
from .integrate import (IntegratorSettings, Trajectory, compile_rhs,
                        integrate_with_freeze)


class ReducedModelError(ValueError):
    pass


@dataclass(frozen=True)
class ReducedConstants:
    C: float
    S: float
    K: float
    omega_bar_B: float
    omega_bar_R: float
    d_T_BR: int
    d_T_RB: int
    n_blue: int
    n_red: int
    zeta_BR: float
    zeta_RB: float
    phi_BR: float
    phi_RB: float

    @property
    def omega_gap(self) -> float:
        return self.omega_bar_B - self.omega_bar_R

    @property
    def a_BR(self) -> float:
        return self.d_T_BR * self.zeta_BR / self.n_blue

    @property
    def a_RB(self) -> float:
        return self.d_T_RB * self.zeta_RB / self.n_red


def reduced_constants(scn) -> ReducedConstants:
    """Collapse a scenario (global or networked) to the reduced constants."""
    e = scn.engagement
    nB, nR = scn.blue_graph.n, scn.red_graph.n
    wB = float(np.mean(scn.omega_B))
    wR = float(np.mean(scn.omega_R))
    a_BR = e.d_T_BR * scn.zeta_BR / nB
    a_RB = e.d_T_RB * scn.zeta_RB / nR
    C = a_BR * math.cos(scn.phi_BR) + a_RB * math.cos(scn.phi_RB)
    S = a_BR * math.sin(scn.phi_BR) - a_RB * math.sin(scn.phi_RB)
    K = C * C + S * S - (wB - wR) ** 2
    return ReducedConstants(C, S, K, wB, wR, e.d_T_BR, e.d_T_RB, nB, nR,
                            float(scn.zeta_BR), float(scn.zeta_RB),
                            float(scn.phi_BR), float(scn.phi_RB))


def _integration_constant(c: ReducedConstants, delta0: float) -> float:
    if c.K <= 0:
        raise ReducedModelError(
            f"closed form needs K > 0 (K = {c.K:.6g}); integrate the reduced ODE instead")
    root = math.sqrt(c.K)
    arg = (c.C - (c.omega_gap - c.S) * math.tan(delta0 / 2.0)) / root
    if abs(arg) >= 1.0:
        raise ReducedModelError(f"artanh argument {arg:.6g} outside (-1, 1)")
    return 2.0 / root * math.atanh(arg)


def delta_analytic(c: ReducedConstants, t, delta0: float = 0.0):
    """Closed-form gap ``Delta_BR(t)`` (K > 0 only)."""
    const = _integration_constant(c, delta0)
    root = math.sqrt(c.K)
    t = np.asarray(t, dtype=float)
    num = c.C - root * np.tanh((t + const) * root / 2.0)
    den = c.omega_gap - c.S
    if den == 0.0:
        out = 2.0 * np.arctan2(num, den)
    else:
        out = 2.0 * np.arctan(num / den)
    return float(out) if out.ndim == 0 else out


def delta_asymptotic(c: ReducedConstants) -> float:
    """Stable fixed point of the gap for ``K >= 0``."""
    if c.K < 0:
        raise ReducedModelError(f"K = {c.K:.6g} < 0: the gap is periodic, no fixed point")
    root = math.sqrt(c.K)
    # tan(Delta/2) = (C - sqrt K)/(w - S) = (w + S)/(C + sqrt K); use the
    # better-conditioned quotient so w = S still selects the stable root
    num, den = c.C - root, c.omega_gap - c.S
    alt_num, alt_den = c.omega_gap + c.S, c.C + root
    if abs(alt_den) > abs(den):
        num, den = alt_num, alt_den
    if den == 0.0:
        return 2.0 * math.atan2(num, den)
    return 2.0 * math.atan(num / den)


def delta_dot_initial(c: ReducedConstants) -> float:
    """Initial rate of the gap, taken from ``Delta_BR(0) = 0``."""
    return c.omega_gap + c.S


def delta_period(c: ReducedConstants) -> float:
    """Rotation period of the gap in the ``K < 0`` regime (g = 1)."""
    if c.K >= 0:
        raise ReducedModelError("gap is not periodic for K >= 0")
    return 2.0 * math.pi / math.sqrt(-c.K)


@dataclass(frozen=True)
class ReducedState:
    Delta_BR: float
    p_B: float
    p_R: float

    def flat(self) -> np.ndarray:
        return np.array([self.Delta_BR, self.p_B, self.p_R])


_FEEDBACK_CODE = {name: k for k, name in enumerate(FEEDBACK_MODES)}


def _reduced_args(c: ReducedConstants, feedback: str, kappa_BR: float, kappa_RB: float,
                  p_B0: float, p_R0: float, eps1: float, eps2: float):
    if feedback not in _FEEDBACK_CODE:
        raise ScenarioError(f"feedback must be one of {FEEDBACK_MODES}")
    return (np.array([c.omega_gap, c.a_BR, c.a_RB, c.phi_BR, c.phi_RB,
                      kappa_BR, kappa_RB, p_B0, p_R0, eps1, eps2,
                      _FEEDBACK_CODE[feedback]]),)


@njit(cache=True)
def _reduced_kernel(t, y, args):
    prm = args[0]
    w, a_BR, a_RB, phi_BR, phi_RB = prm[0], prm[1], prm[2], prm[3], prm[4]
    kappa_BR, kappa_RB, p_B0, p_R0 = prm[5], prm[6], prm[7], prm[8]
    eps1, eps2 = prm[9], prm[10]
    code = int(prm[11])
    delta = y[0]
    p_B = y[1]
    p_R = y[2]
    g_B = _attenuation(p_B, p_B0, code)
    g_R = _attenuation(p_R, p_R0, code)
    out = np.empty(3)
    out[0] = w - (a_BR * g_B * math.sin(delta - phi_BR) + a_RB * g_R * math.sin(delta + phi_RB))
    s = math.sin(delta)
    out[1] = -kappa_RB * (1.0 - s) / 2.0 * p_R * smooth_heaviside(p_B, eps1, eps2)
    out[2] = -kappa_BR * (1.0 + s) / 2.0 * p_B * smooth_heaviside(p_R, eps1, eps2)
    return out


REDUCED_RHS = compile_rhs(_reduced_kernel)


def reduced_rhs(state, consts: ReducedConstants, feedback: str = "none",
                kappa_BR: float = 0.0, kappa_RB: float = 0.0,
                p_B0: float = 1.0, p_R0: float = 1.0,
                eps1: float = 1e-15, eps2: float = 1e-20) -> np.ndarray:
    """Derivative of ``(Delta_BR, p_B, p_R)``.

    There is deliberately no intra-coupling attenuation argument: projecting
    onto the zero Laplacian mode removes it from the gap equation.
    """
    y = state.flat() if isinstance(state, ReducedState) else np.asarray(state, dtype=float)
    args = _reduced_args(consts, feedback, kappa_BR, kappa_RB, p_B0, p_R0, eps1, eps2)
    return _reduced_kernel(0.0, y, args)


@dataclass
class ReducedRun:
    constants: ReducedConstants
    trajectory: Trajectory = field(repr=False)

    @property
    def times(self):
        return self.trajectory.times

    @property
    def Delta_BR(self):
        return self.trajectory.states[:, 0]

    @property
    def p_B(self):
        return self.trajectory.states[:, 1]

    @property
    def p_R(self):
        return self.trajectory.states[:, 2]

    @property
    def p_final(self) -> float:
        return float(self.p_B[-1] - self.p_R[-1])

    @property
    def status(self) -> str:
        return self.trajectory.status


def run_reduced(scn: GlobalScenario, t_final: float,
                settings: IntegratorSettings | None = None,
                stop_when_extinct: bool = False,
                feedback: str | None = None) -> ReducedRun:
    """Integrate the reduced system from the scenario's initial gap."""
    c = reduced_constants(scn)
    fb = scn.feedback if feedback is None else feedback
    args = _reduced_args(c, fb, scn.kappa_BR, scn.kappa_RB, scn.p_B0, scn.p_R0,
                         scn.eps1, scn.eps2)
    delta0 = float(np.mean(scn.theta0_B) - np.mean(scn.theta0_R))
    traj = integrate_with_freeze(REDUCED_RHS, population_freeze(1, scn.eps1, stop_when_extinct),
                                 [delta0, scn.p_B0, scn.p_R0], t_final, settings, args=args)
    return ReducedRun(c, traj)


def integrate_gap(c: ReducedConstants, t_final: float, delta0: float = 0.0,
                  settings: IntegratorSettings | None = None,
                  t_out: np.ndarray | None = None) -> Trajectory:
    """Gap-only reduced ODE with g = 1 and no attrition."""
    args = _reduced_args(c, "none", 0.0, 0.0, 1.0, 1.0, 1e-15, 1e-20)
    return integrate_with_freeze(REDUCED_RHS, None, [delta0, 1.0, 1.0], t_final,
                                 settings, args=args, t_out=t_out)


REDUCED_CSV_COLUMNS = ("t", "Delta_BR", "p_B", "p_R")


def write_reduced_csv(run: ReducedRun, path, header: str = "") -> None:
    _write_csv(path, REDUCED_CSV_COLUMNS,
               np.column_stack([run.times, run.Delta_BR, run.p_B, run.p_R]), header)

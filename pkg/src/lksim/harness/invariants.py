"""Trajectory invariants and a seeded generator of random scenarios."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..global_model import FEEDBACK_MODES
from .runner import RunResult
from .scenario import Scenario

O_TOL = 1e-12


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.ok else "FAIL"
        return f"{mark} {self.name}" + (f" ({self.detail})" if self.detail else "")


def _within(name, arr, lo, hi, tol=O_TOL) -> Check:
    arr = np.asarray(arr, dtype=float)
    bad = (arr < lo - tol) | (arr > hi + tol) | ~np.isfinite(arr)
    detail = f"range [{np.nanmin(arr):.6g}, {np.nanmax(arr):.6g}]" if arr.size else "empty"
    return Check(name, not bad.any(), detail)


def _time_grid(result: RunResult, t_final: float) -> Check:
    t = result.run.times
    ok = bool(t[0] == 0.0 and np.all(np.diff(t) > 0) and t[-1] <= t_final * (1 + 1e-12))
    if result.status == "completed":
        ok = ok and math.isclose(t[-1], t_final, rel_tol=1e-12)
    return Check("time grid increasing from 0", ok, f"{t.size} samples, last {t[-1]:.6g}")


def check_run(result: RunResult, scn: Scenario, t_final: float | None = None) -> list[Check]:
    """Invariant checks for one run on any tier."""
    t_final = scn.t_final if t_final is None else t_final
    eps1 = float(scn.config["numerics"]["eps1"])
    floor = -10.0 * eps1
    checks = [_time_grid(result, t_final)]
    run = result.run
    if result.tier == "global":
        o = run.observables
        checks += [
            _within("O_B, O_R in [0,1]", np.r_[o.O_B, o.O_R], 0.0, 1.0),
            _within("Omega_BR, Omega_RB in [0,1]", np.r_[o.Omega_BR, o.Omega_RB], 0.0, 1.0),
            Check("Omega_BR + Omega_RB <= O_B + O_R",
                  bool(np.all(o.Omega_BR + o.Omega_RB <= o.O_B + o.O_R + O_TOL))),
            _within("populations >= -10 eps1", np.r_[run.p_B, run.p_R], floor, np.inf),
        ]
    elif result.tier == "reduced":
        checks.append(_within("populations >= -10 eps1", np.r_[run.p_B, run.p_R],
                              floor, np.inf))
    else:
        checks += [
            _within("local order in [0,1]", run.local_orders(), 0.0, 1.0),
            _within("populations >= -10 eps1", run.p, floor, np.inf),
            _frozen_stay_frozen(run),
        ]
    return checks


def _frozen_stay_frozen(run) -> Check:
    """Once a node is at or below threshold its population and phase stay fixed."""
    thr = run.scenario.extinction_threshold
    p, theta = run.p, run.theta
    dead = p <= thr
    first = np.where(dead.any(axis=0), dead.argmax(axis=0), -1)
    bad = []
    for node in np.flatnonzero(first >= 0):
        k = first[node]
        if (not dead[k:, node].all() or np.any(p[k:, node] != p[k, node])
                or np.any(theta[k:, node] != theta[k, node])):
            bad.append(int(node) + 1)
    n_dead = int((first >= 0).sum())
    return Check("frozen nodes stay frozen", not bad,
                 f"{n_dead} frozen" + (f", violated at nodes {bad}" if bad else ""))


def conservation_check(result: RunResult, rel: float = 1e-8) -> Check:
    """Per-force population totals constant (meaningful when kappa = 0)."""
    run = result.run
    dev = 0.0
    for total in (run.p_B_total, run.p_R_total):
        if total[0] > 0:
            dev = max(dev, float(np.max(np.abs(total - total[0])) / total[0]))
    return Check("per-force totals conserved", dev < rel, f"max rel deviation {dev:.3g}")


# -- random scenarios -------------------------------------------------------------------------

def random_config(seed: int, t_final: float = 100.0) -> dict:
    """Small seeded scenario with parameters spread over their admissible ranges.

    Lethalities are large enough that node extinctions are common, so the
    freezing logic is exercised.
    """
    rng = np.random.default_rng(seed)
    nB, nR = (int(v) for v in rng.integers(3, 11, size=2))
    n_eng = int(rng.integers(1, min(nB, nR) + 1))
    eng_nodes = sorted(int(v) for v in rng.choice(np.arange(1, min(nB, nR) + 1),
                                                  n_eng, replace=False))

    def uni(lo, hi):
        return float(rng.uniform(lo, hi))

    def pops(n):
        return [round(uni(1.0, 50.0), 6) for _ in range(n)]

    return {
        "name": f"random-{seed}",
        "t_final": float(t_final),
        "seed": int(seed),
        "graphs": {
            "blue": {"kind": "erdos_renyi", "n": nB, "p": 0.5, "seed": int(seed)},
            "red": {"kind": "erdos_renyi", "n": nR, "p": 0.5, "seed": int(seed) + 7919},
            "engagement": {"kind": "identity", "nodes": eng_nodes},
        },
        "coupling": {"sigma_B": uni(0, 3), "sigma_R": uni(0, 3), "zeta_BR": uni(0, 2),
                     "zeta_RB": uni(0, 2), "phi_BR": uni(0, 2 * math.pi),
                     "phi_RB": uni(0, 2 * math.pi)},
        "lethality": {"kappa_BR": uni(0.01, 0.5), "kappa_RB": uni(0.01, 0.5)},
        "manoeuvre": {"gamma_B": uni(0, 2), "gamma_R": uni(0, 2), "standing_force": 1.0},
        "frequencies": {
            "omega_B": {"kind": "uniform", "low": 0.0, "high": 2.0, "mean": None},
            "omega_R": {"kind": "uniform", "low": 0.0, "high": 2.0, "mean": None},
        },
        "populations": {"p_B": pops(nB), "p_R": pops(nR)},
        "initial_phases": {"theta0_B": {"kind": "list", "values": [uni(-math.pi, math.pi)
                                                                   for _ in range(nB)]},
                           "theta0_R": {"kind": "list", "values": [uni(-math.pi, math.pi)
                                                                   for _ in range(nR)]}},
        "feedback": {"global": FEEDBACK_MODES[int(rng.integers(3))],
                     "networked": ("none", "pairwise")[int(rng.integers(2))],
                     "intra": "none"},
        "numerics": {"eps1": 1e-15, "eps2": 1e-20, "extinction_threshold": None,
                     "rel_tol": 1e-8, "abs_tol": 1e-10, "output_samples": 400},
    }


def random_scenario(seed: int, t_final: float = 100.0) -> Scenario:
    return Scenario(random_config(seed, t_final))

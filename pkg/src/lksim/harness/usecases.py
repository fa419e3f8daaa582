"""Built-in scenarios for the three reference use-cases.

* 1: complete 4-ary tree (Blue, 21 nodes) against an Erdos-Renyi graph
  (Red, 21 nodes, p = 0.4); leaves 6..21 engage the same-label Red node.
* 2: "fighting fish", two identical ring-and-hub graphs engaged on nodes 1..3
  with reserves parked on the far side of the ring.
* 3: a 50-node Blue transport network against five isolated Red nodes.

Values not pinned down by the reference parameter table (default
frustrations for use-case 1, default couplings for use-cases 2 and 3, the
use-case 3 horizon) are listed in the project notes.
"""
from __future__ import annotations

import copy
import math

from .scenario import Scenario, apply_overrides

USECASE_IDS = (1, 2, 3)
VARIANTS = {1: ("default",), 2: ("default", "random_omega"), 3: ("default",)}

_EQUISPACED = {"kind": "equispaced", "half_width": math.pi / 4}

_NUMERICS = {"eps1": 1e-15, "eps2": 1e-20, "extinction_threshold": None,
             "rel_tol": 1e-8, "abs_tol": 1e-10, "output_samples": 2000}


def _usecase1() -> dict:
    return {
        "name": "usecase1",
        "t_final": 1e4,
        "seed": 0,
        "graphs": {
            "blue": {"kind": "kary_tree", "branching": 4, "depth": 2},
            "red": {"kind": "erdos_renyi", "n": 21, "p": 0.4, "seed": 1},
            "engagement": {"kind": "identity", "nodes": list(range(6, 22))},
        },
        "coupling": {"sigma_B": 8.0, "sigma_R": 0.5, "zeta_BR": 0.4, "zeta_RB": 0.4,
                     "phi_BR": math.pi / 4, "phi_RB": math.pi / 6},
        "lethality": {"kappa_BR": 0.005, "kappa_RB": 0.005},
        "manoeuvre": {"gamma_B": 1.0, "gamma_R": 1.0, "standing_force": 1.0},
        "frequencies": {
            "omega_B": {"kind": "uniform", "low": 0.0, "high": 1.0, "mean": 0.503},
            "omega_R": {"kind": "uniform", "low": 0.0, "high": 1.0, "mean": 0.551},
        },
        # 100 per node, 2100 per force on the global tier
        "populations": {"p_B": 100.0, "p_R": 100.0},
        "initial_phases": {"theta0_B": dict(_EQUISPACED), "theta0_R": dict(_EQUISPACED)},
        "feedback": {"global": "none", "networked": "none", "intra": "none"},
        "numerics": dict(_NUMERICS),
    }


def _usecase2() -> dict:
    reserves = {"default": 10.0, "nodes": {11: 100.0, 12: 100.0}}
    return {
        "name": "usecase2",
        "t_final": 1e3,
        "seed": 0,
        "graphs": {
            "blue": {"kind": "fighting_fish"},
            "red": {"kind": "fighting_fish"},
            "engagement": {"kind": "identity", "nodes": [1, 2, 3]},
        },
        "coupling": {"sigma_B": 1.0, "sigma_R": 1.0, "zeta_BR": 0.5, "zeta_RB": 0.5,
                     "phi_BR": math.pi / 4, "phi_RB": math.pi / 4},
        "lethality": {"kappa_BR": 0.1, "kappa_RB": 0.1},
        "manoeuvre": {"gamma_B": 1.0, "gamma_R": 1.0, "standing_force": 1.0},
        "frequencies": {
            "omega_B": {"kind": "constant", "value": 1.0},
            "omega_R": {"kind": "constant", "value": 1.0},
        },
        "populations": {"p_B": copy.deepcopy(reserves), "p_R": copy.deepcopy(reserves)},
        "initial_phases": {"theta0_B": dict(_EQUISPACED), "theta0_R": dict(_EQUISPACED)},
        "feedback": {"global": "none", "networked": "pairwise", "intra": "none"},
        "numerics": dict(_NUMERICS),
    }


def _usecase3() -> dict:
    front = {k: 500.0 for k in range(1, 6)}
    return {
        "name": "usecase3",
        "t_final": 1e3,
        "seed": 0,
        "graphs": {
            "blue": {"kind": "transport", "n": 50, "mean_degree": 4.0, "front": 5, "seed": 0},
            "red": {"kind": "empty", "n": 5},
            "engagement": {"kind": "identity", "nodes": [1, 2, 3, 4, 5]},
        },
        "coupling": {"sigma_B": 0.25, "sigma_R": 0.0, "zeta_BR": 0.5, "zeta_RB": 0.5,
                     "phi_BR": math.pi / 4, "phi_RB": 0.0},
        "lethality": {"kappa_BR": 0.01, "kappa_RB": 0.01},
        "manoeuvre": {"gamma_B": 1.0, "gamma_R": 0.0, "standing_force": 1.0},
        "frequencies": {
            "omega_B": {"kind": "uniform", "low": 0.0, "high": 2.0, "mean": None},
            "omega_R": {"kind": "uniform", "low": 0.0, "high": 2.0, "mean": None},
        },
        "populations": {"p_B": {"default": 250.0, "nodes": front}, "p_R": 2750.0},
        "initial_phases": {"theta0_B": dict(_EQUISPACED), "theta0_R": dict(_EQUISPACED)},
        "feedback": {"global": "none", "networked": "none", "intra": "none"},
        "numerics": dict(_NUMERICS),
    }


_BUILDERS = {1: _usecase1, 2: _usecase2, 3: _usecase3}


def usecase_config(uc: int, variant: str = "default") -> dict:
    if uc not in _BUILDERS:
        raise ValueError(f"unknown use-case {uc!r}; choose from {USECASE_IDS}")
    if variant not in VARIANTS[uc]:
        raise ValueError(f"use-case {uc} has no variant {variant!r}; choose from {VARIANTS[uc]}")
    config = _BUILDERS[uc]()
    if variant == "random_omega":
        config["name"] = "usecase2-random-omega"
        for key in ("omega_B", "omega_R"):
            config["frequencies"][key] = {"kind": "uniform", "low": 0.0, "high": 2.0,
                                          "mean": None}
    return config


def build_usecase(uc: int, overrides=None, variant: str = "default") -> Scenario:
    """Scenario for use-case ``uc`` with optional ``path=value`` overrides."""
    return Scenario(apply_overrides(usecase_config(uc, variant), overrides))

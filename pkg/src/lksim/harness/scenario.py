"""Scenario files: a nested YAML mapping that builds every model tier.

One file describes both forces once.  Per-node populations feed the
networked tier directly; the global and reduced tiers use their per-force
totals.  Every leaf can be changed with a dotted override such as
``coupling.phi_BR=pi/4``.

Example (use-case 2, abridged)::

    name: usecase2
    t_final: 1000.0
    seed: 0                      # frequency draw
    graphs:
      blue: {kind: fighting_fish}
      red: {kind: fighting_fish}
      engagement: {kind: identity, nodes: [1, 2, 3]}
    coupling: {sigma_B: 1.0, sigma_R: 1.0, zeta_BR: 0.5, zeta_RB: 0.5,
               phi_BR: 0.785398, phi_RB: 0.785398}
    lethality: {kappa_BR: 0.1, kappa_RB: 0.1}
    manoeuvre: {gamma_B: 1.0, gamma_R: 1.0, standing_force: 1.0}
    frequencies:
      omega_B: {kind: constant, value: 1.0}
      omega_R: {kind: constant, value: 1.0}
    populations:
      p_B: {default: 10.0, nodes: {11: 100.0, 12: 100.0}}
      p_R: {default: 10.0, nodes: {11: 100.0, 12: 100.0}}
    initial_phases:
      theta0_B: {kind: equispaced, half_width: 0.785398}
      theta0_R: {kind: equispaced, half_width: 0.785398}
    feedback: {global: none, networked: pairwise, intra: none}
    numerics: {eps1: 1.0e-15, eps2: 1.0e-20, extinction_threshold: null,
               rel_tol: 1.0e-08, abs_tol: 1.0e-10, output_samples: 2000}
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .. import __version__
from ..global_model import GlobalScenario, equispaced_phases
from ..graphs import (EngagementMap, ForceGraph, build_complete_kary_tree,
                      build_empty, build_erdos_renyi, build_fighting_fish,
                      build_transport_network, load_engagement, load_graph)
from ..integrate import IntegratorSettings
from ..network_model import NetworkedScenario

TIERS = ("global", "reduced", "networked")


class ScenarioFileError(ValueError):
    """Malformed scenario file or override."""


# -- values and overrides ----------------------------------------------------------

_PI_EXPR = re.compile(r"^\s*([-+]?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$")


def parse_value(text: str):
    """Parse an override value: YAML scalars/lists plus ``pi`` multiples like ``3*pi/4``."""
    m = _PI_EXPR.match(text)
    if m:
        coef = m.group(1)
        if coef in ("", "+"):
            c = 1.0
        elif coef == "-":
            c = -1.0
        else:
            c = float(coef)
        div = float(m.group(2)) if m.group(2) else 1.0
        return c * math.pi / div
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioFileError(f"cannot parse value {text!r}: {exc}") from exc


def _key(node, key: str, path: str):
    """Resolve one path segment; integer node labels may be written as digits."""
    if isinstance(node, dict):
        if key in node:
            return key
        if key.isdigit() and int(key) in node:
            return int(key)
    raise ScenarioFileError(f"unknown scenario key {path!r}")


def get_path(config: dict, path: str):
    node = config
    for key in path.split("."):
        node = node[_key(node, key, path)]
    return node


def set_path(config: dict, path: str, value) -> dict:
    """Return a copy of ``config`` with ``path`` set; the key must already exist."""
    out = copy.deepcopy(config)
    keys = path.split(".")
    node = out
    for key in keys[:-1]:
        node = node[_key(node, key, path)]
    last = _key(node, keys[-1], path)
    if isinstance(value, np.generic):
        value = value.item()
    node[last] = value
    return out


def apply_overrides(config: dict, overrides) -> dict:
    """Apply ``path=value`` strings or a ``{path: value}`` mapping."""
    if not overrides:
        return copy.deepcopy(config)
    if isinstance(overrides, dict):
        items = overrides.items()
    else:
        items = []
        for text in overrides:
            if "=" not in text:
                raise ScenarioFileError(f"override {text!r} is not of the form path=value")
            path, raw = text.split("=", 1)
            items.append((path.strip(), parse_value(raw)))
    for path, value in items:
        config = set_path(config, path, value)
    return config


# -- building blocks ----------------------------------------------------------------

def _graph(spec: dict, base_dir: Path) -> ForceGraph:
    kind = spec.get("kind")
    if kind == "kary_tree":
        return build_complete_kary_tree(int(spec["branching"]), int(spec["depth"]))
    if kind == "erdos_renyi":
        return build_erdos_renyi(int(spec["n"]), float(spec["p"]), int(spec["seed"]))
    if kind == "fighting_fish":
        return build_fighting_fish()
    if kind == "empty":
        return build_empty(int(spec["n"]))
    if kind == "transport":
        return build_transport_network(int(spec["n"]), float(spec["mean_degree"]),
                                       int(spec["front"]), int(spec["seed"]))
    if kind == "file":
        return load_graph(base_dir / spec["path"], spec.get("n"))
    raise ScenarioFileError(f"unknown graph kind {kind!r}")


def _engagement(spec: dict, n_blue: int, n_red: int, base_dir: Path) -> EngagementMap:
    kind = spec.get("kind")
    if kind == "identity":
        return EngagementMap.identity(n_blue, n_red, spec["nodes"])
    if kind == "pairs":
        pairs = np.asarray(spec["pairs"], dtype=np.int64).reshape(-1, 2) - 1
        return EngagementMap(n_blue, n_red, pairs)
    if kind == "file":
        return load_engagement(base_dir / spec["path"], n_blue, n_red)
    raise ScenarioFileError(f"unknown engagement kind {kind!r}")


def _per_node(spec, n: int, what: str) -> np.ndarray:
    """Scalar, explicit list, or ``{default: v, nodes: {label: v}}`` (1-based labels)."""
    if isinstance(spec, (int, float)):
        return np.full(n, float(spec))
    if isinstance(spec, list):
        if len(spec) != n:
            raise ScenarioFileError(f"{what} lists {len(spec)} values for {n} nodes")
        return np.asarray(spec, dtype=float)
    if isinstance(spec, dict):
        out = np.full(n, float(spec["default"]))
        for label, value in (spec.get("nodes") or {}).items():
            k = int(label)
            if not 1 <= k <= n:
                raise ScenarioFileError(f"{what}: node {k} outside 1..{n}")
            out[k - 1] = float(value)
        return out
    raise ScenarioFileError(f"cannot read {what} from {spec!r}")


def _frequencies(spec, n: int, rng: np.random.Generator, what: str) -> np.ndarray:
    if not isinstance(spec, dict):
        return _per_node(spec, n, what)
    kind = spec.get("kind")
    if kind == "constant":
        return np.full(n, float(spec["value"]))
    if kind == "uniform":
        w = rng.uniform(float(spec["low"]), float(spec["high"]), n)
        if spec.get("mean") is not None:
            w = w + (float(spec["mean"]) - w.mean())
        return w
    if kind == "list":
        return _per_node(list(spec["values"]), n, what)
    raise ScenarioFileError(f"unknown frequency kind {kind!r} for {what}")


def _phases(spec, n: int, what: str) -> np.ndarray:
    if isinstance(spec, dict) and spec.get("kind") == "equispaced":
        return equispaced_phases(n, float(spec["half_width"]))
    if isinstance(spec, dict) and spec.get("kind") == "list":
        return _per_node(list(spec["values"]), n, what)
    return _per_node(spec, n, what)


# -- the scenario object ---------------------------------------------------------------

@dataclass
class Scenario:
    """A validated scenario configuration and the models built from it."""

    config: dict
    base_dir: Path = Path(".")

    def __post_init__(self):
        self.config = copy.deepcopy(self.config)
        self._cache = {}
        # build once so schema errors surface at construction
        self.global_scenario()
        self.networked_scenario()

    # identity

    @property
    def name(self) -> str:
        return str(self.config.get("name", "scenario"))

    @property
    def seed(self) -> int:
        return int(self.config["seed"])

    @property
    def t_final(self) -> float:
        return float(self.config["t_final"])

    @property
    def hash(self) -> str:
        return scenario_hash(self.config)

    def header(self, extra: str = "") -> str:
        lines = [f"lksim {__version__}", f"scenario: {self.name}",
                 f"seed: {self.seed}", f"scenario_hash: {self.hash}"]
        if extra:
            lines.extend(extra.splitlines())
        return "\n".join(lines)

    def with_overrides(self, overrides) -> "Scenario":
        return Scenario(apply_overrides(self.config, overrides), self.base_dir)

    def dump(self) -> str:
        return dump_config(self.config)

    # model construction

    def _parts(self):
        if "parts" in self._cache:
            return self._cache["parts"]
        c = self.config
        try:
            g = c["graphs"]
            blue = _graph(g["blue"], self.base_dir)
            red = _graph(g["red"], self.base_dir)
            engagement = _engagement(g["engagement"], blue.n, red.n, self.base_dir)
            rng = np.random.default_rng(int(c["seed"]))
            f = c["frequencies"]
            # draw order: Blue first, then Red
            omega_B = _frequencies(f["omega_B"], blue.n, rng, "omega_B")
            omega_R = _frequencies(f["omega_R"], red.n, rng, "omega_R")
            p = c["populations"]
            p_B = _per_node(p["p_B"], blue.n, "p_B")
            p_R = _per_node(p["p_R"], red.n, "p_R")
            ph = c["initial_phases"]
            theta_B = _phases(ph["theta0_B"], blue.n, "theta0_B")
            theta_R = _phases(ph["theta0_R"], red.n, "theta0_R")
            for section in ("coupling", "lethality", "manoeuvre", "feedback", "numerics"):
                if not isinstance(c[section], dict):
                    raise ScenarioFileError(f"section {section!r} must be a mapping")
        except KeyError as exc:
            raise ScenarioFileError(f"missing scenario key {exc}") from exc
        parts = dict(blue=blue, red=red, engagement=engagement, omega_B=omega_B,
                     omega_R=omega_R, p_B=p_B, p_R=p_R, theta_B=theta_B, theta_R=theta_R)
        self._cache["parts"] = parts
        return parts

    def _num(self, section: str, key: str) -> float:
        try:
            return float(self.config[section][key])
        except KeyError as exc:
            raise ScenarioFileError(f"missing scenario key {section}.{key}") from exc
        except (TypeError, ValueError) as exc:
            raise ScenarioFileError(f"{section}.{key} must be a number") from exc

    def global_scenario(self) -> GlobalScenario:
        if "global" not in self._cache:
            q = self._parts()
            self._cache["global"] = GlobalScenario(
                q["blue"], q["red"], q["engagement"],
                sigma_B=self._num("coupling", "sigma_B"),
                sigma_R=self._num("coupling", "sigma_R"),
                zeta_BR=self._num("coupling", "zeta_BR"),
                zeta_RB=self._num("coupling", "zeta_RB"),
                phi_BR=self._num("coupling", "phi_BR"),
                phi_RB=self._num("coupling", "phi_RB"),
                omega_B=q["omega_B"], omega_R=q["omega_R"],
                kappa_BR=self._num("lethality", "kappa_BR"),
                kappa_RB=self._num("lethality", "kappa_RB"),
                p_B0=float(q["p_B"].sum()), p_R0=float(q["p_R"].sum()),
                theta0_B=q["theta_B"], theta0_R=q["theta_R"],
                feedback=str(self.config["feedback"]["global"]),
                intra_feedback=str(self.config["feedback"].get("intra", "none")),
                eps1=self._num("numerics", "eps1"), eps2=self._num("numerics", "eps2"))
        return self._cache["global"]

    def networked_scenario(self) -> NetworkedScenario:
        if "networked" not in self._cache:
            q = self._parts()
            thr = self.config["numerics"].get("extinction_threshold")
            self._cache["networked"] = NetworkedScenario(
                q["blue"], q["red"], q["engagement"],
                omega=np.r_[q["omega_B"], q["omega_R"]],
                theta0=np.r_[q["theta_B"], q["theta_R"]],
                p0=np.r_[q["p_B"], q["p_R"]],
                sigma_B=self._num("coupling", "sigma_B"),
                sigma_R=self._num("coupling", "sigma_R"),
                zeta_BR=self._num("coupling", "zeta_BR"),
                zeta_RB=self._num("coupling", "zeta_RB"),
                phi_BR=self._num("coupling", "phi_BR"),
                phi_RB=self._num("coupling", "phi_RB"),
                kappa_BR=self._num("lethality", "kappa_BR"),
                kappa_RB=self._num("lethality", "kappa_RB"),
                gamma_B=self._num("manoeuvre", "gamma_B"),
                gamma_R=self._num("manoeuvre", "gamma_R"),
                standing_force=self._num("manoeuvre", "standing_force"),
                feedback=str(self.config["feedback"]["networked"]),
                extinction_threshold=None if thr is None else float(thr),
                eps1=self._num("numerics", "eps1"), eps2=self._num("numerics", "eps2"))
        return self._cache["networked"]

    def model(self, tier: str):
        if tier not in TIERS:
            raise ScenarioFileError(f"tier must be one of {TIERS}")
        return self.networked_scenario() if tier == "networked" else self.global_scenario()

    def settings(self) -> IntegratorSettings:
        n = self.config["numerics"]
        return IntegratorSettings(rel_tol=float(n["rel_tol"]), abs_tol=float(n["abs_tol"]),
                                  output_samples=int(n["output_samples"]))


# -- files ---------------------------------------------------------------------------------

def _plain(obj):
    """Convert numpy scalars/arrays so the YAML dump stays portable."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dump_config(config: dict) -> str:
    return yaml.safe_dump(_plain(config), sort_keys=False, default_flow_style=None)


def scenario_hash(config: dict) -> str:
    blob = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        config = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ScenarioFileError(f"{path}: {exc}") from exc
    if not isinstance(config, dict):
        raise ScenarioFileError(f"{path}: top level must be a mapping")
    return Scenario(config, path.parent)


def save_scenario(scn: Scenario, path) -> None:
    Path(path).write_text(scn.dump())

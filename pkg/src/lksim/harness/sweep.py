"""Two-parameter sweeps over a scenario and their contour bundles."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .runner import run_tier
from .scenario import TIERS, Scenario, ScenarioFileError, get_path, set_path

OK_STATUSES = ("completed", "extinct")
DEFAULT_STEPS = 33


@dataclass(frozen=True)
class Axis:
    path: str
    lo: float
    hi: float
    steps: int = DEFAULT_STEPS

    def __post_init__(self):
        if self.steps < 2:
            raise ScenarioFileError(f"axis {self.path}: need at least 2 steps")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.steps)

    @classmethod
    def parse(cls, text: str) -> "Axis":
        """``path:lo:hi:steps``; bounds accept ``pi`` multiples."""
        from .scenario import parse_value
        parts = text.split(":")
        if len(parts) != 4:
            raise ScenarioFileError(f"axis {text!r} is not path:lo:hi:steps")
        try:
            return cls(parts[0], float(parse_value(parts[1])), float(parse_value(parts[2])),
                       int(parts[3]))
        except (TypeError, ValueError) as exc:
            raise ScenarioFileError(f"axis {text!r}: {exc}") from exc


@dataclass
class SweepSpec:
    axis1: Axis
    axis2: Axis
    base: Scenario
    tier: str = "global"
    t_final: float | None = None
    outcome: str = "p_final"
    workers: int = 1
    # exact for p_final: populations are constant once a force is extinct
    stop_when_extinct: bool = True

    def __post_init__(self):
        if self.tier not in TIERS:
            raise ScenarioFileError(f"tier must be one of {TIERS}")
        if self.outcome != "p_final":
            raise ScenarioFileError("the only supported outcome is p_final")
        for axis in (self.axis1, self.axis2):
            get_path(self.base.config, axis.path)
        if self.workers < 1:
            raise ScenarioFileError("workers must be >= 1")


@dataclass
class SweepGrid:
    axis1: Axis
    axis2: Axis
    tier: str
    p_final: np.ndarray
    status: np.ndarray
    header: str = ""
    messages: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return self.p_final.shape

    @property
    def ok(self) -> np.ndarray:
        return np.isin(self.status, OK_STATUSES)

    def cell(self, i: int, j: int) -> tuple[float, float]:
        return float(self.axis1.values[i]), float(self.axis2.values[j])

    def blue_fraction(self) -> float:
        ok = self.ok
        return float(np.mean(self.p_final[ok] > 0)) if ok.any() else math.nan

    def red_fraction(self) -> float:
        ok = self.ok
        return float(np.mean(self.p_final[ok] < 0)) if ok.any() else math.nan

    def rows(self):
        a1, a2 = self.axis1.values, self.axis2.values
        for i in range(a1.size):
            for j in range(a2.size):
                yield a1[i], a2[j], self.p_final[i, j], self.status[i, j]


def _cell_config(base: dict, a1: Axis, v1: float, a2: Axis, v2: float) -> dict:
    return set_path(set_path(base, a1.path, float(v1)), a2.path, float(v2))


def _run_cell(job):
    config, base_dir, tier, t_final, stop = job
    try:
        res = run_tier(Scenario(config, base_dir), tier, t_final, stop_when_extinct=stop)
        return res.p_final, res.status, ""
    except Exception as exc:  # a failing cell must not abort the sweep
        return math.nan, "error", f"{type(exc).__name__}: {exc}"


def run_sweep(spec: SweepSpec, progress=None) -> SweepGrid:
    """Evaluate every cell of the grid.

    Each cell is an independent run, so the grid is identical for any
    number of workers.
    """
    a1, a2 = spec.axis1, spec.axis2
    jobs = [(_cell_config(spec.base.config, a1, v1, a2, v2), spec.base.base_dir, spec.tier,
             spec.t_final, spec.stop_when_extinct)
            for v1 in a1.values for v2 in a2.values]
    if spec.workers == 1:
        results = []
        for k, job in enumerate(jobs):
            results.append(_run_cell(job))
            if progress:
                progress(k + 1, len(jobs))
    else:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_run_cell, jobs, chunksize=1))
    p = np.array([r[0] for r in results], dtype=float).reshape(a1.steps, a2.steps)
    status = np.array([r[1] for r in results], dtype=object).reshape(a1.steps, a2.steps)
    messages = {divmod(k, a2.steps): r[2] for k, r in enumerate(results) if r[2]}
    t_final = spec.base.t_final if spec.t_final is None else spec.t_final
    header = spec.base.header(f"tier: {spec.tier}\nt_final: {t_final!r}\n"
                              f"axis1: {a1.path} {a1.lo!r} {a1.hi!r} {a1.steps}\n"
                              f"axis2: {a2.path} {a2.lo!r} {a2.hi!r} {a2.steps}")
    return SweepGrid(a1, a2, spec.tier, p, status, header, messages)


# -- output ----------------------------------------------------------------------------

GRID_COLUMNS = ("axis1", "axis2", "p_final", "status")

_PLOT_SCRIPT = '''"""Contour plot of p_final from grid.csv (written by lksim).

Usage: python plot_grid.py [grid.csv] [out.png]
"""
import csv
import sys
from pathlib import Path

import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.colors import TwoSlopeNorm

AXIS1 = {axis1!r}
AXIS2 = {axis2!r}
OK = {ok!r}


def load(path):
    rows = []
    with open(path) as fh:
        lines = [line for line in fh if not line.startswith("#")]
    for row in csv.DictReader(lines):
        rows.append(row)
    a1 = np.array(sorted({{float(r["axis1"]) for r in rows}}))
    a2 = np.array(sorted({{float(r["axis2"]) for r in rows}}))
    z = np.full((a1.size, a2.size), np.nan)
    for r in rows:
        i = np.searchsorted(a1, float(r["axis1"]))
        j = np.searchsorted(a2, float(r["axis2"]))
        if r["status"] in OK:
            z[i, j] = float(r["p_final"])
    return a1, a2, np.ma.masked_invalid(z)


def main(argv):
    here = Path(__file__).resolve().parent
    src = Path(argv[1]) if len(argv) > 1 else here / "grid.csv"
    out = Path(argv[2]) if len(argv) > 2 else here / "grid.png"
    a1, a2, z = load(src)
    span = float(np.nanmax(np.abs(z.filled(np.nan)))) if z.count() else 1.0
    span = span or 1.0
    norm = TwoSlopeNorm(vmin=-span, vcenter=0.0, vmax=span)
    fig, ax = plt.subplots(figsize=(6, 5))
    # axis2 on x, axis1 on y; blue = Blue wins
    mesh = ax.pcolormesh(a2, a1, z, cmap="RdBu", norm=norm, shading="nearest")
    if z.count() and z.min() < 0 < z.max():
        ax.contour(a2, a1, z, levels=[0.0], colors="k", linewidths=1.2)
    fig.colorbar(mesh, ax=ax, label="p_final")
    ax.set_xlabel(AXIS2)
    ax.set_ylabel(AXIS1)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(out)


if __name__ == "__main__":
    main(sys.argv)
'''


def write_grid_csv(grid: SweepGrid, path) -> Path:
    path = Path(path)
    lines = [f"# {line}" for line in grid.header.splitlines() if line]
    lines.append(",".join(GRID_COLUMNS))
    for v1, v2, p, s in grid.rows():
        lines.append(f"{v1:.17g},{v2:.17g},{p:.17g},{s}")
    path.write_text("\n".join(lines) + "\n")
    return path


def emit_contour(grid: SweepGrid, out_dir) -> tuple[Path, Path]:
    """Write ``grid.csv`` and a standalone ``plot_grid.py`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = write_grid_csv(grid, out_dir / "grid.csv")
    script = out_dir / "plot_grid.py"
    header = "".join(f"# {line}\n" for line in grid.header.splitlines() if line)
    script.write_text(header + _PLOT_SCRIPT.format(axis1=grid.axis1.path, axis2=grid.axis2.path,
                                                   ok=OK_STATUSES))
    return csv_path, script

"""Single runs on any tier, with a uniform result record."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..global_model import run_global, write_global_csv
from ..integrate import IntegratorSettings
from ..network_model import run_networked, write_networked_csv
from ..reduced_model import run_reduced, write_reduced_csv
from .scenario import TIERS, Scenario, ScenarioFileError


@dataclass
class RunResult:
    tier: str
    p_final: float
    status: str
    t_end: float
    run: object

    @property
    def winner(self) -> str:
        if self.p_final > 0:
            return "Blue"
        if self.p_final < 0:
            return "Red"
        return "draw"


def run_tier(scn: Scenario, tier: str, t_final: float | None = None,
             settings: IntegratorSettings | None = None,
             stop_when_extinct: bool = False) -> RunResult:
    """Integrate ``scn`` on ``tier`` (defaults: the scenario's horizon and tolerances)."""
    if tier not in TIERS:
        raise ScenarioFileError(f"tier must be one of {TIERS}")
    t_final = scn.t_final if t_final is None else float(t_final)
    settings = scn.settings() if settings is None else settings
    if tier == "global":
        run = run_global(scn.global_scenario(), t_final, settings, stop_when_extinct)
    elif tier == "reduced":
        run = run_reduced(scn.global_scenario(), t_final, settings, stop_when_extinct)
    else:
        run = run_networked(scn.networked_scenario(), t_final, settings, stop_when_extinct)
    return RunResult(tier, run.p_final, run.status, run.trajectory.t_end, run)


def write_trajectory(result: RunResult, path, header: str = "") -> Path:
    path = Path(path)
    writer = {"global": write_global_csv, "reduced": write_reduced_csv,
              "networked": write_networked_csv}[result.tier]
    writer(result.run, path, header)
    return path

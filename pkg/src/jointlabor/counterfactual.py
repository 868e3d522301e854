"""Counterfactual experiments: flexible regular jobs, purchasable housework,
and sweeps over the norm penalty.  Every run reuses the baseline couples."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import ModelParams
from .population import CoupleDraws, PopulationConfig, draw_couples, solve_draws
from .solver import Mode
from .statistics import GapSet, gender_gaps, hours_table, occupation_matrix

SCENARIO_NAMES = ("baseline", "flexible_regular", "outsourcing")


@dataclass(frozen=True)
class Scenario:
    mode: str = "baseline"
    price: Optional[float] = None          # outsourcing only; default psi * h_bar**theta
    delta_override: Optional[float] = None

    def __post_init__(self):
        if self.mode not in SCENARIO_NAMES:
            raise ValueError(f"unknown scenario {self.mode!r}")
        if self.price is not None and not self.price > 0:
            raise ValueError("price must be positive")
        if self.delta_override is not None and self.delta_override < 0:
            raise ValueError("delta_override must be non-negative")

    def solver_mode(self, params: ModelParams) -> Mode:
        if self.mode == "outsourcing":
            if self.price is None:
                return Mode.default_outsourcing(params)
            return Mode.outsourcing(self.price)
        return Mode(self.mode)

    def params_for(self, params: ModelParams) -> ModelParams:
        if self.delta_override is None:
            return params
        return params.replace(delta=self.delta_override)

    @property
    def name(self) -> str:
        return self.mode


@dataclass
class ScenarioResult:
    scenario: Scenario
    occupation: np.ndarray
    gaps: GapSet
    hours: dict
    population: object = None


def run_scenario(params: ModelParams, scenario: Scenario, config: PopulationConfig | None = None,
                 couples: CoupleDraws | None = None, keep_population: bool = False) -> ScenarioResult:
    """Solve the population under ``scenario`` and tabulate it.

    Couples are drawn from the (unmodified) ``params`` so that every scenario
    and every delta shares the same households.
    """
    config = config or PopulationConfig()
    if couples is None:
        couples = draw_couples(params, config)
    p = scenario.params_for(params)
    pop = solve_draws(couples, p, scenario.solver_mode(params))
    return ScenarioResult(scenario, occupation_matrix(pop), gender_gaps(pop), hours_table(pop),
                          pop if keep_population else None)


def default_delta_grid(params: ModelParams, points: int = 11) -> np.ndarray:
    return np.linspace(0.0, 1.2 * params.delta, points)


def delta_sweep(params: ModelParams, scenarios, delta_grid,
                config: PopulationConfig | None = None) -> list:
    """Long-format rows ``(scenario, delta, gap, value)`` over the grid."""
    grid = np.asarray(delta_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("delta grid is empty")
    if np.any(grid < 0):
        raise ValueError("delta grid must be non-negative")
    config = config or PopulationConfig()
    couples = draw_couples(params, config)
    rows = []
    for sc in scenarios:
        for d in grid:
            run = Scenario(sc.mode, sc.price, float(d))
            gaps = run_scenario(params, run, config, couples).gaps
            for name, value in gaps.as_dict().items():
                rows.append((sc.mode, float(d), name, value))
    return rows

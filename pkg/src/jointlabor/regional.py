"""Regional prediction curve.

Prefectures differ only in the norm penalty.  For each delta the model gives
the share of wives outearning their husbands, f(delta), and the gender gaps
G(delta).  A prefecture-level OLS of the norm score on the outearning share
maps f to a predicted score, and a national level adjustment
g0 = g_data - G(delta_hat) is added to every predicted gap.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams
from .population import PopulationConfig, draw_couples, solve_draws
from .solver import Mode
from .statistics import GapSet, gender_gaps, wife_outearns_share

# national gaps in the data: participation, occupation, hours, wage
NATIONAL_DATA_GAPS = GapSet(0.16, 0.53, 0.49, 0.76)

CSV_FIELDS = ("prefecture", "score", "gap_participation", "gap_occupation", "gap_hours",
              "gap_wage", "share_wife_outearns")


@dataclass(frozen=True)
class PrefectureRecord:
    id: str
    score: float
    gaps: GapSet
    share_wife_outearns: float

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ValueError(f"prefecture {self.id}: score must be finite")
        if not 0.0 <= self.share_wife_outearns <= 1.0:
            raise ValueError(f"prefecture {self.id}: share must lie in [0, 1]")


@dataclass(frozen=True)
class PredictionCurve:
    deltas: np.ndarray
    share: np.ndarray       # f(delta)
    score_hat: np.ndarray
    gaps_hat: tuple         # GapSet per delta

    def gap_matrix(self) -> np.ndarray:
        return np.array([g.as_array() for g in self.gaps_hat])

    def at(self, delta: float):
        i = int(np.argmin(np.abs(self.deltas - delta)))
        return self.score_hat[i], self.gaps_hat[i]


def load_prefectures(path) -> list:
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in CSV_FIELDS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: missing column {missing[0]}")
        for row in reader:
            gaps = GapSet(float(row["gap_participation"]), float(row["gap_occupation"]),
                          float(row["gap_hours"]), float(row["gap_wage"]))
            records.append(PrefectureRecord(row["prefecture"], float(row["score"]), gaps,
                                            float(row["share_wife_outearns"])))
    return records


def level_adjustment(data_gaps: GapSet, model_gaps: GapSet) -> GapSet:
    """g0 = data minus model, componentwise."""
    g0 = data_gaps - model_gaps
    if any(v is None or not math.isfinite(v) for v in g0.as_dict().values()):
        raise ValueError("level adjustment needs finite gaps on both sides")
    return g0


def ols(x, y):
    """Intercept and slope of y on x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two observations")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx <= 1e-14 * max(1.0, float(x @ x)):
        raise ValueError("regressor has no variation")
    slope = float(xc @ (y - y.mean())) / sxx
    return float(y.mean() - slope * x.mean()), slope


def ols_bridge(records) -> tuple:
    """(alpha0, alpha1) from regressing score on the outearning share."""
    records = list(records)
    if len(records) < 2:
        raise ValueError("need at least two prefectures")
    return ols([r.share_wife_outearns for r in records], [r.score for r in records])


def prediction_curve(params: ModelParams, delta_grid, g0: GapSet, bridge,
                     config: PopulationConfig | None = None) -> PredictionCurve:
    grid = np.unique(np.asarray(delta_grid, dtype=float))
    if grid.size == 0 or np.any(grid < 0):
        raise ValueError("delta grid must be non-empty and non-negative")
    config = config or PopulationConfig()
    couples = draw_couples(params, config)
    a0, a1 = bridge
    share, score, gaps = [], [], []
    for d in grid:
        pop = solve_draws(couples, params.replace(delta=float(d)), Mode())
        f = wife_outearns_share(pop)
        share.append(f)
        score.append(a0 + a1 * f)
        gaps.append(gender_gaps(pop) + g0)
    return PredictionCurve(grid, np.array(share), np.array(score), tuple(gaps))


def national_model_gaps(params: ModelParams, config: PopulationConfig | None = None) -> GapSet:
    config = config or PopulationConfig()
    return gender_gaps(solve_draws(draw_couples(params, config), params, Mode()))


def default_delta_grid(params: ModelParams, points: int = 21) -> np.ndarray:
    grid = np.linspace(0.0, 2.0 * params.delta, points)
    # make sure the calibrated value itself is on the grid
    return np.unique(np.append(grid, params.delta))


def data_fit(records) -> dict:
    """OLS line of each gap on the score in the prefecture data."""
    scores = [r.score for r in records]
    return {name: ols(scores, [getattr(r.gaps, name) for r in records])
            for name in GapSet.names()}


def curve_vs_fit(curve: PredictionCurve, records) -> dict:
    """RMS distance between the model curve and the data fit over the common score range."""
    fit = data_fit(records)
    scores = np.array([r.score for r in records])
    lo = max(scores.min(), curve.score_hat.min())
    hi = min(scores.max(), curve.score_hat.max())
    keep = (curve.score_hat >= lo) & (curve.score_hat <= hi)
    out = {}
    G = curve.gap_matrix()
    for k, name in enumerate(GapSet.names()):
        if not keep.any():
            out[name] = None
            continue
        a, b = fit[name]
        resid = G[keep, k] - (a + b * curve.score_hat[keep])
        out[name] = float(np.sqrt(np.mean(resid ** 2)))
    return out

"""Population statistics: calibration moments, occupation matrix, hours
tables, gender gaps and the relative-earnings distribution.

Every statistic weights each (couple, occupation pair) cell by its logit
choice probability.  Sums go through ``math.fsum`` so results do not depend
on couple order.  A statistic whose conditioning set has zero weight is
``None`` (printed as a dash), never NaN.
"""
from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields
from typing import Optional

import numpy as np

from .model import HOURS_PER_UNIT
from .solver import D_BUY, D_F, D_M, E_F, E_M, H_F, H_M

UNDEFINED = None
UNDEFINED_TEXT = "-"

# pair index = 3 * j_m + j_f with R, NR, NW = 0, 1, 2
MALE_R = (0, 1, 2)
MALE_NR = (3, 4, 5)
MALE_WORK = (0, 1, 2, 3, 4, 5)
FEMALE_R = (0, 3, 6)
FEMALE_WORK = (0, 1, 3, 4, 6, 7)
DUAL = (0, 1, 3, 4)
WORKING_PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1))
PAIR_LABELS = ("R", "NR", "NW")


@dataclass(frozen=True)
class MomentSet:
    share_R_male: Optional[float]
    share_NR_male: Optional[float]
    logwage_gap_RNR_male: Optional[float]
    mean_hours_R_male: Optional[float]
    sd_logwage_R_male: Optional[float]
    corr_logearn_RR: Optional[float]
    mean_d_f_R: Optional[float]
    sd_d_f_R: Optional[float]
    share_wife_outearns: Optional[float]

    @classmethod
    def names(cls):
        return tuple(f.name for f in fields(cls))

    def as_dict(self):
        return {k: getattr(self, k) for k in self.names()}

    def as_array(self):
        return np.array([np.nan if v is None else v for v in astuple(self)])


@dataclass(frozen=True)
class GapSet:
    participation: Optional[float]
    occupation: Optional[float]
    hours: Optional[float]
    wage: Optional[float]

    @classmethod
    def names(cls):
        return tuple(f.name for f in fields(cls))

    def as_dict(self):
        return {k: getattr(self, k) for k in self.names()}

    def as_array(self):
        return np.array([np.nan if v is None else v for v in astuple(self)])

    def __add__(self, other: "GapSet") -> "GapSet":
        return GapSet(*(_combine(a, b, 1.0) for a, b in zip(astuple(self), astuple(other))))

    def __sub__(self, other: "GapSet") -> "GapSet":
        return GapSet(*(_combine(a, b, -1.0) for a, b in zip(astuple(self), astuple(other))))


def _combine(a, b, sign):
    if a is None or b is None:
        return None
    return a + sign * b


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray        # bin edges on [0, 1]
    mass: np.ndarray         # weight share per bin, excluding the atom
    atom_half: float         # weight share with e_f == e_m exactly
    above_half: float        # weight share with e_f > e_m


# ---------------------------------------------------------------------------
# weighted reductions


def _fsum(x) -> float:
    return math.fsum(np.asarray(x, dtype=np.float64).ravel().tolist())


def _cells(pop, pairs, k=None):
    """Weights and (optionally) a field over the given pair cells, flattened,
    dropping zero-weight cells so that their allocations never enter."""
    w = pop.prob[:, pairs].ravel()
    keep = w > 0
    if k is None:
        return w[keep]
    return w[keep], pop.alloc[:, pairs, k].ravel()[keep]


def weighted_mean(w, x):
    tw = _fsum(w)
    if tw <= 0:
        return UNDEFINED
    return _fsum(w * x) / tw


def weighted_sd(w, x):
    m = weighted_mean(w, x)
    if m is None:
        return UNDEFINED
    return math.sqrt(max(_fsum(w * (x - m) ** 2) / _fsum(w), 0.0))


def weighted_corr(w, x, y):
    mx = weighted_mean(w, x)
    my = weighted_mean(w, y)
    if mx is None:
        return UNDEFINED
    sxy = _fsum(w * (x - mx) * (y - my))
    sxx = _fsum(w * (x - mx) ** 2)
    syy = _fsum(w * (y - my) ** 2)
    if sxx <= 0 or syy <= 0:
        return UNDEFINED
    return max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))


def _share(pop, pairs):
    return _fsum(pop.prob[:, pairs]) / _fsum(pop.prob)


def _log_wage(pop, pairs, e, h):
    w, ee = _cells(pop, pairs, e)
    _, hh = _cells(pop, pairs, h)
    return w, np.log(ee / hh)


def _diff(a, b):
    return None if a is None or b is None else a - b


# ---------------------------------------------------------------------------
# statistics


def compute_moments(pop, params=None) -> MomentSet:
    """The nine calibration moments."""
    if len(pop) == 0:
        raise ValueError("empty population")
    share_R = _share(pop, MALE_R)
    share_NR = _share(pop, MALE_NR)
    wR, lwR = _log_wage(pop, MALE_R, E_M, H_M)
    wNR, lwNR = _log_wage(pop, MALE_NR, E_M, H_M)
    w, hR = _cells(pop, MALE_R, H_M)
    mean_h = weighted_mean(w, hR)
    w, em = _cells(pop, (0,), E_M)
    _, ef = _cells(pop, (0,), E_F)
    corr = weighted_corr(w, np.log(em), np.log(ef)) if w.size else UNDEFINED
    w, dfR = _cells(pop, FEMALE_R, D_F)
    outearn = wife_outearns_share(pop)
    return MomentSet(
        share_R_male=share_R,
        share_NR_male=share_NR,
        logwage_gap_RNR_male=_diff(weighted_mean(wR, lwR), weighted_mean(wNR, lwNR)),
        mean_hours_R_male=mean_h,
        sd_logwage_R_male=weighted_sd(wR, lwR),
        corr_logearn_RR=corr,
        mean_d_f_R=weighted_mean(w, dfR),
        sd_d_f_R=weighted_sd(w, dfR),
        share_wife_outearns=outearn,
    )


def wife_outearns_share(pop):
    w, em = _cells(pop, DUAL, E_M)
    _, ef = _cells(pop, DUAL, E_F)
    tw = _fsum(w)
    if tw <= 0:
        return UNDEFINED
    return _fsum(w[ef > em]) / tw


def occupation_matrix(pop) -> np.ndarray:
    """3x3 shares, husband rows by wife columns."""
    cols = [_fsum(pop.prob[:, k]) for k in range(9)]
    tot = math.fsum(cols)
    return np.array(cols).reshape(3, 3) / tot


def marginal_shares(pop):
    """(male, female) occupation shares in R, NR, NW order."""
    M = occupation_matrix(pop)
    return M.sum(axis=1), M.sum(axis=0)


def hours_table(pop, scale: float = HOURS_PER_UNIT) -> dict:
    """Conditional mean hours by working pair, in weekly hours.

    Keys are ``(j_m, j_f)`` label pairs; values are dicts with h_m, h_f, d_m,
    d_f and d_buy.
    """
    out = {}
    for jm, jf in WORKING_PAIRS:
        k = 3 * jm + jf
        row = {}
        for name, col in (("h_m", H_M), ("h_f", H_F), ("d_m", D_M), ("d_f", D_F),
                          ("d_buy", D_BUY)):
            w, x = _cells(pop, (k,), col)
            m = weighted_mean(w, x)
            row[name] = None if m is None else m * scale
        out[(PAIR_LABELS[jm], PAIR_LABELS[jf])] = row
    return out


def gender_gaps(pop, occupation_among_workers: bool = False) -> GapSet:
    """Male minus female participation, regular share, mean log hours and
    mean log hourly wage (the last two among workers)."""
    part = _share(pop, MALE_WORK) - _share(pop, FEMALE_WORK)
    if occupation_among_workers:
        occ = (_share(pop, MALE_R) / _share(pop, MALE_WORK)
               - _share(pop, FEMALE_R) / _share(pop, FEMALE_WORK))
    else:
        occ = _share(pop, MALE_R) - _share(pop, FEMALE_R)
    wm, hm = _cells(pop, MALE_WORK, H_M)
    wf, hf = _cells(pop, FEMALE_WORK, H_F)
    hours = _diff(weighted_mean(wm, np.log(hm)), weighted_mean(wf, np.log(hf)))
    wm, lwm = _log_wage(pop, MALE_WORK, E_M, H_M)
    wf, lwf = _log_wage(pop, FEMALE_WORK, E_F, H_F)
    wage = _diff(weighted_mean(wm, lwm), weighted_mean(wf, lwf))
    return GapSet(part, occ, hours, wage)


def relative_earnings_density(pop, bin_width: float = 0.05) -> Histogram:
    """Distribution of e_f / (e_m + e_f) over dual-earner weight.

    The atom at exactly one half is reported separately and excluded from
    the bins; ``above_half`` is the weight share strictly above it.
    """
    if not 0 < bin_width <= 1:
        raise ValueError("bin_width must lie in (0, 1]")
    nb = int(round(1.0 / bin_width))
    if abs(nb * bin_width - 1.0) > 1e-9:
        raise ValueError("bin_width must divide 1")
    edges = np.linspace(0.0, 1.0, nb + 1)
    w, em = _cells(pop, DUAL, E_M)
    _, ef = _cells(pop, DUAL, E_F)
    tw = _fsum(w)
    mass = np.zeros(nb)
    if tw <= 0:
        return Histogram(edges, mass, 0.0, 0.0)
    share = ef / (em + ef)
    atom = ef == em
    above = ef > em
    idx = np.minimum((share * nb).astype(np.int64), nb - 1)
    for b in range(nb):
        sel = (idx == b) & ~atom
        mass[b] = _fsum(w[sel]) / tw
    return Histogram(edges, mass, _fsum(w[atom]) / tw, _fsum(w[above]) / tw)


def fmt(v) -> str:
    """Six significant digits, dash for undefined."""
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return UNDEFINED_TEXT
    return f"{v:.6g}"

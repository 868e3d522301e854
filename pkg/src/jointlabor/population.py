"""Simulated population of couples.

Abilities are bivariate log-normal with mean zero, common dispersion sigma
and correlation rho; the home requirement is an independent Beta(alpha,
beta) draw.  Couples are stored column-wise and solved in parallel; the
draw sequence depends only on the seed, never on the thread count.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta as beta_dist

from .model import Couple, ModelParams
from .solver import N_FIELDS, UTIL, CoupleSolution, Mode, solve_population_nb

DEFAULT_SEED = 20240611
# Beta draws with alpha << 1 underflow to exactly zero; keep D inside (0, 1)
D_FLOOR = 1e-15


@dataclass(frozen=True)
class PopulationConfig:
    n_couples: int = 100_000
    seed: int = DEFAULT_SEED
    mode: Mode = field(default_factory=Mode)

    def __post_init__(self):
        if int(self.n_couples) < 1:
            raise ValueError(f"n_couples must be >= 1, got {self.n_couples}")
        if int(self.seed) < 0:
            raise ValueError("seed must be a non-negative integer")

    def with_mode(self, mode: Mode) -> "PopulationConfig":
        return PopulationConfig(self.n_couples, self.seed, mode)


@dataclass(frozen=True)
class CoupleDraws:
    a_m: np.ndarray
    a_f: np.ndarray
    D: np.ndarray

    def __len__(self):
        return self.a_m.shape[0]

    def __getitem__(self, i) -> Couple:
        return Couple(float(self.a_m[i]), float(self.a_f[i]), float(self.D[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.a_m, self.a_f, self.D):
            h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return h.hexdigest()


def base_draws(n: int, seed: int):
    """Parameter-free random numbers: two standard normals and one uniform per couple.

    Couples for any parameter vector are deterministic transforms of these,
    which is what makes common random numbers work across calibration steps.
    """
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    z = rng.standard_normal((n, 2))
    u = rng.random(n)
    return z, u


def couples_from_base(params: ModelParams, z: np.ndarray, u: np.ndarray) -> CoupleDraws:
    s, r = params.sigma, params.rho
    # Cholesky factor [[s, 0], [r s, s sqrt(1 - r^2)]]
    log_am = s * z[:, 0]
    log_af = r * s * z[:, 0] + s * math.sqrt(1.0 - r * r) * z[:, 1]
    D = beta_dist.ppf(u, params.alpha, params.beta)
    D = np.clip(D, D_FLOOR, 1.0 - D_FLOOR)
    return CoupleDraws(np.exp(log_am), np.exp(log_af), D)


def draw_couples(params: ModelParams, config: PopulationConfig) -> CoupleDraws:
    """Draw abilities and home requirements.  Deterministic given the seed.

    D is obtained by inverting the Beta CDF at a uniform draw, so it moves
    smoothly with (alpha, beta) under a fixed seed.
    """
    z, u = base_draws(int(config.n_couples), config.seed)
    return couples_from_base(params, z, u)


@dataclass
class SimulatedPopulation:
    """Couples plus their solved allocations.

    ``alloc`` has shape (n, 9, N_FIELDS) with pairs in (R, NR, NW)^2 order
    and ``prob`` has shape (n, 9).
    """
    couples: CoupleDraws
    alloc: np.ndarray
    prob: np.ndarray
    params: ModelParams
    mode: Mode

    def __len__(self):
        return len(self.couples)

    @property
    def solutions(self):
        return [self.solution(i) for i in range(len(self))]

    def solution(self, i: int) -> CoupleSolution:
        return CoupleSolution.from_arrays(self.alloc[i], self.prob[i])

    def field(self, k: int) -> np.ndarray:
        """(n, 9) array of one allocation field."""
        return self.alloc[:, :, k]

    @property
    def utilities(self):
        return self.alloc[:, :, UTIL]

    def take(self, idx) -> "SimulatedPopulation":
        """Rows ``idx`` (repeats allowed), e.g. for a bootstrap resample."""
        c = self.couples
        return SimulatedPopulation(CoupleDraws(c.a_m[idx], c.a_f[idx], c.D[idx]),
                                   self.alloc[idx], self.prob[idx], self.params, self.mode)

    def digest(self) -> str:
        h = hashlib.sha256(self.couples.digest().encode())
        h.update(np.ascontiguousarray(self.alloc, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.prob, dtype="<f8").tobytes())
        return h.hexdigest()

    def dump(self, path) -> None:
        """Debug dump: a_m, a_f, D, nine utilities and nine probabilities per row."""
        cols = ["a_m", "a_f", "D"] + [f"u{k}" for k in range(9)] + [f"p{k}" for k in range(9)]
        data = np.column_stack([self.couples.a_m, self.couples.a_f, self.couples.D,
                                self.utilities, self.prob])
        np.savetxt(path, data, delimiter=",", header=",".join(cols), comments="", fmt="%.6g")


def solve_draws(couples: CoupleDraws, params: ModelParams, mode: Mode) -> SimulatedPopulation:
    n = len(couples)
    alloc = np.empty((n, 9, N_FIELDS))
    prob = np.empty((n, 9))
    solve_population_nb(couples.a_m, couples.a_f, couples.D, mode.code, mode.effective_price,
                        params.pack(), alloc, prob)
    return SimulatedPopulation(couples, alloc, prob, params, mode)


def simulate(params: ModelParams, config: PopulationConfig | None = None,
             couples: CoupleDraws | None = None) -> SimulatedPopulation:
    """Draw (unless ``couples`` is given) and solve a population."""
    config = config or PopulationConfig()
    if couples is None:
        couples = draw_couples(params, config)
    return solve_draws(couples, params, config.mode)


def sample_occupations(pop: SimulatedPopulation, n_draws: int, seed: int = 0) -> np.ndarray:
    """Explicit occupation-pair draws from the choice probabilities.

    Returns an (n_draws,) array of pair indices with couples sampled uniformly.
    Only used to check that probability weighting and discrete draws agree.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = rng.integers(0, len(pop), size=n_draws)
    cum = np.cumsum(pop.prob[idx], axis=1)
    u = rng.random(n_draws)[:, None]
    return np.minimum((u > cum).sum(axis=1), 8)


__all__ = ["PopulationConfig", "CoupleDraws", "SimulatedPopulation", "base_draws",
           "couples_from_base", "draw_couples", "simulate", "solve_draws", "sample_occupations"]

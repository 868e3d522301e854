"""Simulated method of moments.

The loss is the sum of squared relative deviations between data and model
moments, with no weighting matrix.  Minimisation is a Nelder-Mead simplex
in an unconstrained space (log for positive parameters, logit for psi,
Fisher z for rho) with several starts.  Couples are rebuilt from one fixed
set of base draws at every evaluation.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.optimize import minimize

from .model import ESTIMATED, ModelParams
from .population import base_draws, couples_from_base, solve_draws
from .solver import Mode
from .statistics import MomentSet, compute_moments

log = logging.getLogger(__name__)

UNDEFINED_PENALTY = 1e6

# how each estimated parameter maps to the real line
TRANSFORMS = dict(theta="log", psi="logit", eta="log", phi="log", sigma="log",
                  rho="fisher", alpha="log", beta="log", delta="log")

# box for synthetic recovery draws, roughly +-25% around the calibrated values
PARAMETER_BOX = dict(theta=(2.0, 3.2), psi=(0.45, 0.75), eta=(0.12, 0.22), phi=(9.0, 15.0),
                     sigma=(0.5, 0.8), rho=(0.4, 0.65), alpha=(0.06, 0.10),
                     beta=(0.32, 0.54), delta=(0.6, 1.0))


def draw_parameters(rng: np.random.Generator, base: ModelParams, names=ESTIMATED) -> ModelParams:
    """Uniform draw from PARAMETER_BOX for the named parameters."""
    return base.replace(**{k: float(rng.uniform(*PARAMETER_BOX[k])) for k in names})


@dataclass(frozen=True)
class CalibrationTargets:
    share_R_male: float = 0.90
    share_NR_male: float = 0.09
    logwage_gap_RNR_male: float = 0.64
    mean_hours_R_male: float = 0.40
    sd_logwage_R_male: float = 0.62
    corr_logearn_RR: float = 0.21
    mean_d_f_R: float = 0.22
    sd_d_f_R: float = 0.14
    share_wife_outearns: float = 0.07

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise ValueError(f"target {f.name} must be finite")
            if v == 0:
                raise ValueError(f"target {f.name} is zero; relative deviations are undefined")

    @classmethod
    def from_mapping(cls, mapping) -> "CalibrationTargets":
        known = {f.name for f in fields(cls)}
        for k in mapping:
            if k not in known:
                raise KeyError(f"unknown target key: {k}")
        return cls(**{k: float(v) for k, v in mapping.items()})

    @classmethod
    def from_file(cls, path) -> "CalibrationTargets":
        """Read ``key = value`` lines; blank lines and ``#`` comments ignored."""
        mapping = {}
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key = value")
                k, v = (t.strip() for t in line.split("=", 1))
                mapping[k] = v
        return cls.from_mapping(mapping)

    @classmethod
    def from_moments(cls, m: MomentSet) -> "CalibrationTargets":
        return cls(**m.as_dict())

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class CalibrationConfig:
    n_couples: int = 100_000
    seed: int = 20240611
    starts: int = 8
    max_evals: int = 5000
    jitter: float = 0.15          # sd of start perturbations in transformed space
    jitter_seed: int = 7
    xatol: float = 1e-6
    fatol: float = 1e-12
    initial_step: float = 0.1     # simplex edge in transformed space
    max_seconds: float | None = None   # wall-clock budget over all starts
    free: tuple = ESTIMATED       # parameters being estimated; others stay at init
    moments: tuple = MomentSet.names()   # moments entering the loss

    def __post_init__(self):
        bad = [k for k in self.free if k not in ESTIMATED]
        if bad:
            raise KeyError(f"unknown parameter name: {bad[0]}")
        bad = [k for k in self.moments if k not in MomentSet.names()]
        if bad:
            raise KeyError(f"unknown target key: {bad[0]}")
        if not self.free or not self.moments:
            raise ValueError("free parameters and moments must be non-empty")
        if self.starts < 1 or self.max_evals < 1:
            raise ValueError("starts and max_evals must be positive")


@dataclass
class CalibrationResult:
    params_hat: ModelParams
    objective: float
    trace: list = field(default_factory=list)   # (start, eval, *params, loss)
    converged: bool = False

    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate(np.array([row[-1] for row in self.trace]))


# ---------------------------------------------------------------------------
# transforms


def transform(params: ModelParams, names=ESTIMATED) -> np.ndarray:
    out = []
    for k in names:
        v = getattr(params, k)
        kind = TRANSFORMS[k]
        if kind == "log":
            out.append(math.log(v))
        elif kind == "logit":
            out.append(math.log(v / (1.0 - v)))
        else:
            out.append(math.atanh(v))
    return np.array(out)


def untransform(x, base: ModelParams, names=ESTIMATED) -> ModelParams:
    vals = {}
    for k, t in zip(names, x):
        kind = TRANSFORMS[k]
        if kind == "log":
            vals[k] = math.exp(t)
        elif kind == "logit":
            vals[k] = 1.0 / (1.0 + math.exp(-t))
        else:
            vals[k] = math.tanh(t)
    return base.replace(**vals)


# ---------------------------------------------------------------------------
# objective


class Simulator:
    """Holds the fixed base draws so repeated evaluations share them."""

    def __init__(self, n_couples: int, seed: int, mode: Mode | None = None):
        self.z, self.u = base_draws(int(n_couples), seed)
        self.mode = mode or Mode()

    def moments(self, params: ModelParams) -> MomentSet:
        couples = couples_from_base(params, self.z, self.u)
        return compute_moments(solve_draws(couples, params, self.mode), params)


def loss(moments: MomentSet, targets: CalibrationTargets, names=None) -> float:
    total = []
    data = targets.as_dict()
    for k in sorted(names or data):
        d = data[k]
        m = getattr(moments, k)
        if m is None:
            return UNDEFINED_PENALTY
        total.append(((d - m) / d) ** 2)
    return math.fsum(total)


def smm_objective(params: ModelParams, targets: CalibrationTargets,
                  config: CalibrationConfig | None = None, simulator: Simulator | None = None) -> float:
    config = config or CalibrationConfig()
    sim = simulator or Simulator(config.n_couples, config.seed)
    return loss(sim.moments(params), targets, config.moments)


class _OutOfTime(Exception):
    pass


def calibrate(targets: CalibrationTargets, init: ModelParams,
              config: CalibrationConfig | None = None, simulator: Simulator | None = None,
              callback=None) -> CalibrationResult:
    """Multi-start Nelder-Mead on the SMM loss; returns the best point found.

    The first start is ``init``; each later start jitters the best point found
    so far, which restarts a simplex that has collapsed short of the optimum.
    """
    config = config or CalibrationConfig()
    sim = simulator or Simulator(config.n_couples, config.seed)
    names = tuple(config.free)
    x0 = transform(init, names)
    rng = np.random.Generator(np.random.PCG64(config.jitter_seed))
    trace = []
    best = (math.inf, init, x0)
    converged = False
    deadline = None if config.max_seconds is None else time.monotonic() + config.max_seconds

    for s in range(config.starts):
        if s == 0:
            xs = x0
        else:
            xs = best[2] + config.jitter * rng.standard_normal(x0.size)
        count = [0]

        def f(x):
            nonlocal best
            if deadline is not None and time.monotonic() > deadline:
                raise _OutOfTime
            try:
                p = untransform(x, init, names)
            except (ValueError, OverflowError):
                return UNDEFINED_PENALTY
            val = loss(sim.moments(p), targets, config.moments)
            count[0] += 1
            trace.append((s, count[0], *p.estimated_vector(), val))
            if val < best[0]:
                best = (val, p, np.array(x, dtype=float))
            if callback is not None:
                callback(s, count[0], p, val)
            return val

        simplex = np.vstack([xs] + [xs + config.initial_step * e for e in np.eye(xs.size)])
        try:
            res = minimize(f, xs, method="Nelder-Mead",
                           options=dict(maxfev=config.max_evals, xatol=config.xatol,
                                        fatol=config.fatol, initial_simplex=simplex,
                                        adaptive=xs.size > 4))
        except _OutOfTime:
            log.info("start %d: time budget exhausted after %d evaluations", s, count[0])
            break
        converged = converged or bool(res.success)
        log.info("start %d: loss %.3g after %d evaluations", s, res.fun, count[0])
    return CalibrationResult(best[1], best[0], trace, converged)

"""Model primitives: parameters, occupations, couples, earnings, utility and
the domestic production constraint.

Everything here is pure.  The ``*_nb`` kernels are the numba versions used by
the household solver; the plain functions are the checked public surface.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from enum import IntEnum

import numpy as np
from numba import njit

# Weekly hours represented by one unit of time.  Reports multiply by this.
HOURS_PER_UNIT = 100.0

NEG_INF = -np.inf

CALIBRATED = dict(theta=2.62, psi=0.59, eta=0.17, phi=12.0, sigma=0.64,
                  rho=0.53, alpha=0.08, beta=0.43, delta=0.79)

# names of the nine calibrated parameters, in canonical order
ESTIMATED = ("theta", "psi", "eta", "phi", "sigma", "rho", "alpha", "beta", "delta")


class Occupation(IntEnum):
    R = 0    # regular
    NR = 1   # non-regular
    NW = 2   # not working


OCCUPATIONS = (Occupation.R, Occupation.NR, Occupation.NW)
PAIRS = tuple((jm, jf) for jm in OCCUPATIONS for jf in OCCUPATIONS)

# solver modes
BASELINE, FLEXIBLE, OUTSOURCING = 0, 1, 2
MODE_NAMES = {"baseline": BASELINE, "flexible_regular": FLEXIBLE, "outsourcing": OUTSOURCING}


@dataclass(frozen=True)
class ModelParams:
    theta: float = CALIBRATED["theta"]
    psi: float = CALIBRATED["psi"]
    eta: float = CALIBRATED["eta"]
    phi: float = CALIBRATED["phi"]
    sigma: float = CALIBRATED["sigma"]
    rho: float = CALIBRATED["rho"]
    alpha: float = CALIBRATED["alpha"]
    beta: float = CALIBRATED["beta"]
    delta: float = CALIBRATED["delta"]
    gamma: float = 3.0
    xi: float = 2.0 / 3.0
    h_bar: float = 0.40
    h_min_R: float = 0.20
    h_min_NR: float = 0.10

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float, np.floating, np.integer)) or not math.isfinite(v):
                raise ValueError(f"{f.name} must be a finite number, got {v!r}")
            object.__setattr__(self, f.name, float(v))
        for name in ("theta", "eta", "phi", "sigma", "alpha", "beta", "gamma"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 < self.psi < 1:
            raise ValueError(f"psi must lie in (0, 1), got {self.psi}")
        if not -1 < self.rho < 1:
            raise ValueError(f"rho must lie in (-1, 1), got {self.rho}")
        if self.delta < 0:
            raise ValueError(f"delta must be non-negative, got {self.delta}")
        if not 0 < self.xi <= 1:
            raise ValueError(f"xi must lie in (0, 1], got {self.xi}")
        if not 0 < self.h_min_NR < self.h_min_R < self.h_bar < 1:
            raise ValueError("need 0 < h_min_NR < h_min_R < h_bar < 1")

    @classmethod
    def calibrated(cls, **overrides) -> "ModelParams":
        return cls(**overrides)

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)

    def estimated_vector(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in ESTIMATED])

    def with_estimated(self, vec) -> "ModelParams":
        return replace(self, **{k: float(v) for k, v in zip(ESTIMATED, vec)})

    def pack(self) -> np.ndarray:
        """Flat float64 array in the layout the numba kernels expect."""
        return np.array([self.theta, self.psi, self.eta, self.phi, self.sigma, self.rho,
                         self.alpha, self.beta, self.delta, self.gamma, self.xi,
                         self.h_bar, self.h_min_R, self.h_min_NR], dtype=np.float64)


# indices into ModelParams.pack()
THETA, PSI, ETA, PHI, SIGMA, RHO, ALPHA, BETA, DELTA, GAMMA, XI, HBAR, HMIN_R, HMIN_NR = range(14)


@dataclass(frozen=True)
class Couple:
    a_m: float
    a_f: float
    D: float

    def __post_init__(self):
        if not (self.a_m > 0 and self.a_f > 0):
            raise ValueError(f"abilities must be positive, got ({self.a_m}, {self.a_f})")
        if not 0 < self.D < 1:
            raise ValueError(f"home requirement must lie in (0, 1), got {self.D}")


@njit(cache=True)
def earnings_nb(h, a, j, flexible, par):
    if j == 2:
        return 0.0
    hbar = par[HBAR]
    slope = a * hbar ** par[THETA]
    if j == 1:
        if h < par[HMIN_NR]:
            return 0.0
        return par[PSI] * slope * h
    if h < par[HMIN_R]:
        return 0.0
    if flexible or h > hbar:
        return slope * h
    return a * h ** (1.0 + par[THETA])


@njit(cache=True)
def disutility_nb(total, par):
    g = par[GAMMA]
    return par[PHI] * total ** (1.0 + g) / (1.0 + g)


def earnings(h: float, a: float, j: Occupation, params: ModelParams,
             flexible_regular: bool = False) -> float:
    """Weekly earnings of one spouse working ``h`` time-units in occupation ``j``.

    Regular jobs pay ``a*h**(1+theta)`` up to the standard-hours kink and
    ``a*h_bar**theta*h`` above it (linear everywhere when
    ``flexible_regular``); non-regular jobs pay the linear schedule scaled by
    ``psi``.  Hours below an occupation's minimum earn nothing.
    """
    if not 0.0 <= h <= 1.0:
        raise ValueError(f"hours must lie in [0, 1], got {h}")
    if not a > 0:
        raise ValueError(f"ability must be positive, got {a}")
    return float(earnings_nb(float(h), float(a), int(Occupation(j)), bool(flexible_regular),
                             params.pack()))


def individual_utility(c: float, total_hours: float, params: ModelParams) -> float:
    """log c minus the labor disutility of market plus domestic hours; -inf if c <= 0."""
    if total_hours < 0:
        raise ValueError(f"total hours must be non-negative, got {total_hours}")
    if c <= 0:
        return NEG_INF
    g = params.gamma
    return math.log(c) - params.phi * total_hours ** (1 + g) / (1 + g)


def domestic_output(d_m: float, d_f: float, params: ModelParams, d_buy: float = 0.0) -> float:
    xi = params.xi
    return (d_m ** xi + d_f ** xi + d_buy ** xi) ** (1.0 / xi)


def domestic_partner_hours(D: float, d_own: float, params: ModelParams) -> float:
    """Hours the partner must supply so the couple meets requirement ``D``."""
    if d_own < 0 or d_own > D:
        raise ValueError(f"own domestic hours {d_own} outside [0, D={D}]")
    xi = params.xi
    rest = D ** xi - d_own ** xi
    return max(rest, 0.0) ** (1.0 / xi)

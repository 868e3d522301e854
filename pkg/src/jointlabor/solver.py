"""Household allocation and occupational choice.

For a fixed occupation pair the couple picks market hours, domestic hours
and (with outsourcing) purchased housework.  Consumption is split equally,
which is exact under log utility with a pooled budget, and the partner's
domestic hours follow from the CES requirement, so the free variables are
``(h_m, h_f[, v])`` with ``v = (d_buy / D)**xi`` the purchased share of the
requirement.  For given hours the domestic split is a one-dimensional convex
problem solved by safeguarded Newton in ``x = log(d_m / d_f)``.

The market-hours search is a small start grid followed by projected Newton
ascent on the envelope gradient, run separately on each piece of the
earnings schedules so the kink at ``h_bar`` is always a bracket edge.  The breadwinner penalty is
handled as ``max(V1, V2 - delta)`` where V2 is the unrestricted optimum and
V1 the optimum subject to ``e_f <= e_m``; V1 also searches the equality
line ``e_f = e_m`` explicitly, which is where bunching happens.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .model import (
    BASELINE, FLEXIBLE, OUTSOURCING, GAMMA, HBAR, HMIN_NR, HMIN_R, PHI, PSI, THETA, XI,
    DELTA, ETA, MODE_NAMES, PAIRS, Couple, ModelParams, Occupation, disutility_nb, earnings_nb,
)

# columns of an allocation record
H_M, H_F, D_M, D_F, D_BUY, E_M, E_F, CONS, UTIL, BINDING = range(10)
N_FIELDS = 10
FIELD_NAMES = ("h_m", "h_f", "d_m", "d_f", "d_buy", "e_m", "e_f", "c", "u", "norm_binding")

V_MAX = 1.0 - 1e-9


@dataclass(frozen=True)
class Mode:
    """Solver mode: ``baseline``, ``flexible_regular`` or ``outsourcing`` at ``price``."""
    kind: str = "baseline"
    price: float = 0.0

    def __post_init__(self):
        if self.kind not in MODE_NAMES:
            raise ValueError(f"unknown mode {self.kind!r}")
        if self.kind == "outsourcing" and not self.price > 0:
            raise ValueError("outsourcing needs a positive price")

    @property
    def code(self) -> int:
        return MODE_NAMES[self.kind]

    @property
    def effective_price(self) -> float:
        return self.price if self.kind == "outsourcing" else 0.0

    @classmethod
    def outsourcing(cls, price: float) -> "Mode":
        return cls("outsourcing", price)

    @classmethod
    def default_outsourcing(cls, params: ModelParams) -> "Mode":
        return cls("outsourcing", params.psi * params.h_bar ** params.theta)


@dataclass(frozen=True)
class Allocation:
    h_m: float
    h_f: float
    d_m: float
    d_f: float
    d_buy: float
    e_m: float
    e_f: float
    c: float
    u: float
    norm_binding: bool

    @classmethod
    def from_row(cls, row) -> "Allocation":
        vals = [float(v) for v in row]
        vals[BINDING] = bool(row[BINDING])
        return cls(*vals)


@dataclass(frozen=True)
class CoupleSolution:
    alloc: tuple      # 3x3 nested tuples of Allocation
    u: np.ndarray     # (3, 3)
    prob: np.ndarray  # (3, 3)

    @classmethod
    def from_arrays(cls, rows: np.ndarray, prob: np.ndarray) -> "CoupleSolution":
        rows = rows.reshape(3, 3, N_FIELDS)
        alloc = tuple(tuple(Allocation.from_row(rows[i, j]) for j in range(3)) for i in range(3))
        return cls(alloc, rows[:, :, UTIL].copy(), prob.reshape(3, 3).copy())


# ---------------------------------------------------------------------------
# domestic split


@njit(cache=True)
def _softplus(z):
    return max(z, 0.0) + math.log1p(math.exp(-abs(z)))


@njit(cache=True)
def _split(x, Deff, xi):
    d_m = Deff * math.exp(-_softplus(-xi * x) / xi)
    d_f = Deff * math.exp(-_softplus(xi * x) / xi)
    return d_m, d_f


@njit(cache=True)
def _cap_bound(Deff, cap, xi):
    # |x| at which one spouse's domestic hours reach their time cap
    return math.log(math.expm1(xi * math.log(Deff / cap))) / xi


@njit(cache=True)
def domestic_split_nb(h_m, h_f, Deff, xi, gamma, x0):
    """Cost-minimising (d_m, d_f) on the CES isoquant given market hours.

    Returns ``(d_m, d_f, x, ok)``; ``ok`` is False when the time endowment
    cannot cover the requirement.
    """
    if Deff <= 0.0:
        return 0.0, 0.0, 0.0, True
    cap_m = 1.0 - h_m
    cap_f = 1.0 - h_f
    if cap_m <= 0.0 and cap_f <= 0.0:
        return 0.0, 0.0, 0.0, False
    if cap_m <= 0.0:
        if Deff <= cap_f:
            return 0.0, Deff, -math.inf, True
        return 0.0, 0.0, 0.0, False
    if cap_f <= 0.0:
        if Deff <= cap_m:
            return Deff, 0.0, math.inf, True
        return 0.0, 0.0, 0.0, False
    if (cap_m ** xi + cap_f ** xi) ** (1.0 / xi) < Deff:
        return 0.0, 0.0, 0.0, False
    lo = -1000.0
    hi = 1000.0
    if cap_m < Deff:
        hi = min(hi, -_cap_bound(Deff, cap_m, xi))
    if cap_f < Deff:
        lo = max(lo, _cap_bound(Deff, cap_f, xi))
    if lo >= hi:
        x = 0.5 * (lo + hi)
        d_m, d_f = _split(x, Deff, xi)
        return d_m, d_f, x, True

    x = x0
    if not (x > lo and x < hi):
        # closed-form start that ignores the market hours' response to d
        d_m, d_f = _split(0.0, Deff, xi)
        if xi < 1.0:
            x = -gamma * math.log((h_m + d_m) / (h_f + d_f)) / (1.0 - xi)
        else:
            x = 0.0
        x = min(max(x, lo + 1e-12), hi - 1e-12)
    a, b = lo, hi
    for _ in range(200):
        d_m, d_f = _split(x, Deff, xi)
        t_m = h_m + d_m
        t_f = h_f + d_f
        F = gamma * (math.log(t_m) - math.log(t_f)) + (1.0 - xi) * x
        if F > 0.0:
            b = x
        else:
            a = x
        if abs(F) < 1e-14:
            break
        s_m = 1.0 / (1.0 + math.exp(min(xi * x, 700.0)))    # sigma(-xi x)
        s_f = 1.0 / (1.0 + math.exp(min(-xi * x, 700.0)))   # sigma(xi x)
        dF = gamma * (d_m * s_m / t_m + d_f * s_f / t_f) + (1.0 - xi)
        xn = x - F / dF
        if not (xn > a and xn < b):
            xn = 0.5 * (a + b)
        if abs(xn - x) <= 1e-13 * (1.0 + abs(x)):
            x = xn
            break
        x = xn
    d_m, d_f = _split(x, Deff, xi)
    return d_m, d_f, x, True


# ---------------------------------------------------------------------------
# objective

# ctx layout
(C_AM, C_AF, C_D, C_JM, C_JF, C_FLEX, C_PRICE, C_REGION, C_HM, C_HF, C_V, C_X,
 C_FLO, C_FHI, C_MCONV, C_FCONV) = range(16)
CTX_LEN = 16
# variable kinds
K_HM, K_HF, K_V = 0, 1, 2


@njit(cache=True)
def evaluate_nb(h_m, h_f, v, a_m, a_f, D, jm, jf, flexible, price, par, x0):
    """Joint utility net of any norm penalty, plus the implied allocation.

    Returns (W, e_m, e_f, d_m, d_f, d_buy, x).
    """
    xi = par[XI]
    e_m = earnings_nb(h_m, a_m, jm, flexible, par)
    e_f = earnings_nb(h_f, a_f, jf, flexible, par)
    d_buy = 0.0
    Deff = D
    if v > 0.0:
        d_buy = D * v ** (1.0 / xi)
        Deff = D * (1.0 - v) ** (1.0 / xi)
    spend = e_m + e_f - price * d_buy
    if spend <= 0.0:
        return -math.inf, e_m, e_f, 0.0, 0.0, d_buy, x0
    d_m, d_f, x, ok = domestic_split_nb(h_m, h_f, Deff, xi, par[GAMMA], x0)
    if not ok:
        return -math.inf, e_m, e_f, 0.0, 0.0, d_buy, x0
    W = 2.0 * math.log(0.5 * spend) - disutility_nb(h_m + d_m, par) - disutility_nb(h_f + d_f, par)
    return W, e_m, e_f, d_m, d_f, d_buy, x


@njit(cache=True)
def _slope(h, a, j, convex, par):
    # derivative of earnings inside one piece of the schedule
    if j == 2:
        return 0.0
    if convex:
        return a * (1.0 + par[THETA]) * h ** par[THETA]
    s = a * par[HBAR] ** par[THETA]
    if j == 1:
        s *= par[PSI]
    return s


@njit(cache=True)
def _inverse_earnings(e, a, j, convex, par):
    # hours at which one piece of the schedule pays e
    if convex:
        return (e / a) ** (1.0 / (1.0 + par[THETA]))
    s = a * par[HBAR] ** par[THETA]
    if j == 1:
        s *= par[PSI]
    return e / s


@njit(cache=True)
def _unpack(z, kinds, ctx, par):
    h_m = ctx[C_HM]
    h_f = ctx[C_HF]
    v = ctx[C_V]
    for k in range(z.shape[0]):
        if kinds[k] == K_HM:
            h_m = z[k]
        elif kinds[k] == K_HF:
            h_f = z[k]
        else:
            v = z[k]
    if ctx[C_REGION] == 2.0:
        # on the equality line the wife's hours follow from the husband's earnings
        e_m = earnings_nb(h_m, ctx[C_AM], int(ctx[C_JM]), ctx[C_FLEX] > 0, par)
        h_f = _inverse_earnings(e_m, ctx[C_AF], int(ctx[C_JF]), ctx[C_FCONV] > 0, par)
        h_f = min(max(h_f, ctx[C_FLO]), ctx[C_FHI])
    return h_m, h_f, v


@njit(cache=True)
def _value_grad(z, kinds, ctx, par, grad):
    """Objective and its envelope gradient at z; fills ``grad`` in place."""
    h_m, h_f, v = _unpack(z, kinds, ctx, par)
    jm = int(ctx[C_JM])
    jf = int(ctx[C_JF])
    a_m = ctx[C_AM]
    a_f = ctx[C_AF]
    D = ctx[C_D]
    price = ctx[C_PRICE]
    W, e_m, e_f, d_m, d_f, d_buy, x = evaluate_nb(
        h_m, h_f, v, a_m, a_f, D, jm, jf, ctx[C_FLEX] > 0, price, par, ctx[C_X])
    if W == -math.inf:
        for k in range(z.shape[0]):
            grad[k] = 0.0
        return W
    ctx[C_X] = x
    xi = par[XI]
    g = par[GAMMA]
    phi = par[PHI]
    spend = e_m + e_f - price * d_buy
    t_m = h_m + d_m
    t_f = h_f + d_f
    em1 = _slope(h_m, a_m, jm, ctx[C_MCONV] > 0, par)
    ef1 = _slope(h_f, a_f, jf, ctx[C_FCONV] > 0, par)
    g_m = 2.0 * em1 / spend - phi * t_m ** g
    g_f = 2.0 * ef1 / spend - phi * t_f ** g
    for k in range(z.shape[0]):
        if kinds[k] == K_HM:
            if ctx[C_REGION] == 2.0:
                grad[k] = g_m + g_f * em1 / ef1
            else:
                grad[k] = g_m
        elif kinds[k] == K_HF:
            grad[k] = g_f
        else:
            # marginal value of the purchased share through the CES requirement
            if d_m >= d_f:
                mc = phi * t_m ** g * d_m ** (1.0 - xi)
            else:
                mc = phi * t_f ** g * d_f ** (1.0 - xi)
            grad[k] = (mc * D ** xi - 2.0 * price * D * v ** (1.0 / xi - 1.0) / spend) / xi
    return W


@njit(cache=True)
def _solve_spd(A, b, n):
    # Cholesky solve of a small SPD system, shifting the diagonal until it factors
    L = np.zeros((n, n))
    shift = 0.0
    scale = 0.0
    for i in range(n):
        scale = max(scale, abs(A[i, i]))
    scale = max(scale, 1e-12)
    for _ in range(60):
        ok = True
        for i in range(n):
            for j in range(i + 1):
                s = A[i, j] + (shift if i == j else 0.0)
                for k in range(j):
                    s -= L[i, k] * L[j, k]
                if i == j:
                    if s <= 1e-14 * scale:
                        ok = False
                        break
                    L[i, i] = math.sqrt(s)
                else:
                    L[i, j] = s / L[j, j]
            if not ok:
                break
        if ok:
            break
        shift = max(2.0 * shift, 1e-6 * scale)
    y = np.empty(n)
    for i in range(n):
        s = b[i]
        for k in range(i):
            s -= L[i, k] * y[k]
        y[i] = s / L[i, i]
    out = np.empty(n)
    for i in range(n - 1, -1, -1):
        s = y[i]
        for k in range(i + 1, n):
            s -= L[k, i] * out[k]
        out[i] = s / L[i, i]
    return out


@njit(cache=True)
def _ascent(z0, kinds, lo, hi, ctx, par):
    """Projected Newton ascent inside the box [lo, hi]; returns (z, value)."""
    n = z0.shape[0]
    z = z0.copy()
    g = np.empty(n)
    gt = np.empty(n)
    gn = np.empty(n)
    zt = np.empty(n)
    zn = np.empty(n)
    H = np.empty((n, n))
    free = np.empty(n, dtype=np.int64)
    ctx[C_X] = math.nan
    f = _value_grad(z, kinds, ctx, par, g)
    if f == -math.inf:
        return z, f
    for _ in range(100):
        nf = 0
        pg = 0.0
        for k in range(n):
            at_lo = z[k] <= lo[k] and g[k] < 0.0
            at_hi = z[k] >= hi[k] and g[k] > 0.0
            if not (at_lo or at_hi):
                free[nf] = k
                nf += 1
                pg = max(pg, abs(g[k]))
        if nf == 0 or pg < 1e-12:
            break
        xsave = ctx[C_X]
        for c in range(nf):
            k = free[c]
            eps = 1e-6 * max(1.0, abs(z[k]))
            if z[k] + eps > hi[k]:
                eps = -eps
            zt[:] = z
            zt[k] += eps
            ft = _value_grad(zt, kinds, ctx, par, gt)
            if ft == -math.inf:
                eps = -eps
                zt[k] = z[k] + eps
                ft = _value_grad(zt, kinds, ctx, par, gt)
            for r in range(n):
                H[r, k] = (gt[r] - g[r]) / eps if ft > -math.inf else 0.0
            ctx[C_X] = xsave
        A = np.empty((nf, nf))
        rhs = np.empty(nf)
        for r in range(nf):
            rhs[r] = g[free[r]]
            for c in range(nf):
                A[r, c] = -0.5 * (H[free[r], free[c]] + H[free[c], free[r]])
        step = _solve_spd(A, rhs, nf)
        d = np.zeros(n)
        for c in range(nf):
            d[free[c]] = step[c]
        t = 1.0
        accepted = False
        fn = f
        for _ls in range(50):
            moved = 0.0
            gain = 0.0
            for k in range(n):
                zn[k] = min(max(z[k] + t * d[k], lo[k]), hi[k])
                moved = max(moved, abs(zn[k] - z[k]))
                gain += g[k] * (zn[k] - z[k])
            if moved == 0.0:
                break
            fn = _value_grad(zn, kinds, ctx, par, gn)
            if fn >= f + 1e-4 * gain and fn >= f:
                accepted = True
                break
            ctx[C_X] = xsave
            t *= 0.5
        if not accepted:
            break
        moved = 0.0
        for k in range(n):
            moved = max(moved, abs(zn[k] - z[k]))
        z[:] = zn
        g[:] = gn
        f = fn
        if moved < 1e-13:
            break
    return z, f


@njit(cache=True)
def _axis(lo, hi, npts):
    out = np.empty(npts)
    if npts == 1 or hi <= lo:
        out[:] = lo
        return out
    for i in range(npts):
        out[i] = lo + (hi - lo) * i / (npts - 1)
    return out


# purchased-share starts; v = 0 is feasible whenever any allocation is
V_STARTS = np.array([0.0, 0.1, 0.5, 0.9])


@njit(cache=True)
def _search_box(kinds, lo, hi, convex, ctx, par, restricted):
    """Start grid plus Newton polish over one box.  Returns (z, value).

    With ``restricted`` the starts are taken from grid points with
    e_f <= e_m and results violating that are discarded.
    """
    n = kinds.shape[0]
    if n == 0:
        z = np.empty(0)
        g = np.empty(0)
        ctx[C_X] = math.nan
        return z, _value_grad(z, kinds, ctx, par, g)
    npts = np.empty(n, dtype=np.int64)
    for k in range(n):
        if kinds[k] == K_V:
            npts[k] = 4
        elif hi[k] - lo[k] <= 0.0:
            npts[k] = 1
        else:
            npts[k] = 3
    total = 1
    for k in range(n):
        total *= npts[k]
    vals = np.empty(total)
    z = np.empty(n)
    g = np.empty(n)
    for t in range(total):
        rem = t
        for k in range(n):
            i = rem % npts[k]
            rem //= npts[k]
            if kinds[k] == K_V:
                z[k] = V_STARTS[i]
            elif npts[k] == 1:
                z[k] = lo[k]
            else:
                z[k] = lo[k] + (hi[k] - lo[k]) * i / (npts[k] - 1)
        ctx[C_X] = math.nan
        vals[t] = _value_grad(z, kinds, ctx, par, g)
        if restricted and vals[t] > -math.inf:
            h_m, h_f, v = _unpack(z, kinds, ctx, par)
            e_m = earnings_nb(h_m, ctx[C_AM], int(ctx[C_JM]), ctx[C_FLEX] > 0, par)
            e_f = earnings_nb(h_f, ctx[C_AF], int(ctx[C_JF]), ctx[C_FLEX] > 0, par)
            if e_f > e_m:
                vals[t] = -math.inf
    order = np.argsort(-vals)
    starts = 2 if convex else 1
    best_z = lo.copy()
    best_v = -math.inf
    used = 0
    first = -1
    for r in range(total):
        t = order[r]
        if vals[t] == -math.inf:
            break
        if used == 1:
            far = False
            ra = t
            rb = first
            for k in range(n):
                if abs(ra % npts[k] - rb % npts[k]) > 1:
                    far = True
                ra //= npts[k]
                rb //= npts[k]
            if not far:
                continue
        rem = t
        for k in range(n):
            i = rem % npts[k]
            rem //= npts[k]
            if kinds[k] == K_V:
                z[k] = V_STARTS[i]
            elif npts[k] == 1:
                z[k] = lo[k]
            else:
                z[k] = lo[k] + (hi[k] - lo[k]) * i / (npts[k] - 1)
        zz, vv = _ascent(z, kinds, lo, hi, ctx, par)
        ok = vv > best_v
        if ok and restricted:
            h_m, h_f, v = _unpack(zz, kinds, ctx, par)
            e_m = earnings_nb(h_m, ctx[C_AM], int(ctx[C_JM]), ctx[C_FLEX] > 0, par)
            e_f = earnings_nb(h_f, ctx[C_AF], int(ctx[C_JF]), ctx[C_FLEX] > 0, par)
            ok = e_f <= e_m
        if ok:
            best_v = vv
            best_z[:] = zz
        if used == 0:
            first = t
        used += 1
        if used >= starts:
            break
    return best_z, best_v


# ---------------------------------------------------------------------------
# pair and couple


@njit(cache=True)
def _brackets(j, flexible, par):
    """Piece brackets of a schedule as rows of (lo, hi, is_convex)."""
    if j == 2:
        return np.zeros((1, 3))
    if j == 1 or flexible:
        b = np.empty((1, 3))
        b[0, 0] = par[HMIN_NR] if j == 1 else par[HMIN_R]
        b[0, 1] = 1.0
        b[0, 2] = 0.0
        return b
    b = np.empty((2, 3))
    b[0, 0] = par[HMIN_R]
    b[0, 1] = par[HBAR]
    b[0, 2] = 1.0
    b[1, 0] = par[HBAR]
    b[1, 1] = 1.0
    b[1, 2] = 0.0
    return b


@njit(cache=True)
def _setup(jm, jf, bm, bf, outsourcing, ctx, kinds, lo, hi):
    n = 0
    ctx[C_MCONV] = bm[2]
    ctx[C_FCONV] = bf[2]
    if jm != 2:
        kinds[n] = K_HM
        lo[n] = bm[0]
        hi[n] = bm[1]
        n += 1
    if jf != 2:
        kinds[n] = K_HF
        lo[n] = bf[0]
        hi[n] = bf[1]
        n += 1
    if outsourcing:
        kinds[n] = K_V
        lo[n] = 0.0
        hi[n] = V_MAX
        n += 1
    return n


@njit(cache=True)
def _record(z, kinds, ctx, par, out):
    h_m, h_f, v = _unpack(z, kinds, ctx, par)
    W, e_m, e_f, d_m, d_f, d_buy, x = evaluate_nb(
        h_m, h_f, v, ctx[C_AM], ctx[C_AF], ctx[C_D], int(ctx[C_JM]), int(ctx[C_JF]),
        ctx[C_FLEX] > 0, ctx[C_PRICE], par, math.nan)
    out[H_M] = h_m
    out[H_F] = h_f
    out[D_M] = d_m
    out[D_F] = d_f
    out[D_BUY] = d_buy
    out[E_M] = e_m
    out[E_F] = e_f
    out[CONS] = 0.5 * (e_m + e_f - ctx[C_PRICE] * d_buy)
    out[UTIL] = W
    out[BINDING] = 0.0
    return W


@njit(cache=True)
def solve_pair_nb(a_m, a_f, D, jm, jf, mode, price, par, out):
    """Fill ``out`` (length N_FIELDS) with the optimal allocation for one pair."""
    flexible = mode == FLEXIBLE
    outsourcing = mode == OUTSOURCING
    p = price if outsourcing else 0.0
    for k in range(N_FIELDS):
        out[k] = 0.0
    out[UTIL] = -math.inf
    if jm == 2 and jf == 2:
        return
    ctx = np.zeros(CTX_LEN)
    ctx[C_AM] = a_m
    ctx[C_AF] = a_f
    ctx[C_D] = D
    ctx[C_JM] = jm
    ctx[C_JF] = jf
    ctx[C_FLEX] = 1.0 if flexible else 0.0
    ctx[C_PRICE] = p
    bms = _brackets(jm, flexible, par)
    bfs = _brackets(jf, flexible, par)
    kinds = np.zeros(3, dtype=np.int64)
    lo = np.zeros(3)
    hi = np.zeros(3)
    tmp = np.empty(N_FIELDS)

    # unrestricted optimum V2; box optima that already satisfy e_f <= e_m
    # are remembered as V1 candidates
    best2 = np.zeros(N_FIELDS)
    best2[UTIL] = -math.inf
    best1 = np.zeros(N_FIELDS)
    best1[UTIL] = -math.inf
    for ib in range(bms.shape[0]):
        for jb in range(bfs.shape[0]):
            n = _setup(jm, jf, bms[ib], bfs[jb], outsourcing, ctx, kinds, lo, hi)
            ctx[C_REGION] = 0.0
            convex = bms[ib, 2] > 0 or bfs[jb, 2] > 0
            z, val = _search_box(kinds[:n], lo[:n], hi[:n], convex, ctx, par, False)
            if val > -math.inf:
                W = _record(z, kinds[:n], ctx, par, tmp)
                if W > best2[UTIL]:
                    best2[:] = tmp
                if tmp[E_F] <= tmp[E_M] and W > best1[UTIL]:
                    best1[:] = tmp
    delta = par[DELTA]
    if not (best2[UTIL] > -math.inf) or delta <= 0.0 or best2[E_F] <= best2[E_M]:
        out[:] = best2
        return

    # restricted optimum V1 (e_f <= e_m)
    if jm != 2:
        for ib in range(bms.shape[0]):
            for jb in range(bfs.shape[0]):
                bm = bms[ib]
                bf = bfs[jb]
                convex = bm[2] > 0 or bf[2] > 0
                n = _setup(jm, jf, bm, bf, outsourcing, ctx, kinds, lo, hi)
                ctx[C_REGION] = 0.0
                z, val = _search_box(kinds[:n], lo[:n], hi[:n], convex, ctx, par, True)
                if val > -math.inf:
                    W = _record(z, kinds[:n], ctx, par, tmp)
                    if tmp[E_F] <= tmp[E_M] and W > best1[UTIL]:
                        best1[:] = tmp
                if jf == 2:
                    continue
                # equality line e_f = e_m, parametrised by h_m
                ef_lo = earnings_nb(bf[0], a_f, jf, flexible, par)
                ef_hi = earnings_nb(bf[1], a_f, jf, flexible, par)
                hm_lo = max(_inverse_earnings(ef_lo, a_m, jm, bm[2] > 0, par), bm[0])
                hm_hi = min(_inverse_earnings(ef_hi, a_m, jm, bm[2] > 0, par), bm[1])
                if hm_lo > hm_hi:
                    continue
                n = _setup(jm, 2, bm, bf, outsourcing, ctx, kinds, lo, hi)
                ctx[C_FCONV] = bf[2]
                lo[0] = hm_lo
                hi[0] = hm_hi
                ctx[C_REGION] = 2.0
                ctx[C_FLO] = bf[0]
                ctx[C_FHI] = bf[1]
                z, val = _search_box(kinds[:n], lo[:n], hi[:n], True, ctx, par, False)
                if val > -math.inf:
                    W = _record(z, kinds[:n], ctx, par, tmp)
                    # rounding in the earnings inversion must not read as binding
                    if tmp[E_F] > tmp[E_M] or tmp[E_M] - tmp[E_F] <= 1e-12 * tmp[E_M]:
                        tmp[E_F] = tmp[E_M]
                    if W > best1[UTIL]:
                        best1[:] = tmp
                ctx[C_REGION] = 0.0
    if best1[UTIL] >= best2[UTIL] - delta:
        out[:] = best1
    else:
        out[:] = best2
        out[UTIL] = best2[UTIL] - delta
        out[BINDING] = 1.0


@njit(cache=True)
def choice_probabilities_nb(u, eta, prob):
    m = -math.inf
    for k in range(u.shape[0]):
        if u[k] > m:
            m = u[k]
    if m == -math.inf:
        for k in range(u.shape[0]):
            prob[k] = 1.0 / u.shape[0]
        return
    s = 0.0
    for k in range(u.shape[0]):
        if u[k] > -math.inf:
            prob[k] = math.exp((u[k] - m) / eta)
        else:
            prob[k] = 0.0
        s += prob[k]
    for k in range(u.shape[0]):
        prob[k] /= s


@njit(cache=True)
def solve_couple_nb(a_m, a_f, D, mode, price, par, alloc, prob):
    u = np.empty(9)
    for p in range(9):
        solve_pair_nb(a_m, a_f, D, p // 3, p % 3, mode, price, par, alloc[p])
        u[p] = alloc[p, UTIL]
    choice_probabilities_nb(u, par[ETA], prob)


@njit(cache=True, parallel=True)
def solve_population_nb(a_m, a_f, D, mode, price, par, alloc, prob):
    for i in prange(a_m.shape[0]):
        solve_couple_nb(a_m[i], a_f[i], D[i], mode, price, par, alloc[i], prob[i])


# ---------------------------------------------------------------------------
# public wrappers


def _as_mode(mode) -> Mode:
    if mode is None:
        return Mode()
    if isinstance(mode, Mode):
        return mode
    return Mode(str(mode))


def solve_allocation(couple: Couple, pair, params: ModelParams, mode=None) -> Allocation:
    """Optimal allocation for one couple and one occupation pair."""
    mode = _as_mode(mode)
    jm, jf = (int(Occupation(j)) for j in pair)
    out = np.empty(N_FIELDS)
    solve_pair_nb(couple.a_m, couple.a_f, couple.D, jm, jf, mode.code, mode.effective_price,
                  params.pack(), out)
    return Allocation.from_row(out)


def solve_couple(couple: Couple, params: ModelParams, mode=None) -> CoupleSolution:
    mode = _as_mode(mode)
    alloc = np.empty((9, N_FIELDS))
    prob = np.empty(9)
    solve_couple_nb(couple.a_m, couple.a_f, couple.D, mode.code, mode.effective_price,
                    params.pack(), alloc, prob)
    return CoupleSolution.from_arrays(alloc, prob)


def choice_probabilities(u, eta: float) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    prob = np.empty(u.size)
    choice_probabilities_nb(u.ravel().copy(), float(eta), prob)
    return prob.reshape(u.shape)

"""Brute-force reference solver for one occupation pair.

Deliberately shares nothing with ``solver`` beyond the earnings schedule:
the domestic split is a grid variable, the breadwinner penalty is applied
directly as ``-delta * 1{e_f > e_m}`` and the search is a coarse grid
followed by repeated local grid refinement around the best candidates.
Refinement runs twice per candidate: in the natural coordinates and in
ridge coordinates ``(h_m, e_f / e_m, ...)`` where the penalty boundary is
an axis, so the pattern search cannot stall on the bunching ridge, and
once more on the line ``e_f = e_m`` itself, which catches optima where
that line meets a kink of the earnings schedule.
Slow; meant for tests only.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .model import (
    DELTA, GAMMA, HBAR, HMIN_NR, HMIN_R, PHI, PSI, THETA, XI, ModelParams, Occupation, earnings_nb,
)

N_CAND = 8
RADIUS = 2
SHRINK = 3.0
SCREEN_STEP = 1e-3   # all candidates are refined to this step
KEEP = 3             # best screened runs refined further
FINAL_STEP = 1e-7


@njit(cache=True)
def _raw_objective(y, n, jm, jf, a_m, a_f, D, flexible, price, par):
    # y = (h_m?, h_f?, s, v?) in that order; s splits the home-produced share,
    # v is the purchased share of D**xi
    xi = par[XI]
    k = 0
    h_m = 0.0
    h_f = 0.0
    if jm != 2:
        h_m = y[k]
        k += 1
    if jf != 2:
        h_f = y[k]
        k += 1
    s = y[k]
    k += 1
    v = y[k] if k < n else 0.0
    home = 1.0 - v
    d_m = D * (home * s) ** (1.0 / xi)
    d_f = D * (home * (1.0 - s)) ** (1.0 / xi)
    b = D * v ** (1.0 / xi)
    t_m = h_m + d_m
    t_f = h_f + d_f
    if t_m > 1.0 or t_f > 1.0:
        return -math.inf
    e_m = earnings_nb(h_m, a_m, jm, flexible, par)
    e_f = earnings_nb(h_f, a_f, jf, flexible, par)
    spend = e_m + e_f - price * b
    if spend <= 0.0:
        return -math.inf
    g = par[GAMMA]
    u = 2.0 * math.log(0.5 * spend) - par[PHI] * (t_m ** (1.0 + g) + t_f ** (1.0 + g)) / (1.0 + g)
    if e_f > e_m:
        u -= par[DELTA]
    return u


@njit(cache=True)
def _hours_for(e, a, j, flexible, par):
    # smallest admissible hours earning exactly e; -1 when none
    lo = par[HMIN_R] if j == 0 else par[HMIN_NR]
    slope = a * par[HBAR] ** par[THETA]
    if j == 1:
        slope *= par[PSI]
    if j == 0 and not flexible:
        kink = a * par[HBAR] ** (1.0 + par[THETA])
        h = (e / a) ** (1.0 / (1.0 + par[THETA])) if e <= kink else e / slope
    else:
        h = e / slope
    if h < lo or h > 1.0:
        return -1.0
    return h


@njit(cache=True)
def _ridge_objective(y, n, jm, jf, a_m, a_f, D, flexible, price, par):
    # y = (h_m, r, s, v?) with e_f = r * e_m
    z = y.copy()
    e_m = earnings_nb(y[0], a_m, jm, flexible, par)
    h_f = _hours_for(y[1] * e_m, a_f, jf, flexible, par)
    if h_f < 0.0:
        return -math.inf
    z[1] = h_f
    return _raw_objective(z, n, jm, jf, a_m, a_f, D, flexible, price, par)


@njit(cache=True)
def _eval(y, n, ridge, jm, jf, a_m, a_f, D, flexible, price, par):
    if ridge:
        return _ridge_objective(y, n, jm, jf, a_m, a_f, D, flexible, price, par)
    return _raw_objective(y, n, jm, jf, a_m, a_f, D, flexible, price, par)


@njit(cache=True)
def _local(y0, lo, hi, step, stop, ridge, jm, jf, a_m, a_f, D, flexible, price, par):
    n = y0.shape[0]
    y = y0.copy()
    best = _eval(y, n, ridge, jm, jf, a_m, a_f, D, flexible, price, par)
    side = 2 * RADIUS + 1
    total = side ** n
    z = np.empty(n)
    while step >= stop:
        center = y.copy()
        for t in range(total):
            rem = t
            for k in range(n):
                off = rem % side - RADIUS
                rem //= side
                z[k] = min(max(center[k] + off * step, lo[k]), hi[k])
            val = _eval(z, n, ridge, jm, jf, a_m, a_f, D, flexible, price, par)
            if val > best:
                best = val
                y[:] = z
        moved = False
        for k in range(n):
            if abs(y[k] - center[k]) > 0.5 * RADIUS * step:
                moved = True
        if not moved:
            step /= SHRINK
    return y, best, step


@njit(cache=True)
def oracle_pair_nb(a_m, a_f, D, jm, jf, mode, price, par, coarse):
    """Best raw objective over the pair's feasible set.

    Returns (u, y); y is in ridge coordinates when that search won.
    """
    flexible = mode == 1
    p = price if mode == 2 else 0.0
    n = (jm != 2) + (jf != 2) + 1 + (mode == 2)
    lo = np.zeros(n)
    hi = np.ones(n)
    k = 0
    if jm != 2:
        lo[k] = par[HMIN_R] if jm == 0 else par[HMIN_NR]
        k += 1
    if jf != 2:
        lo[k] = par[HMIN_R] if jf == 0 else par[HMIN_NR]
        k += 1
    npts = np.empty(n, dtype=np.int64)
    for k in range(n):
        npts[k] = int(math.ceil((hi[k] - lo[k]) / coarse)) + 1
    total = 1
    for k in range(n):
        total *= npts[k]
    cand_u = np.full(N_CAND, -math.inf)
    cand_y = np.zeros((N_CAND, n))
    y = np.empty(n)
    for t in range(total):
        rem = t
        for k in range(n):
            i = rem % npts[k]
            rem //= npts[k]
            y[k] = min(lo[k] + i * coarse, hi[k])
        val = _raw_objective(y, n, jm, jf, a_m, a_f, D, flexible, p, par)
        if val > cand_u[N_CAND - 1]:
            # insert, keeping candidates at least two coarse steps apart
            dup = -1
            for c in range(N_CAND):
                close = True
                for k in range(n):
                    if abs(cand_y[c, k] - y[k]) > 2.0 * coarse:
                        close = False
                if close and cand_u[c] > -math.inf:
                    dup = c
                    break
            if dup >= 0:
                if val > cand_u[dup]:
                    cand_u[dup] = val
                    cand_y[dup] = y
                    # restore ordering
                    c = dup
                    while c > 0 and cand_u[c] > cand_u[c - 1]:
                        tu = cand_u[c - 1]
                        cand_u[c - 1] = cand_u[c]
                        cand_u[c] = tu
                        for k in range(n):
                            ty = cand_y[c - 1, k]
                            cand_y[c - 1, k] = cand_y[c, k]
                            cand_y[c, k] = ty
                        c -= 1
                continue
            c = N_CAND - 1
            cand_u[c] = val
            cand_y[c] = y
            while c > 0 and cand_u[c] > cand_u[c - 1]:
                tu = cand_u[c - 1]
                cand_u[c - 1] = cand_u[c]
                cand_u[c] = tu
                for k in range(n):
                    ty = cand_y[c - 1, k]
                    cand_y[c - 1, k] = cand_y[c, k]
                    cand_y[c, k] = ty
                c -= 1
    dual = jm != 2 and jf != 2
    rlo = lo.copy()
    rhi = hi.copy()
    if dual:
        rlo[1] = 0.0
        rhi[1] = (earnings_nb(1.0, a_f, jf, flexible, par)
                  / earnings_nb(lo[0], a_m, jm, flexible, par))
    plo = rlo.copy()
    phi = rhi.copy()
    if dual:
        plo[1] = 1.0
        phi[1] = 1.0
    m_max = N_CAND * 7
    run_y = np.zeros((m_max, n))
    run_u = np.full(m_max, -math.inf)
    run_step = np.zeros(m_max)
    run_ridge = np.zeros(m_max, dtype=np.bool_)
    run_pin = np.zeros(m_max, dtype=np.bool_)
    m = 0
    r = np.empty(n)
    for c in range(N_CAND):
        if cand_u[c] == -math.inf:
            continue
        yy, uu, st = _local(cand_y[c].copy(), lo, hi, 0.5 * coarse, SCREEN_STEP, False,
                            jm, jf, a_m, a_f, D, flexible, p, par)
        run_y[m] = yy
        run_u[m] = uu
        run_step[m] = st
        m += 1
        if not dual:
            continue
        # ridge coordinates, started from the candidate and from its
        # projection onto e_f = e_m
        for start in (cand_y[c], yy):
            r[:] = start
            r[1] = (earnings_nb(start[1], a_f, jf, flexible, par)
                    / earnings_nb(start[0], a_m, jm, flexible, par))
            for proj in range(3):
                if proj == 1:
                    if r[1] <= 1.0:
                        continue
                    r[1] = 1.0
                # proj 2 pins r = 1, where a kink in either schedule is an axis
                r[1] = 1.0 if proj == 2 else r[1]
                ry, ru, st = _local(r.copy(), plo if proj == 2 else rlo,
                                    phi if proj == 2 else rhi, 0.5 * coarse, SCREEN_STEP, True,
                                    jm, jf, a_m, a_f, D, flexible, p, par)
                run_y[m] = ry
                run_u[m] = ru
                run_step[m] = st
                run_ridge[m] = True
                run_pin[m] = proj == 2
                m += 1
    order = np.argsort(-run_u[:m])
    best_u = -math.inf
    best_y = np.zeros(n)
    # a kink optimum screens poorly at coarse steps, so the best run on
    # e_f = e_m is always refined as well
    pick = np.full(KEEP + 1, -1, dtype=np.int64)
    for q in range(min(KEEP, m)):
        pick[q] = order[q]
    for q in range(m):
        if run_pin[order[q]]:
            pick[KEEP] = order[q]
            break
    for q in range(KEEP + 1):
        i = pick[q]
        if i < 0 or run_u[i] == -math.inf:
            continue
        if run_pin[i]:
            yy, uu, st = _local(run_y[i].copy(), plo, phi, run_step[i], FINAL_STEP, True,
                                jm, jf, a_m, a_f, D, flexible, p, par)
        elif run_ridge[i]:
            yy, uu, st = _local(run_y[i].copy(), rlo, rhi, run_step[i], FINAL_STEP, True,
                                jm, jf, a_m, a_f, D, flexible, p, par)
        else:
            yy, uu, st = _local(run_y[i].copy(), lo, hi, run_step[i], FINAL_STEP, False,
                                jm, jf, a_m, a_f, D, flexible, p, par)
        if uu > best_u:
            best_u = uu
            best_y = yy
    return best_u, best_y


def oracle_utility(couple, pair, params: ModelParams, mode=None, coarse: float = 0.02) -> float:
    """Reference joint utility (penalty included) for one couple and pair."""
    from .solver import Mode
    mode = mode if isinstance(mode, Mode) else Mode(mode or "baseline")
    jm, jf = (int(Occupation(j)) for j in pair)
    if jm == 2 and jf == 2:
        return -math.inf
    u, _ = oracle_pair_nb(couple.a_m, couple.a_f, couple.D, jm, jf, mode.code,
                          mode.effective_price, params.pack(), coarse)
    return float(u)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jointlabor.model import PAIRS, Couple, ModelParams, Occupation, domestic_output
from jointlabor.oracle import oracle_utility
from jointlabor.solver import (
    N_FIELDS, Mode, choice_probabilities, solve_allocation, solve_couple, solve_population_nb,
)

P = ModelParams()
R, NR, NW = Occupation.R, Occupation.NR, Occupation.NW
MODES = [Mode(), Mode("flexible_regular"), Mode.default_outsourcing(P)]

couples = st.builds(
    Couple,
    a_m=st.floats(0.2, 5.0),
    a_f=st.floats(0.2, 5.0),
    D=st.floats(1e-6, 0.99),
)


def test_mode_validation():
    with pytest.raises(ValueError):
        Mode("nonsense")
    with pytest.raises(ValueError):
        Mode("outsourcing", 0.0)
    assert Mode.default_outsourcing(P).price == pytest.approx(0.59 * 0.4 ** 2.62)


@pytest.mark.parametrize("D", [1e-6, 0.05, 0.157, 0.6, 0.95])
def test_symmetric_couple_symmetric_allocation(D):
    p0 = P.replace(delta=0.0)
    a = solve_allocation(Couple(1.3, 1.3, D), (R, R), p0)
    assert a.h_m == pytest.approx(a.h_f, abs=1e-6)
    assert a.d_m == pytest.approx(a.d_f, abs=1e-6)


def test_no_earner_pair_is_infeasible():
    a = solve_allocation(Couple(2.0, 2.0, 0.3), (NW, NW), P)
    assert a.u == -math.inf
    assert a.e_m == 0.0 and a.e_f == 0.0


def test_reference_couple_matches_oracle():
    c = Couple(1.0, 1.0, 0.157)
    u = solve_allocation(c, (R, NR), P).u
    assert abs(u - oracle_utility(c, (R, NR), P)) < 1e-6


def test_outsourcing_buys_housework_for_rich_couple():
    c = Couple(8.0, 6.0, 0.5)
    mode = Mode.default_outsourcing(P)
    base = solve_allocation(c, (R, R), P)
    out = solve_allocation(c, (R, R), P, mode)
    assert out.d_buy > 0
    assert out.d_m + out.d_f < base.d_m + base.d_f
    assert abs(out.u - oracle_utility(c, (R, R), P, mode, coarse=0.04)) < 1e-5


def check_allocation(a, c, pair, params, mode):
    jm, jf = pair
    assert a.h_m + a.d_m <= 1 + 1e-12 and a.h_f + a.d_f <= 1 + 1e-12
    mins = {R: params.h_min_R, NR: params.h_min_NR}
    for h, j in ((a.h_m, jm), (a.h_f, jf)):
        if j == NW:
            assert h == 0.0
        else:
            assert h >= mins[j] - 1e-12
    assert domestic_output(a.d_m, a.d_f, params, a.d_buy) == pytest.approx(c.D, rel=1e-9)
    p = mode.effective_price
    assert 2 * a.c == pytest.approx(a.e_m + a.e_f - p * a.d_buy, rel=1e-12, abs=1e-300)
    # penalty flag agrees with the earnings comparison
    assert a.norm_binding == (a.e_f > a.e_m + 1e-12)


@settings(max_examples=40, deadline=None)
@given(c=couples, k=st.integers(0, 8), m=st.integers(0, 2))
def test_allocation_invariants(c, k, m):
    pair = PAIRS[k]
    mode = MODES[m]
    a = solve_allocation(c, pair, P, mode)
    if pair == (NW, NW):
        assert a.u == -math.inf
        return
    check_allocation(a, c, pair, P, mode)


@settings(max_examples=30, deadline=None)
@given(c=couples, k=st.integers(0, 7), d1=st.floats(0.0, 2.0), d2=st.floats(0.0, 2.0))
def test_penalty_monotone(c, k, d1, d2):
    lo, hi = sorted((d1, d2))
    a1 = solve_allocation(c, PAIRS[k], P.replace(delta=lo))
    a2 = solve_allocation(c, PAIRS[k], P.replace(delta=hi))
    assert a2.u <= a1.u + 1e-9
    if a1.e_f <= a1.e_m:
        assert a2.u == pytest.approx(a1.u, abs=1e-7)


@settings(max_examples=25, deadline=None)
@given(c=couples, k=st.integers(0, 7), scale=st.floats(0.3, 3.0))
def test_ability_scale_shifts_utility(c, k, scale):
    # log utility: scaling both abilities shifts U by 2 log(scale), allocation unchanged
    a = solve_allocation(c, PAIRS[k], P)
    b = solve_allocation(Couple(c.a_m * scale, c.a_f * scale, c.D), PAIRS[k], P)
    assert b.u - a.u == pytest.approx(2 * math.log(scale), abs=1e-6)


def test_strong_norm_keeps_wife_below_husband():
    p = P.replace(delta=100.0)
    c = Couple(0.5, 4.0, 0.2)
    sol = solve_couple(c, p)
    for i, jm in enumerate((R, NR, NW)):
        for j, jf in enumerate((R, NR, NW)):
            a = sol.alloc[i][j]
            if jm == NW and jf != NW:
                # the husband earns nothing, so the penalty cannot be avoided
                assert a.norm_binding
            elif (jm, jf) != (NW, NW):
                assert not a.norm_binding
                assert a.e_f <= a.e_m + 1e-12


def test_bunching_at_equal_earnings():
    # wife much more productive: with the norm she caps earnings at the husband's
    c = Couple(1.0, 2.2, 0.1)
    a = solve_allocation(c, (R, NR), P)
    b = solve_allocation(c, (R, NR), P.replace(delta=0.0))
    assert b.e_f > b.e_m
    assert a.e_f == pytest.approx(a.e_m, rel=1e-9)
    assert not a.norm_binding


def test_probabilities_uniform_when_utilities_equal():
    p = choice_probabilities(np.full(9, -3.2), 0.17)
    assert np.allclose(p, 1 / 9, atol=1e-15)


def test_probabilities_argmax_limit():
    u = np.array([-5.0, -4.0, -4.5, -6, -7, -8, -9, -10, -np.inf])
    p = choice_probabilities(u, 1e-8)
    assert p[1] == 1.0 and p.sum() == 1.0


def test_probabilities_zero_for_infeasible():
    u = np.array([0.0, -1.0, -np.inf, 0.5, -2, -3, -4, -5, -np.inf])
    p = choice_probabilities(u, 0.17)
    assert p[2] == 0.0 and p[8] == 0.0
    assert abs(p.sum() - 1) < 1e-12


def test_couple_solution_layout():
    c = Couple(1.0, 0.8, 0.2)
    sol = solve_couple(c, P)
    assert sol.u.shape == (3, 3) and sol.prob.shape == (3, 3)
    assert sol.prob[2, 2] == 0.0
    assert abs(sol.prob.sum() - 1) < 1e-10
    a = solve_allocation(c, (NR, R), P)
    assert sol.alloc[1][0] == a


def test_probability_fuzz():
    rng = np.random.default_rng(5)
    n = 10_000
    am = np.exp(rng.normal(0, 0.64, n))
    af = np.exp(rng.normal(0, 0.64, n))
    D = np.clip(rng.beta(0.08, 0.43, n), 1e-15, 1 - 1e-15)
    alloc = np.empty((n, 9, N_FIELDS))
    prob = np.empty((n, 9))
    solve_population_nb(am, af, D, 0, 0.0, P.pack(), alloc, prob)
    assert np.all(prob >= 0)
    assert np.max(np.abs(prob.sum(axis=1) - 1)) < 1e-10
    assert np.all(prob[:, 8] == 0.0)
    assert np.all(np.isfinite(alloc[:, 0, 8]))


@pytest.mark.parametrize("seed", [0, 1])
def test_oracle_agreement_sample(seed):
    rng = np.random.default_rng(100 + seed)
    for _ in range(3):
        c = Couple(float(np.exp(rng.normal(0, 0.64))), float(np.exp(rng.normal(0, 0.64))),
                   float(rng.uniform(0.01, 0.9)))
        for mode in MODES[:2]:
            for pair in PAIRS[:8]:
                u = solve_allocation(c, pair, P, mode).u
                assert abs(u - oracle_utility(c, pair, P, mode)) < 1e-5

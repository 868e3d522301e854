import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jointlabor.model import (
    Couple, ModelParams, Occupation, domestic_output, domestic_partner_hours, earnings,
    individual_utility,
)

P = ModelParams()
R, NR, NW = Occupation.R, Occupation.NR, Occupation.NW


def test_calibrated_defaults():
    assert (P.theta, P.psi, P.eta, P.phi) == (2.62, 0.59, 0.17, 12.0)
    assert (P.sigma, P.rho, P.alpha, P.beta, P.delta) == (0.64, 0.53, 0.08, 0.43, 0.79)
    assert P.gamma == 3.0 and P.xi == pytest.approx(2 / 3)
    assert (P.h_bar, P.h_min_R, P.h_min_NR) == (0.40, 0.20, 0.10)


@pytest.mark.parametrize("bad", [
    dict(theta=0), dict(psi=1.0), dict(psi=0.0), dict(eta=-1), dict(phi=0), dict(sigma=0),
    dict(rho=1.0), dict(rho=-1.0), dict(alpha=0), dict(beta=-0.1), dict(delta=-0.01),
    dict(xi=0), dict(xi=1.5), dict(h_min_NR=0.3), dict(h_bar=1.2), dict(theta=float("nan")),
])
def test_params_reject_invalid(bad):
    with pytest.raises(ValueError):
        ModelParams(**bad)


def test_estimated_vector_round_trip():
    v = P.estimated_vector()
    assert P.with_estimated(v) == P
    assert P.pack().shape == (14,)


@pytest.mark.parametrize("args", [(0.0, 1.0, 0.1), (1.0, 0.0, 0.1), (1.0, 1.0, 0.0),
                                  (1.0, 1.0, 1.0), (-1.0, 1.0, 0.5)])
def test_couple_rejects_invalid(args):
    with pytest.raises(ValueError):
        Couple(*args)


def test_occupation_grid():
    assert len(Occupation) == 3
    assert [int(j) for j in Occupation] == [0, 1, 2]


# earnings


def test_earnings_examples():
    assert earnings(0.40, 1.0, R, P) == pytest.approx(0.40 ** 3.62, rel=1e-14)
    assert earnings(0.15, 1.0, R, P) == 0.0
    assert earnings(0.50, 2.0, NR, P) == pytest.approx(0.59 * 2 * 0.40 ** 2.62 * 0.50, rel=1e-14)
    for h in (0.0, 0.3, 1.0):
        assert earnings(h, 3.0, NW, P) == 0.0


def test_earnings_kink_continuity():
    a = 1.7
    below = a * P.h_bar ** (1 + P.theta)
    above = a * P.h_bar ** P.theta * P.h_bar
    assert below == pytest.approx(above, rel=1e-15)
    assert earnings(P.h_bar, a, R, P) == pytest.approx(below, rel=1e-15)
    assert earnings(P.h_bar + 1e-12, a, R, P) == pytest.approx(below, rel=1e-10)


def test_earnings_flexible_schedule():
    a = 1.3
    assert earnings(0.19, a, R, P, flexible_regular=True) == 0.0
    assert earnings(0.3, a, R, P, flexible_regular=True) == pytest.approx(a * 0.4 ** 2.62 * 0.3)
    # flexible pays more below the kink and the same above
    assert earnings(0.3, a, R, P, True) > earnings(0.3, a, R, P)
    assert earnings(0.7, a, R, P, True) == earnings(0.7, a, R, P)


@pytest.mark.parametrize("h,a", [(-0.1, 1.0), (1.01, 1.0), (0.5, 0.0), (0.5, -2.0)])
def test_earnings_rejects(h, a):
    with pytest.raises(ValueError):
        earnings(h, a, R, P)


hours = st.floats(0.0, 1.0, allow_nan=False)
ability = st.floats(0.05, 20.0, allow_nan=False)


@given(h1=hours, h2=hours, a=ability, j=st.sampled_from([R, NR]), flex=st.booleans())
def test_earnings_monotone(h1, h2, a, j, flex):
    lo, hi = sorted((h1, h2))
    assert earnings(lo, a, j, P, flex) <= earnings(hi, a, j, P, flex)


@given(h=st.floats(0.2, 0.4), a=ability)
def test_earnings_strict_above_cutoff(h, a):
    assert earnings(min(h + 1e-3, 1.0), a, R, P) > earnings(h, a, R, P)


@given(h1=st.floats(0.2, 0.4), h2=st.floats(0.2, 0.4), a=ability)
def test_regular_convex_below_kink(h1, h2, a):
    if abs(h1 - h2) < 1e-6:
        return
    mid = earnings(0.5 * (h1 + h2), a, R, P)
    chord = 0.5 * (earnings(h1, a, R, P) + earnings(h2, a, R, P))
    assert chord > mid


@given(h=st.floats(0.2, 1.0), a=ability)
def test_nonregular_is_psi_times_flexible(h, a):
    assert earnings(h, a, NR, P) == pytest.approx(P.psi * earnings(h, a, R, P, True), rel=1e-13)


@given(h=st.floats(0.1, 1.0), a=ability, j=st.sampled_from([R, NR]))
def test_earnings_continuous_above_cutoff(h, a, j):
    lo = P.h_min_R if j == R else P.h_min_NR
    if h <= lo + 1e-6 or h >= 1.0 - 1e-9:
        return
    e = earnings(h, a, j, P)
    assert abs(earnings(h + 1e-9, a, j, P) - e) < 1e-6 * max(a, 1.0)


# utility


def test_utility_examples():
    assert individual_utility(1.0, 0.0, P) == 0.0
    assert individual_utility(0.0, 0.4, P) == -math.inf
    assert individual_utility(-1.0, 0.4, P) == -math.inf
    assert individual_utility(math.e, 1.0, P) == pytest.approx(-2.0, rel=1e-14)
    with pytest.raises(ValueError):
        individual_utility(1.0, -0.1, P)


# domestic constraint


def test_partner_hours_examples():
    assert domestic_partner_hours(0.2, 0.0, P) == pytest.approx(0.2, rel=1e-14)
    assert domestic_partner_hours(0.2, 0.2, P) == 0.0
    d = domestic_partner_hours(0.2, 0.1, P)
    assert d == pytest.approx((0.2 ** (2 / 3) - 0.1 ** (2 / 3)) ** 1.5, rel=1e-14)
    assert abs(domestic_output(0.1, d, P) - 0.2) < 1e-12


def test_partner_hours_rejects_excess():
    with pytest.raises(ValueError):
        domestic_partner_hours(0.2, 0.21, P)
    with pytest.raises(ValueError):
        domestic_partner_hours(0.2, -0.01, P)


@given(D=st.floats(1e-6, 0.999), frac=st.floats(0.0, 1.0))
def test_partner_hours_involution(D, frac):
    d = frac * D
    other = domestic_partner_hours(D, d, P)
    back = domestic_partner_hours(D, min(other, D), P)
    assert back == pytest.approx(d, abs=1e-9 * max(D, 1e-3))


@settings(max_examples=50)
@given(D=st.floats(1e-4, 0.999), frac=st.floats(0.0, 1.0))
def test_linear_constraint_when_xi_is_one(D, frac):
    p1 = P.replace(xi=1.0)
    d = frac * D
    assert domestic_partner_hours(D, d, p1) == pytest.approx(D - d, abs=1e-14)


def test_sharing_is_cheaper_than_specialising():
    # superadditive CES: equal split needs fewer total hours than one provider
    D = 0.3
    each = D / 2 ** (1 / P.xi)
    assert domestic_output(each, each, P) == pytest.approx(D)
    assert 2 * each < D
    assert np.isclose(domestic_output(0.0, D, P), D)

import numpy as np
import pytest

from conftest import filled_alloc, synthetic_population
from jointlabor.model import ModelParams
from jointlabor.population import PopulationConfig, SimulatedPopulation, simulate
from jointlabor.solver import E_F, E_M
from jointlabor.statistics import (
    compute_moments, fmt, gender_gaps, hours_table, marginal_shares, occupation_matrix,
    relative_earnings_density, wife_outearns_share,
)


def test_uniform_probabilities_give_uniform_matrix():
    pop = synthetic_population(filled_alloc(4), np.full((4, 9), 1 / 9))
    assert np.allclose(occupation_matrix(pop), 1 / 9, atol=1e-15)


def test_participation_gap_extreme():
    prob = np.zeros((5, 9))
    prob[:, 2] = 1.0      # husband regular, wife not working
    pop = synthetic_population(filled_alloc(5), prob)
    g = gender_gaps(pop)
    assert g.participation == 1.0
    assert g.occupation == 1.0
    # no working wives: hours and wage gaps are undefined, not NaN
    assert g.hours is None and g.wage is None
    assert fmt(g.hours) == "-"


def test_single_couple_equal_earnings_atom():
    prob = np.zeros((1, 9))
    prob[0, 0] = 1.0
    pop = synthetic_population(filled_alloc(1, e_m=0.7, e_f=0.7), prob)
    h = relative_earnings_density(pop)
    assert h.atom_half == 1.0
    assert h.mass.sum() == 0.0
    assert h.above_half == 0.0


def test_undefined_conditioning_set():
    prob = np.zeros((3, 9))
    prob[:, 7] = 1.0      # husband not working, wife non-regular
    pop = synthetic_population(filled_alloc(3), prob)
    m = compute_moments(pop)
    assert m.mean_hours_R_male is None
    assert m.share_wife_outearns is None
    assert m.share_R_male == 0.0
    t = hours_table(pop)
    assert t[("R", "R")]["h_m"] is None


def test_bin_width_validation(small_pop):
    with pytest.raises(ValueError):
        relative_earnings_density(small_pop, 0.3)


def test_marginals_consistent_with_moments(small_pop):
    m = compute_moments(small_pop)
    male, female = marginal_shares(small_pop)
    assert abs(male[0] - m.share_R_male) < 1e-9
    assert abs(male[1] - m.share_NR_male) < 1e-9
    assert abs(occupation_matrix(small_pop).sum() - 1) < 1e-9
    g = gender_gaps(small_pop)
    assert abs((male[0] - female[0]) - g.occupation) < 1e-9
    assert abs((female[2] - male[2]) - g.participation) < 1e-9


def test_outearn_share_equals_density_above_half(small_pop):
    h = relative_earnings_density(small_pop)
    s = wife_outearns_share(small_pop)
    edges = h.edges
    above = h.mass[edges[:-1] >= 0.5].sum()
    assert abs(h.above_half - s) < 1e-9
    assert abs(above - s) < 1e-9
    assert abs(h.mass.sum() + h.atom_half - 1) < 1e-9


def test_atom_present_at_calibration(small_pop):
    h = relative_earnings_density(small_pop)
    # the bin just above one half holds far less than the atom
    assert h.atom_half > 0.01


def test_reorder_invariance(small_pop):
    perm = np.random.default_rng(0).permutation(len(small_pop))
    c = small_pop.couples
    from jointlabor.population import CoupleDraws
    shuffled = SimulatedPopulation(CoupleDraws(c.a_m[perm], c.a_f[perm], c.D[perm]),
                                   small_pop.alloc[perm], small_pop.prob[perm],
                                   small_pop.params, small_pop.mode)
    assert compute_moments(shuffled) == compute_moments(small_pop)
    assert gender_gaps(shuffled) == gender_gaps(small_pop)
    assert np.array_equal(occupation_matrix(shuffled), occupation_matrix(small_pop))


def test_degenerate_weights_reduce_to_unweighted():
    p = ModelParams(eta=1e-8)
    pop = simulate(p, PopulationConfig(400, seed=2))
    choice = pop.prob.argmax(axis=1)
    assert np.all(pop.prob.max(axis=1) > 1 - 1e-12)
    rows = np.arange(len(pop))
    male_r = choice < 3
    em = pop.alloc[rows, choice, E_M]
    hm = pop.alloc[rows, choice, 0]
    m = compute_moments(pop)
    assert m.mean_hours_R_male == pytest.approx(hm[male_r].mean(), abs=1e-9)
    lw = np.log(em[male_r] / hm[male_r])
    assert m.sd_logwage_R_male == pytest.approx(lw.std(), abs=1e-9)
    dual = np.isin(choice, [0, 1, 3, 4])
    ef = pop.alloc[rows, choice, E_F]
    assert m.share_wife_outearns == pytest.approx((ef[dual] > em[dual]).mean(), abs=1e-9)


def test_hours_table_scale(small_pop):
    t1 = hours_table(small_pop, 1.0)
    t100 = hours_table(small_pop, 100.0)
    assert t100[("R", "R")]["h_m"] == pytest.approx(100 * t1[("R", "R")]["h_m"])
    assert set(t1) == {("R", "R"), ("R", "NR"), ("NR", "R"), ("NR", "NR")}


def test_moment_ranges(small_pop):
    m = compute_moments(small_pop)
    assert 0 <= m.share_R_male <= 1 and 0 <= m.share_NR_male <= 1
    assert m.sd_logwage_R_male >= 0 and m.sd_d_f_R >= 0
    assert -1 <= m.corr_logearn_RR <= 1


def test_fmt():
    assert fmt(0.123456789) == "0.123457"
    assert fmt(None) == "-"
    assert fmt(float("nan")) == "-"

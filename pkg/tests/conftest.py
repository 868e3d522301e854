import numpy as np
import pytest

from jointlabor.model import ModelParams
from jointlabor.population import PopulationConfig, SimulatedPopulation, CoupleDraws, simulate
from jointlabor.solver import E_F, E_M, H_F, H_M, N_FIELDS, UTIL, Mode


@pytest.fixture(scope="session")
def params():
    return ModelParams()


@pytest.fixture(scope="session")
def small_pop(params):
    return simulate(params, PopulationConfig(3000, seed=11))


def synthetic_population(alloc_rows, prob):
    """Population from hand-built allocation rows (n, 9, N_FIELDS) and probabilities."""
    alloc_rows = np.asarray(alloc_rows, dtype=float)
    prob = np.asarray(prob, dtype=float)
    n = prob.shape[0]
    couples = CoupleDraws(np.ones(n), np.ones(n), np.full(n, 0.1))
    return SimulatedPopulation(couples, alloc_rows, prob, ModelParams(), Mode())


def filled_alloc(n, h_m=0.5, h_f=0.3, e_m=1.0, e_f=0.5):
    a = np.zeros((n, 9, N_FIELDS))
    for k in range(9):
        jm, jf = divmod(k, 3)
        if jm != 2:
            a[:, k, H_M] = h_m
            a[:, k, E_M] = e_m
        if jf != 2:
            a[:, k, H_F] = h_f
            a[:, k, E_F] = e_f
        a[:, k, UTIL] = -1.0
    return a

from math import pi, sqrt

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from pfaffwalk import (BulkPfaffianKernel, ContinuumPfaffianKernel, LatticePfaffianKernel,
                       MonteCarloCorrelation)
from pfaffwalk import lattice_sim as ls


@pytest.mark.parametrize("est", [LatticePfaffianKernel(), BulkPfaffianKernel(),
                                 ContinuumPfaffianKernel(), MonteCarloCorrelation()])
def test_unfitted_predict_raises(est):
    with pytest.raises(NotFittedError):
        est.predict([[0]])


def test_params_and_clone():
    est = LatticePfaffianKernel(t=0.3, theta=0.5, boundary="killed")
    params = est.get_params()
    assert params["t"] == 0.3 and params["boundary"] == "killed"
    twin = clone(est)
    assert twin.get_params() == params and twin is not est
    est.set_params(theta=0.25)
    assert est.theta == 0.25 and twin.theta == 0.5


def test_fit_returns_self_and_accepts_bare_occupancy():
    est = LatticePfaffianKernel(t=0.5, theta=0.5, x_min=-3)
    assert est.fit(np.ones(7, dtype=np.int8)) is est
    assert est.configuration_.x_min == -3
    ref = LatticePfaffianKernel(t=0.5, theta=0.5).fit(ls.Configuration.full(-3, 3))
    assert np.allclose(est.predict(np.arange(-3, 4)), ref.predict(np.arange(-3, 4)), atol=1e-15)


def test_lattice_predict_against_exact():
    eta = ls.Configuration.full(0, 5)
    est = LatticePfaffianKernel(t=0.7, theta=1.0).fit(eta)
    prob, states = ls.exact_distribution(eta, ls.RateProfile.homogeneous(0, 5, 1.0), 0.7)
    sets = [[1], [2, 4], [0, 3, 5]]
    exact = [prob @ states[:, s].prod(axis=1) for s in sets]
    assert np.allclose(est.predict(sets), exact, atol=1e-6)
    assert est.gap([2, 3]) == pytest.approx(prob @ (1 - states[:, [2, 3]]).prod(axis=1), abs=1e-6)


def test_alt_form_agrees():
    eta = ls.Configuration.full(0, 6)
    X = [[1, 2], [2, 5], [0, 3, 4]]
    std = LatticePfaffianKernel(t=0.4, theta=0.5).fit(eta).predict(X)
    alt = LatticePfaffianKernel(t=0.4, theta=0.5, form="alt").fit(eta).predict(X)
    assert np.allclose(std, alt, atol=1e-12)


def test_bulk_estimator_density_and_c():
    a = BulkPfaffianKernel(t=2.0, theta=0.5, x_min=-5, x_max=5, density=0.4).fit()
    b = BulkPfaffianKernel(t=2.0, theta=0.5, x_min=-5, x_max=5, c=1 - 1.5 * 0.4).fit()
    assert np.allclose(a.predict([[0], [0, 1]]), b.predict([[0], [0, 1]]), atol=1e-15)
    assert float(a.intensity(0)[0]) == pytest.approx(float(a.intensity(3)[0]), abs=1e-12)
    with pytest.raises(ValueError):
        BulkPfaffianKernel(c=0.1, density=0.2).fit()


def test_continuum_estimator():
    est = ContinuumPfaffianKernel("bulk", t=0.25, theta=1.0).fit()
    assert float(est.intensity(0.0)) == pytest.approx(1 / (2 * sqrt(2 * pi * 0.25)))
    rho2 = est.predict([[0.0, 1.0]])[0]
    assert 0 < rho2 < float(est.intensity(0.0)) ** 2
    assert 0 < est.gap((0.0, 1.0)) < 1
    with pytest.raises(ValueError):
        ContinuumPfaffianKernel(t=0.0).fit()


def test_monte_carlo_against_kernel():
    eta = ls.Configuration.full(0, 9, "truncated")
    mc = MonteCarloCorrelation(t=0.5, theta=1.0, n_trajectories=20_000, seed=5,
                               boundary="truncated").fit(eta)
    pk = LatticePfaffianKernel(t=0.5, theta=1.0).fit(eta)
    X = [[4], [4, 5], [2, 6]]
    mean, se = mc.predict_with_error(X)
    assert np.array_equal(mc.predict(X), mean)
    assert np.all(np.abs(mean - pk.predict(X)) <= 4 * se)


def test_monte_carlo_is_seeded():
    eta = ls.Configuration.full(0, 9)
    a = MonteCarloCorrelation(t=0.5, n_trajectories=500, seed=9).fit(eta).predict([[3]])
    b = MonteCarloCorrelation(t=0.5, n_trajectories=500, seed=9).fit(eta).predict([[3]])
    assert np.array_equal(a, b)

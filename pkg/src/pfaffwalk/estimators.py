"""Estimator-style front ends (``fit`` / ``predict``) over the functional core.

``fit`` fixes the initial data (a Configuration, or nothing for maximal
entrance laws) and does the expensive work; ``predict`` maps point sets to
product expectations.  Point sets are rows of a 2-D array, or a list of
sequences of possibly different lengths.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import kernel_engine as ke
from . import lattice_sim as ls
from . import stats
from .continuum import ContinuumKernel
from ._validation import check_nonnegative_int, check_reals, check_sites, check_theta, check_time

__all__ = [
    "LatticePfaffianKernel",
    "BulkPfaffianKernel",
    "ContinuumPfaffianKernel",
    "MonteCarloCorrelation",
]


def _point_sets(X):
    if isinstance(X, np.ndarray) and X.ndim == 1:
        return [X[i:i + 1] for i in range(X.size)]
    return [np.atleast_1d(np.asarray(row)) for row in X]


def _as_configuration(X, x_min, boundary):
    if isinstance(X, ls.Configuration):
        return X
    occ = np.asarray(X)
    if occ.ndim != 1:
        raise ValueError("expected a Configuration or a 1-D 0/1 occupancy array")
    return ls.Configuration(x_min, occ, boundary)


class _KernelPredictor(BaseEstimator):
    """Shared ``predict`` for fitted lattice kernels (``matrix_kernel_``)."""

    def predict(self, X):
        """Correlations ``E[prod eta_t(x)]`` for each point set in ``X``."""
        check_is_fitted(self, "matrix_kernel_")
        return np.array([ke.predict_correlation(self.matrix_kernel_, pts) for pts in _point_sets(X)])

    def intensity(self, x):
        check_is_fitted(self, "matrix_kernel_")
        return self.matrix_kernel_.intensity(check_sites(np.atleast_1d(x), distinct=False))

    def spin_product(self, y):
        check_is_fitted(self, "kernel_")
        return ke.predict_spin_product(self.kernel_, y)

    def gap(self, sites):
        check_is_fitted(self, "matrix_kernel_")
        return stats.gap_probability_lattice(self.matrix_kernel_, sites)


class LatticePfaffianKernel(_KernelPredictor):
    """Lattice kernel from the dual ODE on a finite window.

    Parameters
    ----------
    t, theta : float
    boundary : {'truncated', 'killed', 'reflected'}
    rate : float
        Homogeneous jump rate, used when ``rates`` is None; killed and
        reflected windows use the corresponding boundary profiles.
    rates : RateProfile, optional
    x_min : int
        Left end when ``fit`` receives a bare occupancy array.
    form : {'standard', 'alt'}
    dt : float, optional
    """

    def __init__(self, t=1.0, theta=1.0, boundary="truncated", rate=1.0, rates=None,
                 x_min=0, form="standard", dt=None):
        self.t = t
        self.theta = theta
        self.boundary = boundary
        self.rate = rate
        self.rates = rates
        self.x_min = x_min
        self.form = form
        self.dt = dt

    def _profile(self, eta):
        if self.rates is not None:
            if not np.isclose(self.rates.theta, self.theta):
                return self.rates.with_theta(self.theta)
            return self.rates
        if eta.boundary == "killed":
            return ls.RateProfile.killed(eta.x_max, self.theta, self.rate)
        if eta.boundary == "reflected":
            return ls.RateProfile.reflected(eta.x_max, self.theta, self.rate)
        return ls.RateProfile.homogeneous(eta.x_min, eta.x_max, self.theta, self.rate)

    def fit(self, X, y=None, initial=None):
        """Solve for the initial configuration ``X``; ``initial`` overrides its spin data."""
        check_theta(self.theta)
        check_time(self.t)
        eta = _as_configuration(X, self.x_min, self.boundary)
        self.configuration_ = eta
        self.kernel_ = ke.solve_scalar_kernel(eta, self._profile(eta), self.t, dt=self.dt,
                                              initial=initial)
        build = ke.alt_matrix_kernel if self.form == "alt" else ke.assemble_matrix_kernel
        self.matrix_kernel_ = build(self.kernel_)
        return self


class BulkPfaffianKernel(_KernelPredictor):
    """Translation-invariant kernel on ``Z`` for ``K_0(y, z) = c**(z - y)``.

    ``c=None`` means full occupancy (``c = -theta``); ``density`` gives
    i.i.d. Bernoulli data (``c = 1 - (1+theta) density``).
    """

    def __init__(self, t=1.0, theta=1.0, x_min=-50, x_max=50, c=None, density=None,
                 rate=1.0, dt=None):
        self.t = t
        self.theta = theta
        self.x_min = x_min
        self.x_max = x_max
        self.c = c
        self.density = density
        self.rate = rate
        self.dt = dt

    def fit(self, X=None, y=None):
        theta = check_theta(self.theta)
        if self.c is not None and self.density is not None:
            raise ValueError("give at most one of c and density")
        if self.density is not None:
            c = 1.0 - (1.0 + theta) * float(self.density)
        else:
            c = -theta if self.c is None else float(self.c)
        self.kernel_ = ke.solve_bulk_kernel(c, theta, self.t, self.x_min, self.x_max,
                                            dt=self.dt, rate=self.rate)
        self.matrix_kernel_ = ke.assemble_matrix_kernel(self.kernel_)
        return self


class ContinuumPfaffianKernel(BaseEstimator):
    """Closed-form maximal-entrance kernels on ``R`` or the half line."""

    def __init__(self, variant="bulk", t=1.0, theta=1.0, prefactor=None):
        self.variant = variant
        self.t = t
        self.theta = theta
        self.prefactor = prefactor

    def fit(self, X=None, y=None):
        check_time(self.t, strict=True)
        self.kernel_ = ContinuumKernel(self.variant, float(self.t), check_theta(self.theta),
                                       self.prefactor)
        return self

    def predict(self, X):
        """Correlation functions at each point set (distinct reals)."""
        check_is_fitted(self, "kernel_")
        return np.array([self.kernel_.correlation(check_reals(pts)) for pts in _point_sets(X)])

    def intensity(self, x):
        check_is_fitted(self, "kernel_")
        return self.kernel_.intensity(np.asarray(x, dtype=float))

    def gap(self, interval, nodes=None):
        check_is_fitted(self, "kernel_")
        return stats.gap_probability_continuum(self.kernel_, interval, nodes)


class MonteCarloCorrelation(BaseEstimator):
    """Monte Carlo product expectations from an ensemble of exact trajectories."""

    def __init__(self, t=1.0, theta=1.0, n_trajectories=10000, seed=0, boundary="periodic",
                 rate=1.0, rates=None, x_min=0, threads=None):
        self.t = t
        self.theta = theta
        self.n_trajectories = n_trajectories
        self.seed = seed
        self.boundary = boundary
        self.rate = rate
        self.rates = rates
        self.x_min = x_min
        self.threads = threads

    def fit(self, X, y=None):
        n = check_nonnegative_int(self.n_trajectories, "n_trajectories")
        eta = _as_configuration(X, self.x_min, self.boundary)
        if self.rates is not None:
            rates = self.rates.with_theta(self.theta)
        elif eta.boundary == "killed":
            rates = ls.RateProfile.killed(eta.x_max, self.theta, self.rate)
        elif eta.boundary == "reflected":
            rates = ls.RateProfile.reflected(eta.x_max, self.theta, self.rate)
        else:
            rates = ls.RateProfile.homogeneous(eta.x_min, eta.x_max, self.theta, self.rate)
        self.ensemble_ = ls.simulate_ensemble(eta, rates, self.t, n, self.seed, self.threads)
        return self

    def predict(self, X):
        mean, _ = self.predict_with_error(X)
        return mean

    def predict_with_error(self, X):
        check_is_fitted(self, "ensemble_")
        out = [ls.estimate_products(self.ensemble_, pts) for pts in _point_sets(X)]
        return np.array([m for m, _ in out]), np.array([s for _, s in out])

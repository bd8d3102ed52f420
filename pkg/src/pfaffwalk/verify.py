"""Self-check suites: each returns a list of :class:`Check` records."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from . import kernel_engine as ke
from . import lattice_sim as ls
from . import skewalg as sk
from .continuum import ContinuumKernel, scaling_compare
from .stats import fredholm_gap_estimate, gap_probability_continuum, gap_probability_lattice

__all__ = ["Check", "SUITES", "run_suite", "DEFAULT_TOLERANCES"]

DEFAULT_TOLERANCES = {
    "pfaffian": 1e-9,
    "duality": 1e-6,
    "scaling": 0.05,
    "gaps": 1e-6,
}


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self):
        return bool(np.isfinite(self.value) and self.value <= self.tolerance)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.value:.3e} (tol {self.tolerance:.1e})"


def pfaffian_suite(tol, seed=0, count=200):
    rng = np.random.default_rng(seed)
    det_err = lap_err = jcase_err = 0.0
    for m in range(count):
        order = 2 * (1 + m % 5)
        A = sk.SkewMatrix.random(order, rng)
        pf = sk.pfaffian(A)
        det = np.linalg.det(A.entries)
        det_err = max(det_err, abs(pf * pf - det) / max(abs(det), 1e-300))
        if order <= 8:
            lap = sk.pfaffian_laplace(A, row=m % order)
            lap_err = max(lap_err, abs(lap - pf) / max(1.0, abs(pf)))
            direct = sk.pfaffian(A.entries - sk.symplectic_J(order // 2))
            expanded = sk._pf_minus_J_by_subsets(A.entries)
            jcase_err = max(jcase_err, abs(direct - expanded) / max(1.0, abs(direct)))
    a = rng.uniform(0.5, 2.0, 8) * rng.choice([-1, 1], 8)
    quot = sk.pfaffian(sk.SkewMatrix(np.triu(np.outer(a, 1 / a), 1)))
    q_err = abs(quot - np.prod(a[0::2]) / np.prod(a[1::2])) / abs(quot)
    # The default tol = 1e-9 gives 1e-12 for the row expansion and 1e-10 for the identities.
    return [
        Check("Pf^2 = det (relative)", det_err, tol),
        Check("Laplace vs Parlett-Reid", lap_err, tol * 1e-3),
        Check("quotient identity", q_err, tol * 0.1),
        Check("Pf(A - J) subset expansion", jcase_err, tol * 0.1),
    ]


def duality_suite(tol, t=1.0, sites=10, seed=0):
    rng = np.random.default_rng(seed)
    checks = []
    initials = {
        "full": np.ones(sites, np.uint8),
        "alternating": (np.arange(sites) % 2 == 0).astype(np.uint8),
        "bernoulli": (rng.random(sites) < 0.5).astype(np.uint8),
    }
    for theta in (0.0, 0.5, 1.0):
        rates = ls.RateProfile.homogeneous(0, sites - 1, theta)
        for name, occ in initials.items():
            eta = ls.Configuration(0, occ)
            K = ke.solve_scalar_kernel(eta, rates, t)
            MK = ke.assemble_matrix_kernel(K)
            prob, states = ls.exact_distribution(eta, rates, t)
            worst = 0.0
            for n in (1, 2, 3):
                for pts in itertools.combinations(range(sites), n):
                    exact = float(prob @ states[:, list(pts)].prod(axis=1))
                    worst = max(worst, abs(ke.predict_correlation(MK, pts) - exact))
            cums = np.concatenate([np.zeros((states.shape[0], 1)), np.cumsum(states, 1)], 1)
            for y, z in itertools.combinations(range(sites + 1), 2):
                cnt = cums[:, z] - cums[:, y]
                spin = (cnt == 0).astype(float) if theta == 0 else (-theta) ** cnt
                worst = max(worst, abs(K(y, z) - float(prob @ spin)))
            checks.append(Check(f"ODE vs exact CTMC, theta={theta}, {name}", worst, tol))
    return checks


def scaling_suite(tol, t=0.25, theta=1.0, epsilons=(0.2, 0.1, 0.05)):
    grid = np.round(np.arange(0, 7) * 0.2, 10)
    cases = {"bulk": grid, "halfspace": np.round(grid - 0.8, 10),
             "killed": grid[1:], "reflected": grid}
    checks = []
    for variant, pts in cases.items():
        ck = ContinuumKernel(variant, t, theta)
        pairs = [(a, b) for a in pts for b in pts if a <= b]
        devs = []
        for eps in epsilons:
            devs.append(scaling_compare(lattice_kernel(variant, t / eps ** 2, theta,
                                                       int(round(np.max(np.abs(pts)) / eps)) + 1),
                                        ck, pairs, eps))
        order = np.polyfit(np.log(epsilons), np.log(devs), 1)[0]
        at = dict(zip(epsilons, devs)).get(0.1, devs[len(devs) // 2])
        checks.append(Check(f"{variant} deviation at eps=0.1", at, tol))
        checks.append(Check(f"{variant} convergence order >= 0.8 (shortfall)", max(0.0, 0.8 - order), 0.0))
    return checks


def lattice_kernel(variant, T, theta, sites):
    """Lattice matrix kernel for one of the four maximal-entrance examples at lattice time ``T``."""
    if variant == "bulk":
        K = ke.solve_bulk_kernel(-theta, theta, T, 0, sites)
    elif variant == "halfspace":
        K = ke.halfspace_kernel(T, theta, sites)
    elif variant == "killed":
        K = ke.killed_kernel(T, theta, sites)
    elif variant == "reflected":
        K = ke.reflected_kernel(T, theta, sites)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return ke.assemble_matrix_kernel(K)


def gaps_suite(tol, t=1.5, sites=12, theta=0.5):
    rates = ls.RateProfile.homogeneous(0, sites - 1, theta)
    eta = ls.Configuration.full(0, sites - 1)
    MK = ke.assemble_matrix_kernel(ke.solve_scalar_kernel(eta, rates, t))
    prob, states = ls.exact_distribution(eta, rates, t)
    worst = 0.0
    for pts in ([3], [2, 5], [4, 5, 6], [1, 3, 8, 9]):
        exact = float(prob @ (1 - states[:, pts]).prod(axis=1))
        worst = max(worst, abs(gap_probability_lattice(MK, pts) - exact))
    est = fredholm_gap_estimate(ContinuumKernel("bulk", 1.0, 1.0), (0.0, 4.0), rtol=np.inf)
    ck0 = ContinuumKernel("bulk", 1.0, 0.0)
    exact0 = float(erfc(2.0 / (2 * np.sqrt(2.0))))
    return [
        Check("lattice gap vs exact CTMC", worst, tol),
        Check("Fredholm node-doubling drift (relative)", est.drift / est.value, tol),
        Check("Fredholm theta=0 vs erfc", abs(gap_probability_continuum(ck0, (0.0, 2.0), rtol=np.inf) - exact0), tol),
    ]


SUITES = {
    "pfaffian": pfaffian_suite,
    "duality": duality_suite,
    "scaling": scaling_suite,
    "gaps": gaps_suite,
}


def run_suite(name, tolerance=None):
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    tol = DEFAULT_TOLERANCES[name] if tolerance is None else float(tolerance)
    return SUITES[name](tol)

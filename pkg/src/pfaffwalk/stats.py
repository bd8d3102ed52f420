"""Gap probabilities, right-most particle tails and the bulk decay constant.

For a Pfaffian point process with matrix kernel ``K`` the probability that
a set contains no particle is ``Pf(J - K)``: on the lattice ``K`` is the
``2n x 2n`` block matrix at the sites, in the continuum it is the kernel
sampled at Gauss-Legendre nodes with blocks scaled by ``sqrt(w_i w_j)``.
The continuum discretization converges like ``N**-2`` (the kernel has a
kink on the diagonal), so values are Richardson-extrapolated from ``N``,
``2N``, ``4N`` and ``8N`` nodes (error model ``N**-2, N**-3, N**-4``) and
checked against the lower-order extrapolation from ``2N``, ``4N``, ``8N``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import factorial, gamma, log, pi, sqrt

import numpy as np
from scipy import stats as sps
from scipy.special import zeta

from .continuum import ContinuumKernel
from .kernel_engine import MatrixKernel, gap_via_shift_J
from .quadrature import interval_nodes
from .skewalg import SkewMatrix, pfaffian, symplectic_J
from ._validation import NumericalError, check_probability, check_sites, check_theta

__all__ = [
    "GapEstimate",
    "DecayFit",
    "gap_probability_lattice",
    "gap_probability_continuum",
    "fredholm_gap_estimate",
    "fredholm_pfaffian",
    "rightmost_tail",
    "derrida_constant",
    "gap_asymptotic_check",
    "RATE_UNIT",
]

# sqrt(8 pi): converts a decay rate per unit (R - L)/sqrt(t) into the units of A(theta).
RATE_UNIT = sqrt(8.0 * pi)
PROB_SLACK = 1e-9
INCLUSION_EXCLUSION_MAX = 6
TAIL_WIDTH = 12.0


def gap_probability_lattice(MK, sites, check=True, rtol=1e-9):
    """``P[eta_t(x) = 0 for all x in sites]`` as ``Pf(J - K(x_i, x_j))``.

    With ``check`` the value is compared with inclusion-exclusion over the
    correlation Pfaffians (``n <= 6``) and, for the standard kernel, with the
    scalar form ``(1+theta)^-n Pf(K^(2n)(x1, x1+1, ...) + theta J)``.

    Raises
    ------
    NumericalError
        On disagreement, or if the value leaves ``[-1e-9, 1 + 1e-9]``.
    """
    x = np.sort(check_sites(sites, distinct=True, name="sites"))
    n = x.size
    if n > 200:
        raise ValueError("at most 200 sites")
    A = MK.matrix(x)
    value = pfaffian(SkewMatrix(symplectic_J(n) - A))
    if check:
        refs = []
        if n <= INCLUSION_EXCLUSION_MAX:
            total = 1.0
            for m in range(1, n + 1):
                for S in combinations(range(n), m):
                    idx = np.array([[2 * s, 2 * s + 1] for s in S]).ravel()
                    total += (-1) ** m * pfaffian(SkewMatrix(A[np.ix_(idx, idx)]))
            refs.append(("inclusion-exclusion", total))
        if MK.form == "standard" and np.isclose(MK.prefactor, 1.0 / (1.0 + MK.theta), rtol=0, atol=1e-15):
            refs.append(("scalar Pfaffian", gap_via_shift_J(MK.scalar, x)))
        for name, ref in refs:
            if abs(ref - value) > rtol * max(1.0, abs(value)):
                raise NumericalError(f"gap probability {value!r} disagrees with {name} value {ref!r}")
    return check_probability(value, PROB_SLACK, "gap probability")


def fredholm_pfaffian(CK, lo, hi, nodes, panels=1):
    """``Pf(J - M)`` on ``nodes`` Gauss-Legendre points per panel of ``[lo, hi]``."""
    x, w = interval_nodes(lo, hi, nodes, panels)
    M = CK.matrix(x, w)
    return pfaffian(SkewMatrix(symplectic_J(x.size) - M))


def _richardson(values, levels):
    # p_N = p + a N^-2 + b N^-3 (+ c N^-4 with four levels)
    N = np.asarray(levels, dtype=float)
    A = N[:, None] ** -(np.arange(N.size) + 1.0)
    A[:, 0] = 1.0
    return float(np.linalg.solve(A, values)[0])


@dataclass(frozen=True)
class GapEstimate:
    value: float
    reference: float
    drift: float
    nodes: tuple
    raw: tuple

    @property
    def log_value(self):
        return log(self.value) if self.value > 0 else -np.inf


def _default_nodes(CK, lo, hi):
    # About four nodes per sqrt(t) at the coarsest level.
    n = int(np.ceil(4.0 * (hi - lo) / sqrt(CK.t)))
    return max(16, n + n % 2)


def fredholm_gap_estimate(CK, interval, nodes=None, rtol=1e-6):
    """Extrapolated Fredholm Pfaffian with its node-doubling drift.

    Raises
    ------
    NumericalError
        If the four-level extrapolation from ``(N, 2N, 4N, 8N)`` and the
        three-level one from ``(2N, 4N, 8N)`` differ by more than ``rtol``
        relative (both values are reported).
    """
    lo, hi = map(float, interval)
    if not lo <= hi:
        raise ValueError(f"need L <= R, got [{lo}, {hi}]")
    if CK.lower is not None and lo < CK.lower:
        raise ValueError(f"interval starts below the kernel domain ({CK.lower})")
    if nodes is None:
        nodes = _default_nodes(CK, lo, hi)
    nodes = int(nodes)
    if nodes < 16 or nodes % 2:
        raise ValueError("nodes must be even and at least 16")
    if hi == lo:
        return GapEstimate(1.0, 1.0, 0.0, (nodes,), (1.0,))
    levels = [nodes * 2 ** k for k in range(4)]
    raw = [fredholm_pfaffian(CK, lo, hi, m) for m in levels]
    best = _richardson(raw, levels)
    coarse = _richardson(raw[1:], levels[1:])
    drift = abs(best - coarse)
    if drift > rtol * max(abs(best), 1e-300):
        raise NumericalError(
            f"Fredholm Pfaffian not converged: {best!r} from {levels} nodes vs "
            f"{coarse!r} from {levels[1:]} nodes")
    value = check_probability(best, PROB_SLACK, "gap probability")
    return GapEstimate(value, coarse, drift, tuple(levels), tuple(raw))


def gap_probability_continuum(CK, interval, nodes=None, rtol=1e-6):
    """``P[no particle in [L, R]]`` for a continuum kernel."""
    return fredholm_gap_estimate(CK, interval, nodes, rtol).value


def rightmost_tail(CK, L, nodes=None, rtol=1e-6, width=TAIL_WIDTH):
    """``P[no particle in [L, inf)]`` for the half-space kernel.

    The interval is cut at ``L + width * sqrt(t)``; the neglected expected
    particle number beyond is below ``1e-30`` for the default width.
    """
    if CK.variant != "halfspace":
        raise ValueError("right-most particle tail needs the half-space kernel")
    L = float(L)
    hi = max(L, 0.0) + width * sqrt(CK.t)
    return gap_probability_continuum(CK, (L, hi), nodes, rtol)


def _polylog_32(r):
    """``Li_{3/2}(r)`` for ``0 <= r <= 1``."""
    if r == 0.0:
        return 0.0
    if r == 1.0:
        return float(zeta(1.5))
    if r <= 0.75:
        total, n, term = 0.0, 1, r
        while term > 0.0 and term >= 1e-17 * (total + term):
            total += term
            n += 1
            term = r ** n / n ** 1.5
        return total
    # Li_s(e^mu) = Gamma(1-s)(-mu)^(s-1) + sum_k zeta(s-k) mu^k / k!, |mu| < 2 pi.
    mu = log(r)
    total = gamma(-0.5) * sqrt(-mu)
    for k in range(60):
        term = float(zeta(1.5 - k)) * mu ** k / factorial(k)
        total += term
        if k > 2 and abs(term) < 1e-18:
            break
    return total


def derrida_constant(theta):
    """``A(theta) = (1+theta)/4 * sum_{n>=1} n^{-3/2} (4 theta/(1+theta)^2)^n``."""
    theta = check_theta(theta)
    r = 4.0 * theta / (1.0 + theta) ** 2
    return 0.25 * (1.0 + theta) * _polylog_32(min(r, 1.0))


@dataclass(frozen=True)
class DecayFit:
    """Linear fit of ``log p`` against the scaled length ``(R - L)/sqrt(t)``."""

    theta: float
    t: float
    lengths: np.ndarray
    log_p: np.ndarray
    rate: float
    stderr: float
    fitted_from: int

    @property
    def normalized_rate(self):
        """Rate in the units of :func:`derrida_constant`."""
        return RATE_UNIT * self.rate

    @property
    def target(self):
        return derrida_constant(self.theta)

    @property
    def relative_error(self):
        A = self.target
        return abs(self.normalized_rate - A) / A if A > 0 else np.inf

    def interval(self, level=0.95):
        """Confidence interval for the normalized rate."""
        dof = max(1, self.lengths.size - self.fitted_from - 2)
        h = sps.t.ppf(0.5 + level / 2, dof) * self.stderr * RATE_UNIT
        return self.normalized_rate - h, self.normalized_rate + h


def gap_asymptotic_check(theta, t=1.0, lengths=(2, 4, 6, 8, 10, 12), nodes=None, rtol=1e-6):
    """Fit the exponential decay rate of bulk gap probabilities.

    ``lengths`` are in units of ``sqrt(t)``; the shortest third is dropped
    before a least-squares fit of ``log p``.  Returns a :class:`DecayFit`.
    """
    theta = check_theta(theta)
    lengths = np.sort(np.asarray(lengths, dtype=float))
    if lengths.size < 3:
        raise ValueError("need at least three lengths")
    CK = ContinuumKernel("bulk", float(t), theta)
    s = sqrt(t)
    logp = []
    for ell in lengths:
        p = gap_probability_continuum(CK, (0.0, ell * s), nodes, rtol)
        if p <= 0:
            raise NumericalError(f"gap probability {p!r} at length {ell} is not positive")
        logp.append(log(p))
    logp = np.array(logp)
    k = lengths.size // 3
    if lengths.size - k < 2:
        raise ValueError("too few lengths left after dropping the shortest third")
    fit = sps.linregress(lengths[k:], logp[k:])
    return DecayFit(theta, float(t), lengths, logp, -float(fit.slope), float(fit.stderr), k)

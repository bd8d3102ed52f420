"""Scalar kernel ``K_t(y,z) = E[sigma_{y,z}(eta_t)]`` and the lattice matrix kernels.

The scalar kernel solves ``dK/dt = (L_y + L_z) K`` on ``y < z`` with the
diagonal pinned at 1, where ``L f(x) = q_x (f(x+1) - f(x)) + p_x (f(x-1) - f(x))``.
On a window ``[x_min, x_max]`` the grid is ``y, z in [x_min, x_max + 1]``
(``z = x_max + 1`` closes intervals at the right edge).  With the boundary
rates of ``RateProfile.effective`` the system is closed, so the solution is
exact for the truncated particle system; for data on all of ``Z`` choose the
window with :func:`required_buffer` sites to spare on each side.

Translation-invariant data ``K_0(y,z) = c**(z-y)`` with unit rates reduce to
``k(d) = K(y, y+d)`` solving ``dk/dt = 2 (k(d+1) + k(d-1) - 2 k(d))``,
``k(0) = 1``; see :func:`solve_bulk_kernel`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.stats import skellam

from .lattice_sim import Configuration, RateProfile
from .skewalg import SkewMatrix, pfaffian, pf_minus_J, pf_shift_J
from ._validation import (NumericalError, check_sites, check_theta, check_time)

__all__ = [
    "ScalarKernel",
    "MatrixKernel",
    "dual_generator",
    "bernoulli_initial",
    "sigma_initial",
    "required_buffer",
    "solve_scalar_kernel",
    "solve_bulk_kernel",
    "assemble_matrix_kernel",
    "alt_matrix_kernel",
    "predict_spin_product",
    "predict_correlation",
    "halfspace_kernel",
    "killed_kernel",
    "reflected_kernel",
]

CFL = 0.1
BOUND_SLACK = 1e-9


def dual_generator(f, q, p):
    """``L f`` on ``[x_min, x_max + 1]``.

    ``f`` carries one ghost value each side (length ``len(q) + 2``); ``q`` and
    ``p`` are the dual rates at the interior points.  A ghost may be NaN only
    if the rate that would read it is zero.
    """
    f = np.asarray(f, dtype=float)
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if q.shape != p.shape or f.shape != (q.size + 2,):
        raise ValueError(f"need len(f) == len(q) + 2, got {f.shape} and {q.shape}")
    if (np.isnan(f[0]) and p[0] != 0.0) or (np.isnan(f[-1]) and q[-1] != 0.0):
        raise ValueError("ghost value needed but missing")
    mid = f[1:-1]
    up = np.where(q != 0.0, q * (f[2:] - mid), 0.0)
    down = np.where(p != 0.0, p * (f[:-2] - mid), 0.0)
    return up + down


def bernoulli_initial(p, theta):
    """``Phi(y, z) = prod_{k in [y, z)} (1 - (1+theta) p_k)`` on the ``(W+1)**2`` grid.

    Entry ``[i, j]`` is ``Phi(x_min + i, x_min + j)`` for ``i <= j``; the strict
    lower triangle is zero.
    """
    theta = check_theta(theta)
    p = np.asarray(p, dtype=float).ravel()
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("site probabilities must lie in [0, 1]")
    f = 1.0 - (1.0 + theta) * p
    M = p.size + 1
    phi = np.zeros((M, M))
    for i in range(M):
        phi[i, i] = 1.0
        phi[i, i + 1:] = np.cumprod(f[i:])
    return phi


def sigma_initial(eta, theta):
    """``sigma_{y,z}(eta)`` on the grid; the deterministic case of :func:`bernoulli_initial`."""
    return bernoulli_initial(eta.occupancy.astype(float), theta)


def required_buffer(t, tol=1e-10, rate=1.0):
    """Sites of margin so that a wall changes any kernel value by at most ``tol``.

    A dual coordinate is a rate-``rate`` symmetric walk, Skellam at time ``t``;
    by the reflection principle the chance that either coordinate reaches
    ``B`` sites within time ``t`` is at most ``4 P(S_t >= B)``, and a kernel
    value moves by at most twice that.
    """
    t = check_time(t)
    if t == 0.0:
        return 1
    mu = rate * t
    B = max(1, int(np.ceil(np.sqrt(2 * mu))))
    while 8.0 * skellam.sf(B - 1, mu, mu) > tol:
        B = int(B * 1.25) + 1
    lo = B // 2
    while lo < B:
        mid = (lo + B) // 2
        if 8.0 * skellam.sf(mid - 1, mu, mu) > tol:
            lo = mid + 1
        else:
            B = mid
    return B


@dataclass(frozen=True)
class ScalarKernel:
    """Solved ``K_t(y, z)`` on the grid ``[x_min, x_min + M - 1]**2`` (``y <= z``)."""

    x_min: int
    values: np.ndarray
    t: float
    theta: float
    variant: str = "free"
    label: str = "free"

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] < 2:
            raise ValueError("values must be a square grid of size >= 2")
        if self.variant not in ("free", "killed", "reflected"):
            raise ValueError(f"unknown variant {self.variant!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def size(self):
        """Grid points ``M``; sites with full matrix-kernel support are ``M - 1``."""
        return self.values.shape[0]

    @property
    def x_max(self):
        """Largest site for which matrix-kernel blocks are defined."""
        return self.x_min + self.size - 2

    def _idx(self, x):
        i = np.asarray(x, dtype=np.int64) - self.x_min
        if np.any(i < 0) or np.any(i >= self.size):
            raise IndexError(f"points outside the kernel grid [{self.x_min}, {self.x_min + self.size - 1}]")
        return i

    def __call__(self, y, z):
        """``K_t(y, z)`` for ``y <= z`` (broadcast)."""
        y, z = np.broadcast_arrays(np.asarray(y), np.asarray(z))
        if np.any(y > z):
            raise ValueError("scalar kernel needs y <= z")
        out = self.values[self._idx(y), self._idx(z)]
        return float(out) if out.ndim == 0 else out

    def upper(self):
        """Grid values with the strict lower triangle zeroed."""
        return np.triu(self.values)

    def max_abs(self):
        return float(np.max(np.abs(self.upper())))


@njit(cache=True)
def _rhs(K, q, p, out):
    M = K.shape[0]
    for i in range(M):
        out[i, i] = 0.0
        for j in range(i + 1, M):
            k = K[i, j]
            acc = q[i] * (K[i + 1, j] - k) + q[j] * (K[i, j + 1] - k if j + 1 < M else 0.0)
            if i > 0:
                acc += p[i] * (K[i - 1, j] - k)
            acc += p[j] * (K[i, j - 1] - k)
            out[i, j] = acc


@njit(cache=True)
def _rk4(K, q, p, dt, steps):
    M = K.shape[0]
    k1 = np.zeros((M, M))
    k2 = np.zeros((M, M))
    k3 = np.zeros((M, M))
    k4 = np.zeros((M, M))
    tmp = np.empty((M, M))
    worst = 0.0
    for _ in range(steps):
        _rhs(K, q, p, k1)
        for i in range(M):
            for j in range(i, M):
                tmp[i, j] = K[i, j] + 0.5 * dt * k1[i, j]
        _rhs(tmp, q, p, k2)
        for i in range(M):
            for j in range(i, M):
                tmp[i, j] = K[i, j] + 0.5 * dt * k2[i, j]
        _rhs(tmp, q, p, k3)
        for i in range(M):
            for j in range(i, M):
                tmp[i, j] = K[i, j] + dt * k3[i, j]
        _rhs(tmp, q, p, k4)
        for i in range(M):
            for j in range(i + 1, M):
                v = K[i, j] + dt / 6.0 * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
                K[i, j] = v
                if abs(v) > worst:
                    worst = abs(v)
    return worst


def _steps(t, rate, dt):
    # Largest total rate at a grid point is twice the largest per-site rate.
    limit = CFL / rate if rate > 0 else np.inf
    h = min(limit, np.inf if dt is None else float(dt))
    if not np.isfinite(h):
        return 1, t
    n = max(1, int(np.ceil(t / h)))
    return n, t / n


def _variant_for(boundary):
    if boundary == "periodic":
        raise ValueError("the dual ODE does not close on a periodic window; "
                         "use a truncated window with a buffer or solve_bulk_kernel")
    return {"truncated": "free", "killed": "killed", "reflected": "reflected"}[boundary]


def solve_scalar_kernel(eta0, rates, t, dt=None, initial=None, label=None):
    """Integrate the lattice ODE on the window of ``eta0`` up to time ``t``.

    ``initial`` overrides the deterministic data ``sigma_{y,z}(eta0)``, e.g.
    with :func:`bernoulli_initial`.  Explicit RK4 with step at most
    ``0.1 / max_total_rate``.

    Raises
    ------
    NumericalError
        If the solution leaves ``[-1, 1]`` (stability audit).
    """
    t = check_time(t)
    rates.check_matches(eta0)
    variant = _variant_for(eta0.boundary)
    theta = rates.theta
    q, p = rates.effective(eta0.boundary)
    K = sigma_initial(eta0, theta) if initial is None else np.array(initial, dtype=float)
    M = rates.size + 1
    if K.shape != (M, M):
        raise ValueError(f"initial data must have shape {(M, M)}, got {K.shape}")
    K = np.triu(K)
    np.fill_diagonal(K, 1.0)
    if t > 0:
        steps, h = _steps(t, 2.0 * float(np.max(q + p)), dt)
        worst = _rk4(K, np.ascontiguousarray(q), np.ascontiguousarray(p), h, steps)
        if worst > 1.0 + BOUND_SLACK:
            raise NumericalError(f"kernel left [-1, 1] (max |K| = {worst:.3g}); reduce dt")
    return ScalarKernel(eta0.x_min, K, t, theta, variant, label or variant)


@njit(cache=True)
def _rk4_line(k, rate, dt, steps):
    D = k.shape[0]
    s1 = np.zeros(D)
    s2 = np.zeros(D)
    s3 = np.zeros(D)
    s4 = np.zeros(D)
    tmp = k.copy()
    for _ in range(steps):
        for stage in range(4):
            src = k if stage == 0 else tmp
            dst = s1 if stage == 0 else (s2 if stage == 1 else (s3 if stage == 2 else s4))
            for d in range(1, D - 1):
                dst[d] = 2.0 * rate * (src[d + 1] + src[d - 1] - 2.0 * src[d])
            if stage < 3:
                c = 0.5 * dt if stage < 2 else dt
                for d in range(1, D - 1):
                    tmp[d] = k[d] + c * dst[d]
        for d in range(1, D - 1):
            k[d] += dt / 6.0 * (s1[d] + 2.0 * s2[d] + 2.0 * s3[d] + s4[d])


def solve_bulk_kernel(c, theta, t, x_min, x_max, dt=None, rate=1.0, tol=1e-10):
    """Translation-invariant kernel for ``K_0(y, z) = c**(z - y)`` on all of ``Z``.

    ``c = -theta`` is full occupancy, ``c = 1 - (1+theta) p`` i.i.d.
    Bernoulli(``p``) and ``c = 0`` the maximal entrance law.  The 1-D line is
    cut ``required_buffer`` sites beyond the largest needed separation and held
    at its initial value there.  Returns a ScalarKernel on ``[x_min, x_max]``.
    """
    theta = check_theta(theta)
    t = check_time(t)
    c = float(c)
    if abs(c) > 1.0:
        raise ValueError("|c| must not exceed 1")
    span = x_max - x_min + 1
    D = span + 1 + required_buffer(2 * t, tol, rate)
    k = c ** np.arange(D, dtype=float)
    k[0] = 1.0
    if t > 0:
        steps, h = _steps(t, 4.0 * rate, dt)
        _rk4_line(k, float(rate), h, steps)
    if np.max(np.abs(k)) > 1.0 + BOUND_SLACK:
        raise NumericalError("bulk kernel left [-1, 1]; reduce dt")
    d = np.arange(span + 1)
    grid = np.where(d[None, :] >= d[:, None], k[np.clip(d[None, :] - d[:, None], 0, None)], 0.0)
    return ScalarKernel(x_min, grid, t, theta, "free", "bulk")


def halfspace_kernel(t, theta, sites, tol=1e-10, dt=None):
    """Kernel for ``eta_0 = 1{x <= 0}`` on ``Z``, covering ``[-sites, sites]`` plus buffer."""
    B = required_buffer(t, tol)
    lo, hi = -sites - B, sites + B
    eta = Configuration.from_sites(range(lo, 1), lo, hi)
    return solve_scalar_kernel(eta, RateProfile.homogeneous(lo, hi, theta), t, dt=dt,
                               label="halfspace")


def killed_kernel(t, theta, sites, tol=1e-10, dt=None):
    """Killed-at-zero kernel for ``eta_0 = 1{x >= 1}``, covering ``[0, sites]`` plus buffer."""
    hi = sites + required_buffer(t, tol)
    eta = Configuration(0, np.r_[0, np.ones(hi, np.uint8)], "killed")
    return solve_scalar_kernel(eta, RateProfile.killed(hi, theta), t, dt=dt)


def reflected_kernel(t, theta, sites, tol=1e-10, dt=None):
    """Reflected-at-zero kernel for ``eta_0 = 1{x >= 0}``, covering ``[0, sites]`` plus buffer."""
    hi = sites + required_buffer(t, tol)
    eta = Configuration.full(0, hi, "reflected")
    return solve_scalar_kernel(eta, RateProfile.reflected(hi, theta), t, dt=dt)


@dataclass(frozen=True)
class MatrixKernel:
    """2x2-block Pfaffian kernel built from a ScalarKernel.

    ``form='standard'`` gives ``lam * [[K, -D2 K], [-D1 K, D1 D2 K]]`` and
    ``form='alt'`` gives ``-lam * [[K(y,z), K(y,z+1)], [K(y+1,z), K(y+1,z+1)]]``,
    both for ``y < z``, with ``lam = 1/(1+theta)`` unless overridden (thinning).
    """

    scalar: ScalarKernel
    prefactor: float
    form: str = "standard"

    def __post_init__(self):
        if self.form not in ("standard", "alt"):
            raise ValueError(f"unknown form {self.form!r}")

    @property
    def variant(self):
        return self.scalar.label

    @property
    def theta(self):
        return self.scalar.theta

    def _upper_blocks(self, y, z):
        K = self.scalar.values
        i, j = self.scalar._idx(y), self.scalar._idx(z)
        if np.any(i >= self.scalar.size - 1) or np.any(j >= self.scalar.size - 1):
            raise IndexError("matrix kernel needs one grid point beyond each site")
        a, b = K[i, j], K[i, j + 1]
        c = np.where(i + 1 <= j, K[np.minimum(i + 1, j), j], 0.0)
        d = K[i + 1, j + 1]
        out = np.empty(np.shape(a) + (2, 2))
        if self.form == "standard":
            out[..., 0, 0] = a
            out[..., 0, 1] = -(b - a)
            out[..., 1, 0] = -(c - a)
            out[..., 1, 1] = d - c - b + a
            return self.prefactor * out
        out[..., 0, 0] = a
        out[..., 0, 1] = b
        out[..., 1, 0] = c
        out[..., 1, 1] = d
        return -self.prefactor * out

    def blocks(self, y, z):
        """Blocks at integer pairs, shape ``broadcast(y, z).shape + (2, 2)``."""
        y, z = np.broadcast_arrays(np.asarray(y, dtype=np.int64), np.asarray(z, dtype=np.int64))
        lo, hi = np.minimum(y, z), np.maximum(y, z)
        out = self._upper_blocks(lo, hi)
        swap = y > z
        if np.any(swap):
            # K_ij(y, z) = -K_ji(z, y)
            out[swap] = -np.swapaxes(out[swap], -1, -2)
        diag = y == z
        if np.any(diag):
            K = self.scalar.values
            i = self.scalar._idx(y[diag])
            k12 = self.prefactor * (1.0 - K[i, i + 1])
            blk = np.zeros(k12.shape + (2, 2))
            blk[..., 0, 1] = k12
            blk[..., 1, 0] = -k12
            out[diag] = blk
        return out

    def intensity(self, x):
        """One-point function ``K_12(x, x)``."""
        return self.blocks(x, x)[..., 0, 1]

    def matrix(self, points):
        x = np.asarray(points, dtype=np.int64)
        B = self.blocks(x[:, None], x[None, :])
        n = x.size
        return B.transpose(0, 2, 1, 3).reshape(2 * n, 2 * n)

    def correlation(self, points):
        return predict_correlation(self, points)


def assemble_matrix_kernel(K, prefactor=None):
    """Standard block kernel; ``prefactor`` defaults to ``1/(1+theta)``."""
    lam = 1.0 / (1.0 + K.theta) if prefactor is None else float(prefactor)
    return MatrixKernel(K, lam, "standard")


def alt_matrix_kernel(K, prefactor=None):
    """Kernel with blocks ``-lam * K`` at the four shifted corners."""
    lam = 1.0 / (1.0 + K.theta) if prefactor is None else float(prefactor)
    return MatrixKernel(K, lam, "alt")


def predict_spin_product(K, y):
    """``E[prod_i sigma_{y_{2i-1}, y_{2i}}(eta_t)] = Pf(K_t(y_i, y_j))``."""
    y = check_sites(y, distinct=False, ordered=True, name="y")
    if y.size % 2:
        raise ValueError("need an even number of sites")
    A = np.triu(K(np.minimum(y[:, None], y[None, :]), np.maximum(y[:, None], y[None, :])), 1)
    return pfaffian(SkewMatrix(A))


def predict_correlation(MK, points):
    """``E[prod eta_t(x_i)] = Pf(K(x_i, x_j))`` for distinct sites."""
    x = check_sites(points, distinct=True)
    x = np.sort(x)
    return pfaffian(SkewMatrix(MK.matrix(x)))


def spin_matrix(K, y):
    """``K^(2n)(y)``: antisymmetric matrix with ``(i, j)`` entry ``K(y_i, y_j)``, ``i < j``."""
    y = np.asarray(y, dtype=np.int64)
    return SkewMatrix(np.triu(K(np.minimum(y[:, None], y[None, :]),
                                np.maximum(y[:, None], y[None, :])), 1))


def doubled_sites(points):
    x = np.sort(check_sites(points, distinct=True))
    return np.stack([x, x + 1], axis=1).ravel()


def correlation_via_minus_J(K, points, check=None):
    """``(-1)^n (1+theta)^-n Pf(K^(2n)(x1, x1+1, ...) - J)``."""
    y = doubled_sites(points)
    n = y.size // 2
    return (-1.0) ** n * (1.0 + K.theta) ** -n * pf_minus_J(spin_matrix(K, y), check=check)


def gap_via_shift_J(K, points):
    """``E[prod (1 - eta_t(x_i))] = (1+theta)^-n Pf(K^(2n) + theta J)``."""
    y = doubled_sites(points)
    n = y.size // 2
    return (1.0 + K.theta) ** -n * pf_shift_J(spin_matrix(K, y), K.theta)

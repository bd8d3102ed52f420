"""Closed-form continuum kernels for reacting Brownian motions.

Four scalar kernels ``K(y, z)`` (defined for ``y <= z``) under maximal
entrance laws:

``bulk``
    free motions on the line, everything initially occupied;
``halfspace``
    free motions on the line, initially occupied on the negative half-line;
``killed``
    motions on ``(0, inf)`` killed at the origin;
``reflected``
    motions on ``[0, inf)`` reflected at the origin.

Each kernel comes with analytic first and mixed second partials. For the
half-space and reflected kernels the inner integral of the double-integral
representation is done in closed form (integration by parts in the inner
variable), so ``K`` and ``dK/dy`` need one 1-D quadrature and ``dK/dz`` and
``d2K/dydz`` none.

The 2x2 matrix kernel built from ``K`` is

    (1/(1+theta)) [[K, -dK/dz], [-dK/dy, d2K/dydz]]      for y < z,

with ``K12(y, y) = -dK/dz(y, y)/(1+theta)`` the one-point intensity, and
the remaining entries fixed by ``K_ij(y, z) = -K_ji(z, y)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, erfc

from .quadrature import integrate

__all__ = [
    "VARIANTS",
    "erf",
    "erfc",
    "gaussian_density",
    "kernel_bulk",
    "kernel_halfspace",
    "kernel_killed",
    "kernel_reflected",
    "kernel_partials",
    "ContinuumKernel",
    "assemble_continuum_kernel",
    "intensity_killed",
    "intensity_reflected",
    "scaling_compare",
]

VARIANTS = ("bulk", "halfspace", "killed", "reflected")

_SQRT2 = math.sqrt(2.0)
_SQRTPI = math.sqrt(math.pi)
_QUAD_TOL = 1e-14


def gaussian_density(x):
    """Standard normal density."""
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)


def _derf(x):
    return (2.0 / _SQRTPI) * np.exp(-x * x)


def _d2erf(x):
    return -(4.0 / _SQRTPI) * x * np.exp(-x * x)


def _check_t(t):
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")


def _prepare(y, z, t, lower=None):
    _check_t(t)
    y, z = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(z, dtype=float))
    if np.any(y > z):
        raise ValueError("scalar kernels are defined for y <= z only")
    if lower is not None and np.any(y < lower):
        raise ValueError(f"kernel domain requires y >= {lower}")
    return y, z


# --- bulk -----------------------------------------------------------------

def _bulk(y, z, t):
    s = 2.0 * math.sqrt(2.0 * t)
    d = (z - y) / s
    g = np.exp(-d * d)
    K = erfc(d)
    dz = -(2.0 / (_SQRTPI * s)) * g
    return K, -dz, dz, -(4.0 * d / (_SQRTPI * s * s)) * g


def kernel_bulk(y, z, t):
    """``erfc((z - y) / (2 sqrt(2t)))``."""
    y, z = _prepare(y, z, t)
    return _bulk(y, z, t)[0]


# --- killed ---------------------------------------------------------------

def _killed(y, z, t):
    s = 2.0 * math.sqrt(2.0 * t)
    S = (z + y) / s
    D = (z - y) / s
    eS, eD = erf(S), erf(D)
    gS, gD = _derf(S), _derf(D)
    K = 1.0 - eS * eD
    dz = -(gS * eD + eS * gD) / s
    dy = -(gS * eD - eS * gD) / s
    dyz = -(-2.0 * S * gS * eD + 2.0 * D * eS * gD) / (s * s)
    return K, dy, dz, dyz


def kernel_killed(y, z, t):
    """``1 - erf((z+y)/(2 sqrt(2t))) erf((z-y)/(2 sqrt(2t)))`` on ``0 <= y <= z``."""
    y, z = _prepare(y, z, t, lower=0.0)
    return _killed(y, z, t)[0]


# --- half-space -----------------------------------------------------------

def _hs_inner(v, a):
    # u-integral of (u-v) phi(u-v) erfc((u+v)/sqrt2) over u < a.
    return (-gaussian_density(a - v) * erfc((a + v) / _SQRT2)
            - np.exp(-v * v) * erfc(-a) / (2.0 * _SQRTPI))


def _hs_f(u, v):
    return (u - v) * gaussian_density(u - v) * erfc((u + v) / _SQRT2)


def _halfspace(y, z, t, need_value=True, need_dy=True):
    c = 1.0 / (2.0 * math.sqrt(t))
    a, b = c * y, c * z
    K = dy = None
    if need_value:
        A = a[..., None]
        body = integrate(lambda v: gaussian_density(v - A) * erfc((A + v) / _SQRT2),
                         a, b, tol=_QUAD_TOL)
        K = 1.0 - body - 0.25 * erfc(-a) * (erf(b) - erf(a))
    if need_dy:
        A = a[..., None]
        side = integrate(lambda v: _hs_f(A, v), a, b, tol=_QUAD_TOL)
        dy = c * (side - _hs_inner(a, a))
    dz = c * _hs_inner(b, a)
    dyz = c * c * _hs_f(a, b)
    return K, dy, dz, dyz


def kernel_halfspace(y, z, t):
    """Half-space kernel.

    ``1 + int_{y'}^{z'} dv int_{-inf}^{y'} du (u-v) phi(u-v) erfc((u+v)/sqrt2)``
    with ``y' = y/(2 sqrt t)``, ``z' = z/(2 sqrt t)`` and ``phi`` the standard
    normal density.
    """
    y, z = _prepare(y, z, t)
    return _halfspace(y, z, t, need_dy=False)[0]


# --- reflected ------------------------------------------------------------

def _refl_F(u, v):
    return (_d2erf((u - v) / _SQRT2) * erf((u + v) / _SQRT2)
            + _d2erf((u + v) / _SQRT2) * erf((u - v) / _SQRT2))


def _refl_J(u, a):
    # v-integral of _refl_F(u, v) over v > a.
    return (_SQRT2 * (_derf((u - a) / _SQRT2) * erf((u + a) / _SQRT2)
                      - _derf((u + a) / _SQRT2) * erf((u - a) / _SQRT2))
            + (4.0 / _SQRTPI) * np.exp(-u * u) * erfc(a))


def _reflected(y, z, t, need_value=True, need_dy=True):
    c = 1.0 / (2.0 * math.sqrt(t))
    a, b = c * y, c * z
    K = dy = None
    A = a[..., None]
    if need_value:
        def odd_part(u):
            return (_derf((u - A) / _SQRT2) * erf((u + A) / _SQRT2)
                    - _derf((u + A) / _SQRT2) * erf((u - A) / _SQRT2))
        body = integrate(odd_part, a, b, tol=_QUAD_TOL)
        K = 1.0 - (_SQRT2 / 2.0) * body - erfc(a) * (erf(b) - erf(a))
    if need_dy:
        side = integrate(lambda u: _refl_F(u, A), a, b, tol=_QUAD_TOL)
        dy = 0.5 * c * (_refl_J(a, a) + side)
    dz = -0.5 * c * _refl_J(b, a)
    dyz = 0.5 * c * c * _refl_F(b, a)
    return K, dy, dz, dyz


def kernel_reflected(y, z, t):
    """Reflected kernel on ``0 <= y <= z``.

    ``1 - (1/2) int_{y'}^{z'} du int_{y'}^{inf} dv [erf''((u-v)/sqrt2) erf((u+v)/sqrt2)
    + erf''((u+v)/sqrt2) erf((u-v)/sqrt2)]`` with ``y' = y/(2 sqrt t)``.
    """
    y, z = _prepare(y, z, t, lower=0.0)
    return _reflected(y, z, t, need_dy=False)[0]


_IMPL = {"bulk": _bulk, "killed": _killed, "halfspace": _halfspace, "reflected": _reflected}
_LOWER = {"bulk": None, "halfspace": None, "killed": 0.0, "reflected": 0.0}


def kernel_partials(variant, y, z, t):
    """``(K, dK/dy, dK/dz, d2K/dydz)`` for ``y <= z``."""
    if variant not in _IMPL:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    y, z = _prepare(y, z, t, lower=_LOWER[variant])
    return _IMPL[variant](y, z, t)


def intensity_killed(y, t, theta):
    """One-point intensity of the killed system."""
    y = np.asarray(y, dtype=float)
    return erf(y / math.sqrt(2 * t)) / ((1 + theta) * math.sqrt(2 * math.pi * t))


def intensity_reflected(y, t, theta):
    """One-point intensity of the reflected system."""
    y = np.asarray(y, dtype=float)
    return (erf(y / math.sqrt(2 * t)) / math.sqrt(2 * math.pi * t)
            + np.exp(-y * y / (4 * t)) * erfc(y / (2 * math.sqrt(t))) / math.sqrt(math.pi * t)
            ) / (1 + theta)


@dataclass(frozen=True)
class ContinuumKernel:
    """Matrix kernel of a continuum Pfaffian point process.

    ``prefactor`` defaults to ``1/(1+theta)``; any value in (0, 1] describes
    the correspondingly thinned process.
    """

    variant: str
    t: float
    theta: float = 1.0
    prefactor: float | None = None

    def __post_init__(self):
        if self.variant not in _IMPL:
            raise ValueError(f"unknown variant {self.variant!r}")
        _check_t(self.t)
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if self.prefactor is None:
            object.__setattr__(self, "prefactor", 1.0 / (1.0 + self.theta))

    @property
    def lower(self):
        """Left end of the domain (``None`` for the whole line)."""
        return _LOWER[self.variant]

    def scalar(self, y, z):
        return kernel_partials(self.variant, y, z, self.t)[0]

    def partials(self, y, z):
        return kernel_partials(self.variant, y, z, self.t)

    def intensity(self, y):
        y = np.asarray(y, dtype=float)
        _, _, dz, _ = self._eval(y, y, need_value=False, need_dy=False)
        return -self.prefactor * dz

    def _eval(self, y, z, need_value=True, need_dy=True):
        y, z = _prepare(y, z, self.t, lower=self.lower)
        fn = _IMPL[self.variant]
        if self.variant in ("halfspace", "reflected"):
            return fn(y, z, self.t, need_value=need_value, need_dy=need_dy)
        return fn(y, z, self.t)

    def blocks(self, y, z):
        """2x2 blocks ``K(y, z)`` elementwise over broadcast ``y, z``; shape ``(..., 2, 2)``."""
        y, z = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(z, dtype=float))
        lo, hi = np.minimum(y, z), np.maximum(y, z)
        K, dy, dz, dyz = self._eval(lo, hi)
        out = np.empty(y.shape + (2, 2))
        lam = self.prefactor
        # Blocks for lo < hi; lower-left orientation fixed below.
        out[..., 0, 0] = lam * K
        out[..., 0, 1] = -lam * dz
        out[..., 1, 0] = -lam * dy
        out[..., 1, 1] = lam * dyz
        swap = y > z
        if np.any(swap):
            out[swap] = -np.swapaxes(out[swap], -1, -2)
        diag = y == z
        if np.any(diag):
            out[diag, 0, 0] = 0.0
            out[diag, 1, 1] = 0.0
            out[diag, 1, 0] = -out[diag, 0, 1]
        return out

    def matrix(self, points, weights=None):
        """Antisymmetric ``2n x 2n`` matrix of blocks at ``points``.

        With ``weights`` each block (i, j) is scaled by ``sqrt(w_i w_j)``.
        """
        x = np.asarray(points, dtype=float).ravel()
        B = self.blocks(x[:, None], x[None, :])
        if weights is not None:
            s = np.sqrt(np.asarray(weights, dtype=float))
            B = B * (s[:, None] * s[None, :])[..., None, None]
        n = x.size
        M = B.transpose(0, 2, 1, 3).reshape(2 * n, 2 * n)
        return 0.5 * (M - M.T)

    def correlation(self, points):
        """n-point correlation density at distinct points."""
        from .skewalg import pfaffian
        x = np.asarray(points, dtype=float).ravel()
        if np.unique(x).size != x.size:
            raise ValueError("points must be distinct")
        return pfaffian(self.matrix(x))


def assemble_continuum_kernel(variant, t, theta):
    return ContinuumKernel(variant=variant, t=float(t), theta=float(theta))


def scaling_compare(lattice, continuum, pairs, epsilon):
    """Largest blockwise deviation between a rescaled lattice kernel and its limit.

    ``lattice`` is a lattice matrix kernel solved at time ``t / epsilon**2``
    (anything with a ``blocks(y, z)`` method on integer sites); ``pairs`` are
    continuum points ``(y, z)`` with ``y <= z`` that lie on ``epsilon Z``.
    Lattice entries are scaled by ``(1, 1/eps, 1/eps, 1/eps**2)``.
    """
    if lattice.variant != continuum.variant:
        raise ValueError(f"variant mismatch: {lattice.variant} vs {continuum.variant}")
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    ys = np.rint(pairs[:, 0] / epsilon).astype(int)
    zs = np.rint(pairs[:, 1] / epsilon).astype(int)
    if not np.allclose(ys * epsilon, pairs[:, 0], atol=1e-9 * max(1.0, epsilon)) or \
            not np.allclose(zs * epsilon, pairs[:, 1], atol=1e-9 * max(1.0, epsilon)):
        raise ValueError("pairs must lie on the lattice epsilon Z")
    scale = np.array([[1.0, 1.0 / epsilon], [1.0 / epsilon, 1.0 / epsilon ** 2]])
    latt = lattice.blocks(ys, zs) * scale
    cont = continuum.blocks(pairs[:, 0], pairs[:, 1])
    return float(np.max(np.abs(latt - cont)))

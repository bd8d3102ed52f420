"""Gauss-Legendre quadrature helpers."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = ["QuadratureError", "gauss_legendre", "integrate", "interval_nodes"]


class QuadratureError(ArithmeticError):
    """Raised when refinement fails to reach the requested tolerance."""

    def __init__(self, message, achieved):
        super().__init__(message)
        self.achieved = achieved


@lru_cache(maxsize=64)
def _legendre(order):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(order):
    """Nodes and weights on [-1, 1]."""
    return _legendre(int(order))


def _composite(f, a, b, panels, order):
    x0, w0 = _legendre(order)
    # Reference nodes for `panels` equal sub-intervals of [0, 1].
    edges = np.arange(panels) / panels
    t = (edges[:, None] + (x0[None, :] + 1.0) / (2 * panels)).ravel()
    w = np.tile(w0 / (2 * panels), panels)
    h = (b - a)[..., None]
    x = a[..., None] + h * t
    return np.sum(f(x) * w, axis=-1) * (b - a)


def integrate(f, a, b, tol=1e-13, order=20, panels=1, max_panels=1024):
    """Integrate ``f`` over ``[a, b]``, elementwise over broadcast ``a``, ``b``.

    ``f`` receives nodes of shape ``a.shape + (m,)`` and must return values of
    that shape; parameters it closes over should be given a trailing axis.
    The number of equal panels is doubled until successive composite
    estimates agree to ``tol`` (absolute, worst element).

    Raises
    ------
    QuadratureError
        If ``max_panels`` is reached first; ``.achieved`` holds the last change.
    """
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    prev = _composite(f, a, b, panels, order)
    while True:
        panels *= 2
        cur = _composite(f, a, b, panels, order)
        change = float(np.max(np.abs(cur - prev))) if cur.size else 0.0
        if change <= tol:
            return cur
        if panels >= max_panels:
            raise QuadratureError(
                f"no convergence to {tol:g} with {panels} panels", change)
        prev = cur


def interval_nodes(lo, hi, n, panels=1):
    """Composite Gauss-Legendre nodes and weights on ``[lo, hi]`` (``n`` per panel)."""
    x0, w0 = _legendre(n)
    edges = np.linspace(lo, hi, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    x = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
    w = (half[:, None] * w0[None, :]).ravel()
    return x, w

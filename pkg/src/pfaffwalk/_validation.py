"""Argument checks shared by the modules and the estimator wrappers."""

from __future__ import annotations

import math
import numbers

import numpy as np


class ConfigError(ValueError):
    """Invalid user configuration (maps to CLI exit code 2)."""


class NumericalError(ArithmeticError):
    """A computation left its certified accuracy (CLI exit code 3)."""


def check_theta(theta):
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    return theta


def check_time(t, strict=False):
    t = float(t)
    if not math.isfinite(t) or t < 0 or (strict and t == 0):
        raise ValueError(f"time must be {'positive' if strict else 'nonnegative'}, got {t}")
    return t


def check_nonnegative_int(n, name="n"):
    if isinstance(n, bool) or not isinstance(n, numbers.Integral):
        if isinstance(n, float) and n.is_integer():
            n = int(n)
        else:
            raise TypeError(f"{name} must be an integer, got {n!r}")
    n = int(n)
    if n < 0:
        raise ValueError(f"{name} must be nonnegative, got {n}")
    return n


def check_sites(points, distinct=True, ordered=False, name="points"):
    """1-D integer site array; optionally require distinct or nondecreasing entries."""
    arr = np.asarray(points)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.equal(np.mod(arr, 1), 0)):
        raise ValueError(f"{name} must be integer sites")
    arr = arr.astype(np.int64)
    if distinct and np.unique(arr).size != arr.size:
        raise ValueError(f"{name} must be distinct")
    if ordered and np.any(np.diff(arr) < 0):
        raise ValueError(f"{name} must be ordered")
    return arr


def check_reals(points, name="points"):
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def check_probability(value, tol=1e-9, what="probability"):
    value = float(value)
    if not -tol <= value <= 1.0 + tol:
        raise NumericalError(f"{what} {value!r} outside [0, 1]")
    return value

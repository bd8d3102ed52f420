"""Dense skew-symmetric linear algebra.

Pfaffians of real antisymmetric matrices, the row (Laplace) expansion, the
``Pf(A - J)`` subset expansion and the quotient and conjugation identities.

The general-purpose routine is a Parlett-Reid style reduction: the matrix is
brought to tridiagonal form by Gauss transformations with partial pivoting,
and the Pfaffian is the signed product of the super-diagonal entries
``a[0, 1] * a[2, 3] * ...``.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

__all__ = [
    "SkewMatrix",
    "ConsistencyError",
    "symplectic_J",
    "pfaffian",
    "pfaffian_laplace",
    "pf_shift_J",
    "pf_minus_J",
    "pf_quotient_check",
    "conjugate",
]

DEFAULT_RTOL = 1e-10
LAPLACE_MAX_ORDER = 12
SUBSET_MAX_HALF_ORDER = 10


class ConsistencyError(ArithmeticError):
    """Two independent evaluation paths disagree beyond tolerance."""


class SkewMatrix:
    """Immutable dense antisymmetric matrix of even order.

    Only the strict upper triangle of the input is read; the lower triangle
    is rebuilt from it, so the stored entries are exactly antisymmetric with
    a zero diagonal.

    Parameters
    ----------
    entries : array_like, shape (2n, 2n)
        Square matrix whose strict upper triangle defines the matrix.
    check : bool
        If true, require the input to already be antisymmetric (to a relative
        tolerance of ``1e-12``) rather than silently using its upper triangle.
    """

    __slots__ = ("_a",)

    def __init__(self, entries, check=False):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] == 0 or a.shape[0] % 2:
            raise ValueError(f"order must be even and positive, got {a.shape[0]}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix has non-finite entries")
        if check:
            scale = max(1.0, float(np.max(np.abs(a))))
            if np.max(np.abs(a + a.T)) > 1e-12 * scale:
                raise ValueError("matrix is not antisymmetric")
        upper = np.triu(a, 1)
        a = upper - upper.T
        a.setflags(write=False)
        self._a = a

    @classmethod
    def from_upper(cls, values, order):
        """Build from the row-major strict upper triangle ``(a12, a13, ..., a_{2n-1,2n})``."""
        values = np.asarray(values, dtype=float)
        iu = np.triu_indices(order, 1)
        if values.shape != (iu[0].size,):
            raise ValueError(f"order {order} needs {iu[0].size} upper entries, got {values.shape}")
        a = np.zeros((order, order))
        a[iu] = values
        return cls(a)

    @classmethod
    def random(cls, order, rng=None, low=-1.0, high=1.0):
        rng = np.random.default_rng(rng)
        iu = np.triu_indices(order, 1)
        return cls.from_upper(rng.uniform(low, high, iu[0].size), order)

    @property
    def entries(self):
        """Read-only view of the dense entries."""
        return self._a

    @property
    def order(self):
        return self._a.shape[0]

    @property
    def n(self):
        """Half the order."""
        return self._a.shape[0] // 2

    def restrict(self, index):
        """Principal submatrix on the (sorted, even-sized) index set."""
        index = np.asarray(index, dtype=int)
        return SkewMatrix(self._a[np.ix_(index, index)])

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._a.copy()
        return self._a.astype(dtype)

    def __add__(self, other):
        return SkewMatrix(self._a + _as_array(other))

    def __sub__(self, other):
        return SkewMatrix(self._a - _as_array(other))

    def __neg__(self):
        return SkewMatrix(-self._a)

    def __mul__(self, scalar):
        return SkewMatrix(float(scalar) * self._a)

    __rmul__ = __mul__

    def __repr__(self):
        return f"SkewMatrix(order={self.order})"


def _as_array(A):
    if isinstance(A, SkewMatrix):
        return A.entries
    return np.asarray(A, dtype=float)


def _as_skew(A):
    return A if isinstance(A, SkewMatrix) else SkewMatrix(A)


def symplectic_J(n):
    """Block-diagonal ``J_{2n}`` made of ``n`` copies of ``[[0, 1], [-1, 0]]``."""
    J = np.zeros((2 * n, 2 * n))
    i = np.arange(0, 2 * n, 2)
    J[i, i + 1] = 1.0
    J[i + 1, i] = -1.0
    return J


def _pf2(a):
    return a[0, 1]


def _pf4(a):
    return a[0, 1] * a[2, 3] - a[0, 2] * a[1, 3] + a[0, 3] * a[1, 2]


def _pf_parlett_reid(a):
    # `a` is a private copy; overwritten in place.
    m = a.shape[0]
    pf = 1.0
    for k in range(0, m - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(a[k + 1:, k])))
        if kp != k + 1:
            a[[k + 1, kp], k:] = a[[kp, k + 1], k:]
            a[k:, [k + 1, kp]] = a[k:, [kp, k + 1]]
            pf = -pf
        piv = a[k, k + 1]
        if piv == 0.0:
            return 0.0
        pf *= piv
        if k + 2 < m:
            tau = a[k, k + 2:] / piv
            col = a[k + 2:, k + 1]
            a[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return pf


def pfaffian(A):
    """Pfaffian of an antisymmetric matrix of even order.

    Orders 2 and 4 use the closed forms, order 6 a row expansion, larger
    orders the pivoted Parlett-Reid reduction.
    """
    a = _as_skew(A).entries
    m = a.shape[0]
    if m == 2:
        return float(_pf2(a))
    if m == 4:
        return float(_pf4(a))
    if m == 6:
        return float(_laplace(a))
    return float(_pf_parlett_reid(a.copy()))


def _laplace(a, row=0):
    m = a.shape[0]
    if m == 0:
        return 1.0
    if m == 2:
        return a[0, 1]
    total = 0.0
    keep = np.ones(m, dtype=bool)
    for j in range(m):
        if j == row or a[row, j] == 0.0:
            continue
        # 1-based sign (-1)^{i+j+1+[j<i]} in 0-based indices.
        sign = -1.0 if (row + j + 1 + (j < row)) % 2 else 1.0
        keep[:] = True
        keep[[row, j]] = False
        sub = a[np.ix_(keep, keep)]
        total += sign * a[row, j] * _laplace(sub, 0)
    return total


def pfaffian_laplace(A, row=0):
    """Pfaffian by cofactor expansion along ``row`` (0-based).

    Only for orders up to 12; the cost grows like ``(2n-1)!!``.
    """
    a = _as_skew(A).entries
    m = a.shape[0]
    if m > LAPLACE_MAX_ORDER:
        raise ValueError(f"row expansion limited to order {LAPLACE_MAX_ORDER}, got {m}")
    if not 0 <= row < m:
        raise IndexError(f"row {row} out of range for order {m}")
    return float(_laplace(a, row))


def _relclose(x, y, rtol, scale):
    return abs(x - y) <= rtol * max(1.0, abs(x), abs(y), scale)


def pf_shift_J(A, s):
    """``Pf(A + s J_{2n})``."""
    a = _as_array(A)
    return pfaffian(a + s * symplectic_J(a.shape[0] // 2))


def _pf_minus_J_by_subsets(a):
    n = a.shape[0] // 2
    total = 0.0
    for m in range(n + 1):
        sign = -1.0 if (n - m) % 2 else 1.0
        for blocks in combinations(range(n), m):
            if m == 0:
                total += sign
                continue
            idx = np.array([[2 * b, 2 * b + 1] for b in blocks]).ravel()
            total += sign * pfaffian(a[np.ix_(idx, idx)])
    return total


def pf_minus_J(A, check=None, rtol=DEFAULT_RTOL):
    """``Pf(A - J_{2n})``, optionally cross-checked by the subset expansion.

    The subset route sums ``(-1)^(n-m) Pf(A|U)`` over all unions ``U`` of
    ``m`` diagonal 2x2 blocks. It has ``2^n`` terms, so by default it only
    runs for ``n <= 10``; pass ``check=True`` to force it.

    Raises
    ------
    ConsistencyError
        If the direct and subset values disagree beyond ``rtol``.
    """
    a = _as_skew(A).entries
    n = a.shape[0] // 2
    direct = pf_shift_J(a, -1.0)
    if check is None:
        check = n <= SUBSET_MAX_HALF_ORDER
    if check:
        expanded = _pf_minus_J_by_subsets(a)
        scale = float(np.max(np.abs(a))) ** n if a.size else 1.0
        if not _relclose(direct, expanded, rtol, scale):
            raise ConsistencyError(
                f"Pf(A - J): direct {direct!r} vs subset expansion {expanded!r}")
    return direct


def pf_quotient_check(a, rtol=DEFAULT_RTOL):
    """Pfaffian of ``A_ij = a_i / a_j`` (i < j), checked against its product form."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size == 0 or a.size % 2:
        raise ValueError("need an even, non-empty vector")
    if np.any(a == 0):
        raise ValueError("all entries must be nonzero")
    A = SkewMatrix(np.triu(np.outer(a, 1.0 / a), 1))
    value = pfaffian(A)
    expected = float(np.prod(a[0::2]) / np.prod(a[1::2]))
    if not _relclose(value, expected, rtol, 0.0):
        raise ConsistencyError(f"quotient Pfaffian {value!r} != {expected!r}")
    return value


def conjugate(A, C):
    """``C A C^T`` as a SkewMatrix; ``Pf(C A C^T) = det(C) Pf(A)``."""
    a = _as_skew(A).entries
    C = np.asarray(C, dtype=float)
    if C.shape != a.shape:
        raise ValueError(f"conjugating matrix has shape {C.shape}, need {a.shape}")
    return SkewMatrix(C @ a @ C.T)

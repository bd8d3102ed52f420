from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pfaffwalk import skewalg as sk

seeds = st.integers(0, 2**32 - 1)
half_orders = st.integers(1, 5)


def random_skew(n, seed):
    return sk.SkewMatrix.random(2 * n, np.random.default_rng(seed))


def test_order_two_closed_form():
    assert sk.pfaffian(sk.SkewMatrix([[0, 1], [-1, 0]])) == 1.0
    assert sk.pfaffian_laplace(sk.SkewMatrix([[0, 2.5], [-2.5, 0]])) == 2.5


def test_order_four_example():
    A = sk.SkewMatrix.from_upper([1, 2, 3, 4, 5, 6], 4)
    assert sk.pfaffian(A) == pytest.approx(8.0, abs=1e-14)
    for row in range(4):
        assert sk.pfaffian_laplace(A, row=row) == pytest.approx(8.0, abs=1e-14)


def test_order_eight_against_lu_determinant():
    A = sk.SkewMatrix.random(8, np.random.default_rng(3))
    det = np.linalg.det(A.entries)
    assert sk.pfaffian(A) ** 2 == pytest.approx(det, rel=1e-10)


def test_order_six_cross_algorithm():
    A = sk.SkewMatrix.random(6, np.random.default_rng(11))
    # order 6 dispatches to the row expansion, so force Parlett-Reid directly
    pr = sk._pf_parlett_reid(A.entries.copy())
    assert sk.pfaffian_laplace(A, row=3) == pytest.approx(pr, rel=1e-12)


def test_lower_triangle_is_ignored():
    a = np.arange(16.0).reshape(4, 4)
    A = sk.SkewMatrix(a)
    assert np.array_equal(A.entries, -A.entries.T)
    assert np.all(np.diag(A.entries) == 0)
    with pytest.raises(ValueError, match="antisymmetric"):
        sk.SkewMatrix(a, check=True)


@pytest.mark.parametrize("bad", [np.zeros((3, 3)), np.zeros((2, 3)), np.zeros((0, 0)),
                                 np.array([[0, np.nan], [0, 0]])])
def test_rejects_bad_shapes(bad):
    with pytest.raises(ValueError):
        sk.SkewMatrix(bad)


def test_laplace_order_limit():
    with pytest.raises(ValueError):
        sk.pfaffian_laplace(sk.SkewMatrix.random(14, 0))
    with pytest.raises(IndexError):
        sk.pfaffian_laplace(sk.SkewMatrix.random(4, 0), row=4)


@pytest.mark.parametrize("n", range(1, 7))
def test_pf_of_J_is_one(n):
    assert sk.pfaffian(sk.symplectic_J(n)) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("n", range(1, 6))
def test_pf_minus_J_examples(n):
    zero = np.zeros((2 * n, 2 * n))
    assert sk.pf_minus_J(zero) == pytest.approx((-1.0) ** n)
    assert sk.pf_minus_J(sk.symplectic_J(n)) == pytest.approx(0.0, abs=1e-15)


def test_pf_minus_J_subset_mismatch_raises(monkeypatch):
    monkeypatch.setattr(sk, "_pf_minus_J_by_subsets", lambda a: 123.0)
    with pytest.raises(sk.ConsistencyError):
        sk.pf_minus_J(sk.SkewMatrix.random(4, 1))


@pytest.mark.parametrize("a, expected", [((1, 1, 1, 1), 1.0), ((2, 4), 0.5),
                                         ((1, 2, 3, 4, 5, 6), 0.3125)])
def test_quotient_examples(a, expected):
    assert sk.pf_quotient_check(a) == pytest.approx(expected, rel=1e-14)


def test_quotient_rejects_zero():
    with pytest.raises(ValueError):
        sk.pf_quotient_check((1.0, 0.0))


def test_conjugate_identity_and_diagonal():
    A = sk.SkewMatrix.random(6, np.random.default_rng(2))
    assert np.array_equal(sk.conjugate(A, np.eye(6)).entries, A.entries)
    eps = 0.01
    D = np.diag([eps ** 0.5, eps ** -0.5] * 3)
    assert sk.pfaffian(sk.conjugate(A, D)) == pytest.approx(sk.pfaffian(A), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(half_orders, seeds)
def test_pf_squared_is_det(n, seed):
    A = random_skew(n, seed)
    det = np.linalg.det(A.entries)
    assert sk.pfaffian(A) ** 2 == pytest.approx(det, rel=1e-9, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), seeds, st.data())
def test_laplace_matches_parlett_reid(n, seed, data):
    A = random_skew(n, seed)
    row = data.draw(st.integers(0, 2 * n - 1))
    pf = sk.pfaffian(A)
    assert sk.pfaffian_laplace(A, row) == pytest.approx(pf, rel=1e-12, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), seeds)
def test_laplace_independent_of_row(n, seed):
    A = random_skew(n, seed)
    values = [sk.pfaffian_laplace(A, r) for r in range(2 * n)]
    assert np.ptp(values) <= 1e-13 * max(1.0, abs(values[0]))


@settings(max_examples=40, deadline=None)
@given(half_orders, seeds)
def test_conjugation_scales_by_det(n, seed):
    rng = np.random.default_rng(seed)
    A = random_skew(n, seed)
    C = rng.uniform(-1, 1, (2 * n, 2 * n))
    B = sk.conjugate(A, C)
    assert np.array_equal(B.entries, -B.entries.T)
    assert sk.pfaffian(B) == pytest.approx(np.linalg.det(C) * sk.pfaffian(A), rel=1e-9, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(half_orders, seeds, st.floats(-3, 3))
def test_shift_J_subset_expansion(n, seed, s):
    # Pf(A + sJ) = sum over block unions U of s^(n - |U|/2) Pf(A|U)
    A = random_skew(n, seed)
    a = A.entries
    total = 0.0
    for m in range(n + 1):
        for blocks in combinations(range(n), m):
            idx = [i for b in blocks for i in (2 * b, 2 * b + 1)]
            total += s ** (n - m) * (sk.pfaffian(a[np.ix_(idx, idx)]) if m else 1.0)
    assert sk.pf_shift_J(A, s) == pytest.approx(total, rel=1e-10, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(half_orders, seeds, st.floats(-2, 2).filter(lambda c: abs(c) > 1e-3))
def test_homogeneity_and_row_swap(n, seed, c):
    A = random_skew(n, seed)
    pf = sk.pfaffian(A)
    assert sk.pfaffian(c * A) == pytest.approx(c ** n * pf, rel=1e-10, abs=1e-12)
    if n > 1:
        perm = np.arange(2 * n)
        perm[[0, 2]] = perm[[2, 0]]
        swapped = A.entries[np.ix_(perm, perm)]
        assert sk.pfaffian(swapped) == pytest.approx(-pf, rel=1e-10, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(half_orders, seeds)
def test_restrict_and_arithmetic_stay_antisymmetric(n, seed):
    A = random_skew(n, seed)
    for B in (A + A, A - 2 * A, -A, A.restrict(np.arange(2 * n)[: 2 * (n // 2 or 1)])):
        assert np.array_equal(B.entries, -B.entries.T)

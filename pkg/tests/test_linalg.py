"""Exact elimination, subspaces and Gram projections."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from abch.linalg import (
    Mat,
    cross_gram,
    gram_adjoint,
    gram_schmidt,
    ip,
    project,
    span_basis,
    subspace_contains,
    subspace_dim,
    subspace_eq,
    subspace_intersect,
    subspace_sum,
)
from abch.scalars import QQi, ONE, ZERO

small = st.integers(min_value=-4, max_value=4)
entries = st.builds(lambda a, b: QQi(Fraction(a), Fraction(b)), small, small)


def mats(nrows, ncols):
    return st.lists(
        st.lists(entries, min_size=ncols, max_size=ncols), min_size=nrows, max_size=nrows
    ).map(lambda rows: Mat(rows, ncols=ncols))


@settings(max_examples=60, deadline=None)
@given(mats(3, 4))
def test_nullspace_is_kernel(A):
    N = A.nullspace()
    assert (A @ N).is_zero()
    assert A.rank() + N.ncols == A.ncols


@settings(max_examples=60, deadline=None)
@given(mats(4, 3))
def test_column_space_rank(A):
    C = A.column_space()
    assert C.ncols == A.rank()
    assert subspace_contains(C, A)


@settings(max_examples=40, deadline=None)
@given(mats(3, 3))
def test_inverse_or_singular(A):
    if A.rank() == 3:
        assert A @ A.inv() == Mat.identity(3)
    else:
        with pytest.raises(ZeroDivisionError):
            A.inv()


@settings(max_examples=40, deadline=None)
@given(mats(3, 3), mats(3, 2))
def test_solve(A, b):
    X = A.solve(b)
    if X is not None:
        assert A @ X == b


@settings(max_examples=30, deadline=None)
@given(mats(4, 2), mats(4, 2))
def test_intersection_and_sum(A, B):
    inter = subspace_intersect(A, B)
    assert subspace_contains(A, inter) and subspace_contains(B, inter)
    total = subspace_sum(A, B)
    assert subspace_dim(total) == A.rank() + B.rank() - inter.ncols


def _pd_gram(n):
    # a fixed rational Hermitian positive definite Gram
    B = Mat(
        [[QQi(Fraction(1, 1 + ((i * 3 + j) % 4)), Fraction((i + 2 * j) % 3, 5)) for j in range(n)] for i in range(n)],
        ncols=n,
    )
    return B.conj_t() @ B + Mat.identity(n)


@settings(max_examples=30, deadline=None)
@given(mats(3, 2), mats(2, 3))
def test_gram_adjoint_property(U, T):
    Gs, Gd = _pd_gram(3), _pd_gram(2)
    S = gram_adjoint(T, Gs, Gd)
    for u in U.cols():
        for v in (Mat.identity(2)).cols():
            lhs = ip(T.matvec(u), v, Gd)
            rhs = ip(u, S.matvec(v), Gs)
            assert lhs == rhs


def test_projection_is_orthogonal():
    G = _pd_gram(4)
    B = Mat(
        [[ONE, ZERO], [ZERO, ONE], [QQi(2), QQi(0, 1)], [ZERO, ZERO]],
        ncols=2,
    )
    x = [QQi(1), QQi(2), QQi(3), QQi(4)]
    px = project(x, B, G)
    res = [a - b for a, b in zip(x, px)]
    for b in B.cols():
        assert ip(res, b, G) == QQi(0)
    assert subspace_contains(B, Mat.column(px))


def test_gram_schmidt_orthogonalises():
    G = _pd_gram(4)
    B = Mat(
        [[ONE, ONE, ZERO], [ZERO, ONE, ONE], [ONE, ZERO, ONE], [ZERO, ZERO, ONE]],
        ncols=3,
    )
    W = gram_schmidt(B, G)
    assert W.ncols == B.rank()
    X = cross_gram(W, W, G)
    for i in range(W.ncols):
        for j in range(W.ncols):
            if i != j:
                assert X.rows[i][j] == QQi(0)
    assert subspace_eq(span_basis(B), span_basis(W))


def test_span_basis_canonical():
    A = Mat([[ONE, QQi(2)], [QQi(2), QQi(4)]], ncols=2)
    S = span_basis(A)
    assert S.ncols == 1
    assert subspace_eq(S, A)

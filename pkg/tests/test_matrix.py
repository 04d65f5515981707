import itertools
import pickle

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rcflab.canonical import companion
from rcflab.errors import AmbientMismatchError, DomainError, ShapeError
from rcflab.fp import Poly, parse_poly
from rcflab.matrix import (
    MatFp,
    charpoly,
    format_matrix,
    inverse,
    mat_poly_eval,
    nullspace,
    parse_matrix,
    rank,
    rank_batch,
    rref,
)


def _perm_sign(perm):
    sign, seen = 1, set()
    for i in range(len(perm)):
        if i in seen:
            continue
        j, length = i, 0
        while j not in seen:
            seen.add(j)
            j = perm[j]
            length += 1
        sign *= -1 if length % 2 == 0 else 1
    return sign


def leibniz_charpoly(A: MatFp) -> Poly:
    """det(tI - A) by the permutation expansion; independent of any elimination."""
    p, n = A.p, A.rows
    a = A.tolist()
    entry = [[Poly([-a[i][j], 1] if i == j else [-a[i][j]], p) for j in range(n)] for i in range(n)]
    total = Poly.zero(p)
    for perm in itertools.permutations(range(n)):
        term = Poly.one(p) * _perm_sign(perm)
        for i, j in enumerate(perm):
            term = term * entry[i][j]
        total = total + term
    return total


@pytest.mark.parametrize("n", [1, 3, 6])
def test_rank_identity(n):
    assert rank(MatFp.identity(n, 5)) == n


def test_rank_examples():
    assert rank(MatFp.zeros(3, 3, 2)) == 0
    assert rank(MatFp([[1, 1], [1, 1]], 2)) == 1


def test_mat_poly_eval_examples():
    rng = np.random.default_rng(0)
    A = MatFp(rng.integers(0, 3, (4, 4)), 3)
    assert mat_poly_eval(Poly.t(3), A) == A
    assert mat_poly_eval(parse_poly("t^2+1", 2), MatFp.identity(2, 2)) == MatFp.zeros(2, 2, 2)
    assert mat_poly_eval(parse_poly("t+1", 2), MatFp([[0, 1], [1, 0]], 2)) == MatFp([[1, 1], [1, 1]], 2)


def test_mat_poly_eval_errors():
    with pytest.raises(ShapeError):
        mat_poly_eval(Poly.t(2), MatFp([[1, 0, 1]], 2))
    with pytest.raises(AmbientMismatchError):
        mat_poly_eval(Poly.t(3), MatFp.identity(2, 2))


@pytest.mark.parametrize("n,p", [(1, 2), (3, 3), (5, 5)])
def test_charpoly_trivial(n, p):
    assert charpoly(MatFp.zeros(n, n, p)) == Poly.t(p) ** n
    assert charpoly(MatFp.identity(n, p)) == (Poly.t(p) - Poly.one(p)) ** n


def test_charpoly_companion():
    f = parse_poly("t^2+t+1", 2)
    assert charpoly(companion(f)) == f


def test_charpoly_nonsquare():
    with pytest.raises(ShapeError):
        charpoly(MatFp([[1, 2]], 3))


@pytest.mark.parametrize("p", [2, 3, 5])
def test_charpoly_matches_leibniz(p):
    rng = np.random.default_rng(p)
    for _ in range(40):
        n = int(rng.integers(1, 5))
        A = MatFp(rng.integers(0, p, (n, n)), p)
        assert charpoly(A) == leibniz_charpoly(A)


def test_rank_batch_matches_rref():
    rng = np.random.default_rng(3)
    for p in (2, 3, 7):
        stack = rng.integers(0, p, (300, 5, 7)) * (rng.random((300, 5, 7)) < 0.4)
        got = rank_batch(stack, p)
        want = [len(rref(m, p)[1]) for m in stack]
        assert got.tolist() == want


def test_rank_batch_wide_gf2():
    # more than 64 columns takes the unpacked path
    rng = np.random.default_rng(4)
    stack = rng.integers(0, 2, (20, 10, 70))
    assert rank_batch(stack, 2).tolist() == [len(rref(m, 2)[1]) for m in stack]


def test_nullspace_and_inverse():
    rng = np.random.default_rng(5)
    for p in (2, 5):
        a = rng.integers(0, p, (4, 6))
        ns = nullspace(a, p)
        assert ns.shape[0] == 6 - len(rref(a, p)[1])
        assert not np.any(a @ ns.T % p)
    A = MatFp([[1, 2], [3, 4]], 5)
    assert A @ inverse(A) == MatFp.identity(2, 5)
    with pytest.raises(DomainError):
        inverse(MatFp([[1, 1], [1, 1]], 2))


def test_text_round_trip():
    A = MatFp([[1, 2, 0], [0, 1, 2]], 3)
    assert parse_matrix(format_matrix(A)) == A
    with pytest.raises(ShapeError):
        parse_matrix("3 2 2\n1 0\n")
    with pytest.raises(AmbientMismatchError):
        parse_matrix(format_matrix(A), p=5)


def test_immutable_and_pickle():
    A = MatFp([[1, 0], [1, 1]], 2)
    with pytest.raises(AttributeError):
        A.p = 3
    with pytest.raises(ValueError):
        A.data[0, 0] = 0
    assert pickle.loads(pickle.dumps(A)) == A


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([2, 3, 5]), arrays(np.int64, (4, 4), elements=st.integers(0, 4)))
def test_rank_transpose_invariant(p, a):
    assert rank(MatFp(a, p)) == rank(MatFp(a.T, p))


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([2, 3, 5]), arrays(np.int64, (5, 5), elements=st.integers(0, 4)))
def test_cayley_hamilton(p, a):
    A = MatFp(a, p)
    assert mat_poly_eval(charpoly(A), A) == MatFp.zeros(5, 5, p)

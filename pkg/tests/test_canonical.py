import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rcflab.canonical import companion, is_similar, rcf, rcf_of_type
from rcflab.errors import AmbientMismatchError, DomainError, ShapeError
from rcflab.fp import parse_poly
from rcflab.matrix import MatFp, charpoly, inverse, random_invertible
from rcflab.moduletype import enumerate_module_types, parse_module_type
from rcflab.snf import char_type


def test_companion_examples():
    assert companion(parse_poly("t^2+1", 2)) == MatFp([[0, 1], [1, 0]], 2)
    assert companion(parse_poly("t-3", 7)) == MatFp([[3]], 7)
    assert companion(parse_poly("t^2+t+2", 3)) == MatFp([[0, 1], [1, 2]], 3)


@pytest.mark.parametrize("text", ["2t+1", "1", "0"])
def test_companion_rejects(text):
    with pytest.raises(DomainError):
        companion(parse_poly(text, 3))


def test_rcf_examples():
    c = companion(parse_poly("t^2+t+1", 2))
    R, tau = rcf(c)
    assert R == c and tau == parse_module_type("t^2+t+1:1", 2)
    R, tau = rcf(MatFp.zeros(2, 2, 2))
    assert R == MatFp.zeros(2, 2, 2) and tau == parse_module_type("t:1+1", 2)
    R, tau = rcf(MatFp([[1, 1], [0, 1]], 2))
    assert R == MatFp([[0, 1], [1, 0]], 2) and tau == parse_module_type("t+1:2", 2)


def test_rcf_shape():
    with pytest.raises(ShapeError):
        rcf(MatFp([[1, 0, 1]], 2))


def test_similarity_examples():
    assert not is_similar(MatFp.zeros(2, 2, 2), MatFp.identity(2, 2))
    assert is_similar(MatFp([[1, 1], [0, 1]], 2), MatFp([[0, 1], [1, 0]], 2))
    with pytest.raises(ShapeError):
        is_similar(MatFp.zeros(2, 2, 2), MatFp.zeros(3, 3, 2))
    with pytest.raises(AmbientMismatchError):
        is_similar(MatFp.zeros(2, 2, 2), MatFp.zeros(2, 2, 3))


@pytest.mark.parametrize("p,dim", [(2, 5), (3, 3)])
def test_rcf_of_type_realizes_type(p, dim):
    for tau in enumerate_module_types(p, dim):
        if tau.dim() == 0:
            continue
        assert char_type(rcf_of_type(tau)) == tau


@settings(max_examples=120, deadline=None)
@given(st.sampled_from([2, 3, 5]), st.integers(1, 8), st.data())
def test_rcf_properties(p, n, data):
    A = MatFp(data.draw(arrays(np.int64, (n, n), elements=st.integers(0, p - 1))), p)
    R, tau = rcf(A)
    assert is_similar(A, R)
    assert rcf(R)[0] == R
    assert charpoly(R) == charpoly(A)
    assert tau.dim() == n
    P = random_invertible(n, p, np.random.default_rng(data.draw(st.integers(0, 2**32))))
    assert rcf(inverse(P) @ A @ P)[0] == R

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from planarqec.codes import toric_code
from planarqec.gf2 import Gf2Matrix, gf2_rank


def span_size(a: np.ndarray) -> int:
    """Brute-force size of the row span (oracle for small matrices)."""
    seen = set()
    for coeffs in itertools.product((0, 1), repeat=a.shape[0]):
        v = (np.array(coeffs, dtype=np.int64) @ a.astype(np.int64)) % 2 if a.shape[0] else np.zeros(a.shape[1])
        seen.add(tuple(np.atleast_1d(v)))
    return len(seen)


small = arrays(np.uint8, st.tuples(st.integers(1, 6), st.integers(1, 9)), elements=st.integers(0, 1))


def test_identity_rank():
    assert gf2_rank(Gf2Matrix.identity(3)) == 3


def test_zero_rank():
    assert gf2_rank(np.zeros((2, 5), dtype=np.uint8)) == 0


def test_toric_d2_hx_rank():
    code = toric_code(2)
    assert code.hx.shape == (4, 8)
    assert code.hx.rank() == 3
    assert span_size(code.hx.array) == 2**3


@settings(max_examples=200, deadline=None)
@given(small)
def test_rank_matches_span_oracle(a):
    m = Gf2Matrix(a)
    r = m.rank()
    assert 2**r == span_size(a)
    assert r == m.rank_by_columns()
    assert r <= min(a.shape)


@settings(max_examples=200, deadline=None)
@given(small)
def test_nullspace_is_kernel_of_full_dimension(a):
    m = Gf2Matrix(a)
    ns = m.nullspace()
    assert ns.rows == a.shape[1] - m.rank()
    if ns.rows:
        assert not (a.astype(np.int64) @ ns.array.T.astype(np.int64) % 2).any()
        assert ns.rank() == ns.rows


@settings(max_examples=200, deadline=None)
@given(small, st.data())
def test_rowspace_membership(a, data):
    m = Gf2Matrix(a)
    coeffs = np.array(data.draw(st.lists(st.integers(0, 1), min_size=a.shape[0], max_size=a.shape[0])))
    v = coeffs @ a.astype(np.int64) % 2
    assert m.in_rowspace(v)
    # a vector outside: append it and check the rank grows
    w = np.array(data.draw(st.lists(st.integers(0, 1), min_size=a.shape[1], max_size=a.shape[1])), dtype=np.uint8)
    grows = Gf2Matrix(np.vstack([a, w])).rank() > m.rank()
    assert m.in_rowspace(w) == (not grows)


def test_from_supports_and_views():
    m = Gf2Matrix.from_supports([[0, 2], [1]], 3)
    assert m.array.tolist() == [[1, 0, 1], [0, 1, 0]]
    assert m.row_supports() == [[0, 2], [1]]
    assert m.col_supports() == [[0], [1], [0]]
    assert m.T.shape == (3, 2)
    assert (m @ np.array([1, 1, 1])).tolist() == [0, 1]


def test_immutable():
    m = Gf2Matrix.identity(2)
    with pytest.raises(ValueError):
        m.array[0, 0] = 0


def test_rejects_non_2d():
    with pytest.raises(ValueError):
        Gf2Matrix(np.zeros((2, 2, 2)))

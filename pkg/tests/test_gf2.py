import numpy as np
import pytest
from hypothesis import given, strategies as st

from necorpia.errors import InsufficientRankError, ShapeError
from necorpia.gf2 import (BinaryMatrix, block_rref, hstack, mat_mul, rank, rref,
                          select_full_rank_rows, vstack)

from conftest import gauss_rank


@st.composite
def bit_matrices(draw, max_rows=10, max_cols=140):
    r = draw(st.integers(0, max_rows))
    c = draw(st.integers(1, max_cols))
    seed = draw(st.integers(0, 2**32 - 1))
    return np.random.default_rng(seed).integers(0, 2, (r, c), dtype=np.uint8)


def is_rref(bits, pivots):
    for i, p in enumerate(pivots):
        row = bits[i]
        if row[:p].any() or row[p] != 1:
            return False
        col = bits[:, p]
        if col.sum() != 1:
            return False
    return not bits[len(pivots):].any()


@given(bit_matrices())
def test_bits_roundtrip(bits):
    m = BinaryMatrix.from_bits(bits)
    assert np.array_equal(m.to_bits(), bits)
    assert BinaryMatrix.from_row_ints(m.row_ints(), m.cols) == m


@given(bit_matrices())
def test_rank_matches_naive_elimination(bits):
    assert rank(BinaryMatrix.from_bits(bits)) == gauss_rank(bits.tolist())


@given(bit_matrices())
def test_rref_form_and_row_space(bits):
    m = BinaryMatrix.from_bits(bits)
    red, pivots, _ = rref(m)
    rb = red.to_bits()
    assert is_rref(rb, pivots)
    assert pivots == sorted(pivots)
    if bits.shape[0]:
        # same row space: stacking adds no rank
        assert gauss_rank(np.vstack([bits, rb]).tolist()) == len(pivots)


@given(bit_matrices(max_rows=8, max_cols=70), st.integers(0, 2**32 - 1))
def test_mat_mul_matches_numpy(b_bits, seed):
    rng = np.random.default_rng(seed)
    a_bits = rng.integers(0, 2, (5, b_bits.shape[0]), dtype=np.uint8)
    got = mat_mul(BinaryMatrix.from_bits(a_bits), BinaryMatrix.from_bits(b_bits)).to_bits()
    want = (a_bits.astype(int) @ b_bits.astype(int)) % 2
    assert np.array_equal(got, want)


def test_mat_mul_shape_error():
    with pytest.raises(ShapeError):
        mat_mul(BinaryMatrix.zeros(2, 3), BinaryMatrix.zeros(2, 3))


def test_identity_and_transpose(rng):
    eye = BinaryMatrix.identity(70)
    m = BinaryMatrix.random(70, 90, rng)
    assert mat_mul(eye, m) == m
    assert m.transpose().transpose() == m


def test_immutable():
    m = BinaryMatrix.identity(3)
    with pytest.raises(ValueError):
        m.words[0, 0] = 0


def test_padding_bits_rejected():
    with pytest.raises(ValueError):
        BinaryMatrix(np.array([[0b1000]], dtype=np.uint64), 3)


def test_stacks(rng):
    a, b = BinaryMatrix.random(3, 5, rng), BinaryMatrix.random(3, 7, rng)
    h = hstack([a, b])
    assert h.column_slice(0, 5) == a and h.column_slice(5, 12) == b
    v = vstack([a, a])
    assert v.row_slice(3, 6) == a
    with pytest.raises(ShapeError):
        vstack([a, b])


def test_dump():
    assert BinaryMatrix.from_bits([[1, 0, 1], [0, 1, 0]]).dump() == "101\n010"


def test_restricted_pivot_range():
    m = BinaryMatrix.from_bits([[1, 1, 0], [1, 0, 1]])
    red, piv, _ = rref(m, 1, 3)
    assert piv == [1, 2]
    assert red.to_bits()[:, 1:].tolist() == [[1, 0], [0, 1]]


@given(bit_matrices(max_rows=9, max_cols=40), st.lists(st.integers(1, 8), min_size=1, max_size=3))
def test_block_rref_structure(bits, widths):
    if sum(widths) > bits.shape[1]:
        widths = [bits.shape[1]]
    y = BinaryMatrix.from_bits(bits)
    d = block_rref(y, widths, with_transform=True)
    assert d.rank == (gauss_rank(bits.tolist()) if bits.shape[0] else 0)
    assert sum(d.ranks) == d.reduced.rows
    for grp, pivs in enumerate(d.pivot_cols):
        lo, hi = d.col_range(grp)
        assert all(0 <= p < hi - lo for p in pivs)
        assert len(pivs) == d.ranks[grp]
    # blocks below the diagonal are zero (row block i starts at group i)
    for i in range(d.n_v + 1):
        for j in range(i):
            assert not d.block(i, j).to_bits().any()
    # T . Y reproduces the reduced rows
    if y.rows:
        ty = mat_mul(d.transform, y)
        assert ty.row_slice(0, d.rank) == d.reduced


def test_block_rref_width_mismatch():
    with pytest.raises(ShapeError):
        block_rref(BinaryMatrix.zeros(2, 5), [3, 4])


def test_select_full_rank_rows():
    y = BinaryMatrix.from_bits([[1, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0], [0, 0, 1]])
    sel = select_full_rank_rows(y, 3)
    assert sel.to_bits().tolist() == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    with pytest.raises(InsufficientRankError):
        select_full_rank_rows(y.row_slice(0, 4), 3)


def test_example3_rank_is_three():
    # four sources, L1 = L2 = 3, index pairs forming a cycle
    pairs = [(1, 2), (1, 3), (2, 2), (2, 3)]
    rows = [[int(j == a) for j in (1, 2, 3)] + [int(j == b) for j in (1, 2, 3)] for a, b in pairs]
    assert rank(BinaryMatrix.from_bits(rows)) == 3

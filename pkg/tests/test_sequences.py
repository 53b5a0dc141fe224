import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from paraproduct_lab.dyadic import UNIT, UNIT_SQUARE, DyadicInterval, DyadicRectangle
from paraproduct_lab.sequences import (CoefficientSequence, ScaleInvariantSequence, SignPattern,
                                       abs_seq, apply_signs, column_example, hadamard_sequence,
                                       identity_example, lift_matrix, load_matrix,
                                       product_sign_flip, random_sign_matrix, save_matrix,
                                       unlift, walsh_hadamard)

from conftest import small_sequences

R = DyadicRectangle.of


def test_zeros_dropped_and_nonfinite_rejected():
    lam = CoefficientSequence({R(0, 0, 0, 0): 0.0, R(1, 1, 0, 0): 2.0})
    assert lam.support_size == 1 and lam.max_scale == 1
    with pytest.raises(ValueError):
        CoefficientSequence({UNIT_SQUARE: float("nan")})
    with pytest.raises(TypeError):
        CoefficientSequence({(0, 0): 1.0})


def test_lift_examples():
    lam = lift_matrix(np.eye(2))
    assert lam.get(UNIT_SQUARE) == 1.0
    halves = [R(1, a, 1, b) for a in (0, 1) for b in (0, 1)]
    assert all(lam.get(r) == 0.5 for r in halves)
    assert lam.support_size == 5
    assert lift_matrix(np.zeros((3, 3))).support_size == 0
    assert dict(lift_matrix([[2.5]]).items()) == {UNIT_SQUARE: 2.5}


def test_lift_too_large():
    with pytest.raises(ValueError):
        lift_matrix(np.ones((54, 1)))


@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 1000))
def test_lift_inverts(rows, cols, seed):
    A = np.random.default_rng(seed).standard_normal((rows, cols))
    lam = lift_matrix(A)
    for r, v in lam.items():
        i, j = r.scales
        assert v * 2.0 ** ((i + j) / 2) == pytest.approx(A[i, j], rel=1e-14)
    assert np.allclose(unlift(lam), A)


def test_abs_seq_examples():
    lam = CoefficientSequence({R(1, 0, 2, 3): -3.0})
    assert abs_seq(lam) == CoefficientSequence({R(1, 0, 2, 3): 3.0})
    pos = column_example(3)
    assert abs_seq(pos) == pos
    assert abs_seq(hadamard_sequence(1)) == lift_matrix(np.ones((2, 2)) / math.sqrt(2))


@given(small_sequences(), st.integers(0, 2**31))
def test_sign_operations(pair, seed):
    lam, _ = pair
    rng = np.random.default_rng(seed)
    eps = SignPattern({r: int(rng.choice([-1, 1])) for r in lam.entries})
    flipped = apply_signs(lam, eps)
    assert abs_seq(flipped) == abs_seq(lam)
    assert apply_signs(flipped, eps) == lam
    assert apply_signs(lam, SignPattern({})) == lam
    assert apply_signs(lam, SignPattern({}, default=-1)) == -lam
    assert product_sign_flip(lam, {}, {}) == lam
    assert product_sign_flip(lam, lambda I: -1, lambda J: 1) == -lam


def test_sign_pattern_validation():
    with pytest.raises(ValueError):
        SignPattern({UNIT_SQUARE: 2})


def test_identity_example():
    assert dict(identity_example(0).items()) == {UNIT_SQUARE: 1.0}
    one = identity_example(1)
    assert one.support_size == 5
    assert sorted(one.entries.values()) == [0.5] * 4 + [1.0]
    for d in range(5):
        lam = identity_example(d)
        assert lam.support_size == sum(4 ** i for i in range(d + 1))
        assert lam.sparse() == lift_matrix(np.eye(d + 1)).sparse()
    with pytest.raises(ValueError):
        identity_example(-1)


def test_column_example():
    assert dict(column_example(0).items()) == {UNIT_SQUARE: 1.0}
    lam = column_example(2)
    assert [lam.get(R(0, 0, j, 0)) for j in range(3)] == pytest.approx([1, 2 ** -0.5, 0.5])
    assert column_example(7).support_size == 8


def test_walsh_hadamard():
    assert walsh_hadamard(0).tolist() == [[1]]
    assert walsh_hadamard(1).tolist() == [[1, 1], [1, -1]]
    for m in range(7):
        H = walsh_hadamard(m)
        assert H.dtype.kind == "i"
        assert np.array_equal(H @ H.T, (1 << m) * np.eye(1 << m, dtype=np.int64))
    with pytest.raises(ValueError):
        walsh_hadamard(13)


def test_hadamard_sequence():
    assert dict(hadamard_sequence(0).items()) == {UNIT_SQUARE: 1.0}
    lam = hadamard_sequence(1)
    H = walsh_hadamard(1)
    for r, v in lam.items():
        i, j = r.scales
        assert v == pytest.approx(2 ** -0.5 * 2.0 ** (-(i + j) / 2) * H[i, j])
    m = 3
    for r, v in abs_seq(hadamard_sequence(m)).items():
        i, j = r.scales
        assert v == pytest.approx(2.0 ** (-m / 2) * 2.0 ** (-(i + j) / 2))
    with pytest.raises(ValueError):
        hadamard_sequence(7)


def test_random_sign_matrix():
    assert np.array_equal(random_sign_matrix(16, 3), random_sign_matrix(16, 3))
    for seed in range(10):
        A = random_sign_matrix(256, seed)
        assert set(np.unique(A)) <= {-1.0, 1.0}
        assert -0.02 <= A.mean() <= 0.02


def test_scale_invariant_large_support_is_lazy():
    lam = hadamard_sequence(4)
    assert lam.max_scale == 15
    assert lam.support_size == sum(1 << (i + j) for i in range(16) for j in range(16))
    assert lam.get(R(15, 3, 14, 1)) == pytest.approx(lam.profile[15, 14])
    with pytest.raises(MemoryError):
        lam.entries
    back = CoefficientSequence.from_json(lam.to_json())
    assert isinstance(back, ScaleInvariantSequence) and back == lam


@given(small_sequences())
def test_json_round_trip(pair):
    lam, _ = pair
    assert CoefficientSequence.from_json(lam.to_json()) == lam


def test_file_round_trip(tmp_path):
    lam = column_example(3)
    lam.save(tmp_path / "lam.json")
    assert CoefficientSequence.load(tmp_path / "lam.json") == lam
    A = np.random.default_rng(0).standard_normal((3, 4))
    save_matrix(A, tmp_path / "A.csv")
    assert np.array_equal(load_matrix(tmp_path / "A.csv"), A)


def test_from_json_rejects_bad_input():
    e = {"sx": 0, "px": 0, "sy": 0, "py": 0, "val": 1.0}
    with pytest.raises(ValueError):
        CoefficientSequence.from_json({"entries": [e, e]})
    with pytest.raises(ValueError):
        CoefficientSequence.from_json({"entries": [dict(e, val=float("inf"))]})


def test_arithmetic_and_blocks():
    a = column_example(2)
    b = identity_example(1)
    s = a + b
    assert s.get(UNIT_SQUARE) == 2.0
    assert (s - b) == a.sparse()
    blocks = b.blocks()
    assert set(blocks) == {(0, 0), (1, 1)}
    assert sorted(zip(blocks[(1, 1)].px, blocks[(1, 1)].py)) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert b.sparse().blocks().keys() == blocks.keys()
    assert DyadicInterval(0, 0) == UNIT

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from paraproduct_lab.bmo import (RectangleUnion, Step2D, dyadic_maximal, embedding_check,
                                 mixed_bmo, mixed_embedding_check, prod_bmo_exact,
                                 prod_bmo_greedy, rect_bmo, square_function, strong_maximal)
from paraproduct_lab.constants import C_CAR, C_EMB, C_PROD
from paraproduct_lab.dyadic import UNIT, UNIT_SQUARE, DyadicInterval, DyadicRectangle, GridSpec, contains
from paraproduct_lab.forms import FunctionFamily, random_family
from paraproduct_lab.norms import x_norm, xprime_norm
from paraproduct_lab.sequences import (CoefficientSequence, column_example, identity_example,
                                       random_sequence)

from conftest import small_sequences

R = DyadicRectangle.of


def grid_mask(rect, d):
    m = np.zeros((1 << d, 1 << d), dtype=bool)
    cx, cy = rect.x.cells(d), rect.y.cells(d)
    m[cx.start:cx.stop, cy.start:cy.stop] = True
    return m


def rect_bmo_brute(lam, d):
    best = 0.0
    for I0 in GridSpec(d).intervals():
        for J0 in GridSpec(d).intervals():
            mass = sum(v * v for r, v in lam.items() if contains(I0, r.x) and contains(J0, r.y))
            best = max(best, mass / (I0.length * J0.length))
    return math.sqrt(best)


def prod_bmo_brute(lam, d):
    rects = list(lam.entries)
    masks = [grid_mask(r, d) for r in rects]
    best = 0.0
    for k in range(1, len(rects) + 1):
        for sub in itertools.combinations(range(len(rects)), k):
            union = np.any([masks[s] for s in sub], axis=0)
            mass = sum(lam.get(r) ** 2 for r, m in zip(rects, masks) if not (m & ~union).any())
            best = max(best, mass / (union.sum() * 4.0 ** -d))
    return math.sqrt(best)


def mixed_bmo_brute(lam, d):
    best = 0.0
    for I0 in {r.x for r in lam.entries}:
        for J0 in GridSpec(d).intervals():
            mass = sum(v * v for r, v in lam.items() if r.x == I0 and contains(J0, r.y))
            best = max(best, mass / (I0.length * J0.length))
    return math.sqrt(best)


def transpose(lam):
    return CoefficientSequence({DyadicRectangle(r.y, r.x): v for r, v in lam.items()})


def test_rect_bmo_examples():
    r = R(2, 1, 1, 0)
    assert rect_bmo(CoefficientSequence({r: 3.0})) == pytest.approx(3 / math.sqrt(r.area))
    for d in range(6):
        assert rect_bmo(identity_example(d)) == pytest.approx(math.sqrt(d + 1), abs=1e-12)
        assert rect_bmo(column_example(d)) == pytest.approx(math.sqrt(2 - 2.0 ** -d), abs=1e-12)
    with pytest.raises(ValueError):
        rect_bmo(CoefficientSequence())


@given(small_sequences(max_depth=3, max_size=8))
def test_rect_bmo_brute(pair):
    lam, d = pair
    assert rect_bmo(lam) == pytest.approx(rect_bmo_brute(lam, d), rel=1e-12)


def test_prod_bmo_examples():
    r = R(1, 1, 3, 2)
    single = CoefficientSequence({r: -2.0})
    assert prod_bmo_exact(single) == pytest.approx(2 / math.sqrt(r.area))
    assert prod_bmo_greedy(single) == pytest.approx(prod_bmo_exact(single))
    assert prod_bmo_exact(identity_example(1)) == pytest.approx(math.sqrt(2), abs=1e-12)
    assert prod_bmo_greedy(identity_example(1)) == pytest.approx(math.sqrt(2), abs=1e-12)
    for d in range(10):
        assert prod_bmo_exact(column_example(d)) == pytest.approx(math.sqrt(2 - 2.0 ** -d), abs=1e-12)


def test_prod_bmo_cap_and_empty():
    lam = random_sequence(np.random.default_rng(0), 4, 21)
    with pytest.raises(ValueError):
        prod_bmo_exact(lam)
    assert prod_bmo_greedy(lam) >= rect_bmo(lam)
    assert prod_bmo_exact(CoefficientSequence()) == 0.0
    with pytest.raises(ValueError):
        prod_bmo_greedy(CoefficientSequence())


@given(small_sequences(max_depth=2, max_size=6))
def test_prod_bmo_brute(pair):
    lam, d = pair
    exact = prod_bmo_exact(lam)
    assert exact == pytest.approx(prod_bmo_brute(lam, d), rel=1e-12)
    assert rect_bmo(lam) <= exact + 1e-12
    assert prod_bmo_greedy(lam) <= exact + 1e-12


@given(small_sequences(max_depth=3, max_size=10))
def test_greedy_below_exact(pair):
    lam, _ = pair
    assert rect_bmo(lam) <= prod_bmo_greedy(lam) <= prod_bmo_exact(lam) + 1e-12


def test_mixed_bmo_examples():
    assert mixed_bmo(CoefficientSequence({UNIT_SQUARE: -1.5})) == pytest.approx(1.5)
    for d in range(6):
        assert mixed_bmo(column_example(d), "x-fixed") == pytest.approx(math.sqrt(2 - 2.0 ** -d))
    with pytest.raises(ValueError):
        mixed_bmo(column_example(1), "z-fixed")
    with pytest.raises(ValueError):
        mixed_bmo(CoefficientSequence())


@given(small_sequences(max_depth=3, max_size=8))
def test_mixed_bmo_brute_and_bound(pair):
    lam, d = pair
    assert mixed_bmo(lam, "x-fixed") == pytest.approx(mixed_bmo_brute(lam, d), rel=1e-12)
    assert mixed_bmo(lam, "y-fixed") == pytest.approx(mixed_bmo_brute(transpose(lam), d), rel=1e-12)
    x = x_norm(lam, d)
    assert mixed_bmo(lam, "x-fixed") <= x + 1e-8
    assert mixed_bmo(lam, "y-fixed") <= x + 1e-8


def test_union_measure_examples():
    assert RectangleUnion([]).measure() == 0
    u = RectangleUnion([R(1, 0, 0, 0), R(0, 0, 1, 0)])
    assert u.measure() == Fraction(3, 4)
    assert u.contains_rectangle(R(1, 1, 1, 0))
    assert not u.contains_rectangle(R(1, 1, 1, 1))
    assert RectangleUnion([R(1, 0, 1, 0), R(1, 0, 1, 1)]).contains_rectangle(R(1, 0, 0, 0))


def _interval_overlap(a, b):
    if contains(a, b):
        return b.length
    if contains(b, a):
        return a.length
    return 0.0


@given(small_sequences(max_depth=4, max_size=3))
def test_union_measure_inclusion_exclusion(pair):
    rects = list(pair[0].entries)
    total = 0.0
    for k in range(1, len(rects) + 1):
        for sub in itertools.combinations(rects, k):
            m = 1.0
            for axis in ("x", "y"):
                ivs = [getattr(r, axis) for r in sub]
                finest = max(ivs, key=lambda I: I.scale)
                m *= finest.length if all(contains(I, finest) for I in ivs) else 0.0
            total += (-1) ** (k + 1) * m
    meas = RectangleUnion(rects).measure()
    assert float(meas) == pytest.approx(total, abs=1e-15)
    assert 0 < meas <= 1


def test_square_function_examples():
    s = square_function(CoefficientSequence({UNIT_SQUARE: 1.0}), 2)
    assert np.allclose(s.values, 1.0) and s.l1() == pytest.approx(1.0)
    A = CoefficientSequence({UNIT_SQUARE: 3.0, R(1, 0, 1, 0): 1.0})
    s = square_function(A, 1)
    assert s.values[0, 0] == pytest.approx(math.sqrt(13))
    assert s.values[1, 1] == pytest.approx(3.0)
    with pytest.raises(ValueError):
        square_function(column_example(3), 2)


@given(small_sequences(max_depth=3, max_size=8))
def test_square_function_l2(pair):
    A, d = pair
    assert square_function(A, d).l2() ** 2 == pytest.approx(sum(v * v for _, v in A.items()), rel=1e-12)


def test_strong_maximal_examples():
    one = strong_maximal(Step2D(2, np.ones((4, 4))))
    assert np.allclose(one.values, 1.0)
    f = Step2D(2, grid_mask(R(1, 0, 1, 0), 2).astype(float))
    assert strong_maximal(f).values[3, 3] == pytest.approx(0.25)


@given(st.integers(0, 2**31), st.integers(0, 3))
def test_strong_maximal_brute(seed, d):
    vals = np.random.default_rng(seed).standard_normal((1 << d, 1 << d))
    f = Step2D(d, vals)
    M = strong_maximal(f).values
    assert np.all(M >= np.abs(vals) - 1e-15)
    absf = Step2D(d, np.abs(vals))
    for cx in range(1 << d):
        for cy in range(1 << d):
            best = max(absf.rect_average(DyadicRectangle(I, J))
                       for I in GridSpec(d).intervals() for J in GridSpec(d).intervals()
                       if cx in I.cells(d) and cy in J.cells(d))
            assert M[cx, cy] == pytest.approx(best)


def test_dyadic_maximal():
    assert dyadic_maximal(np.array([4.0, 0, 0, 0])).tolist() == [4.0, 2.0, 1.0, 1.0]
    with pytest.raises(ValueError):
        dyadic_maximal(np.ones(3))


def test_step2d_validation():
    with pytest.raises(ValueError):
        Step2D(1, np.ones((3, 3)))
    with pytest.raises(ValueError):
        Step2D(0, np.array([[np.inf]]))


def test_embedding_examples():
    one = CoefficientSequence({UNIT_SQUARE: 1.0})
    rep = embedding_check(one, one, 0)
    assert (rep.lhs, rep.bmo, rep.sA_l1) == (1.0, 1.0, 1.0)
    assert rep.passed
    assert set(rep.to_json()) == {"lhs", "bmo", "sA_l1", "constant", "pass", "levels"}
    zero = embedding_check(column_example(2), CoefficientSequence(), 2)
    assert zero.lhs == 0.0 and zero.sA_l1 == 0.0 and zero.levels == []


@given(small_sequences(max_depth=3, max_size=8), st.integers(0, 2**31))
def test_embedding_levels(pair, seed):
    lam, d = pair
    rng = np.random.default_rng(seed)
    A = CoefficientSequence({r: rng.standard_normal() for r in lam.entries})
    rep = embedding_check(lam, A, d)
    assert rep.passed
    for lv in rep.levels:
        assert lv.measure_U <= lv.measure_V + 1e-15
        assert lv.captured_inside_V


def test_mixed_embedding_examples():
    lam = CoefficientSequence({UNIT_SQUARE: -2.0})
    u = g = FunctionFamily(0, {UNIT: np.ones(1)})
    rep = mixed_embedding_check(lam, u, g)
    assert rep.lhs == pytest.approx(2.0) and rep.passed
    zero = mixed_embedding_check(CoefficientSequence(), u, g)
    assert zero.lhs == 0.0
    with pytest.raises(ValueError):
        mixed_embedding_check(lam, u, FunctionFamily(1))


@given(small_sequences(max_depth=3, max_size=8), st.integers(0, 2**31))
def test_sufficiency_chain(pair, seed):
    lam, d = pair
    rng = np.random.default_rng(seed)
    keys = list(GridSpec(d).intervals())
    assert mixed_embedding_check(lam, random_family(rng, d, keys), random_family(rng, d, keys)).passed
    assert xprime_norm(lam, d) <= C_PROD * prod_bmo_exact(lam) + 1e-12


def test_constants_frozen():
    assert C_EMB >= 1 and C_CAR >= 1 and C_PROD >= 1

"""The mixed paraproduct form, its averaged form over function families, and
the finite linear operator realising the latter on a truncated grid.

Step functions live on the ``2**depth`` cells of [0,1).  Coordinates of the
truncated operator are L2-weighted (cell value times ``2**(-depth/2)``), so
Euclidean operator norms are norms of the bilinear form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.sparse.linalg import LinearOperator

from .dyadic import (DyadicInterval, DyadicRectangle, haar_value, haar_vector)
from .sequences import CoefficientSequence

Axis = Literal["x", "y"]


@dataclass
class FunctionFamily:
    """Step functions on [0,1) indexed by dyadic intervals, all at one depth."""

    depth: int
    members: dict[DyadicInterval, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        n = 1 << self.depth
        for key, vals in list(self.members.items()):
            vals = np.asarray(vals, dtype=float)
            if vals.shape != (n,):
                raise ValueError(f"member {key} has {vals.shape} values, expected ({n},)")
            self.members[key] = vals

    def member(self, interval: DyadicInterval) -> np.ndarray | None:
        return self.members.get(interval)

    def norm_sq(self) -> float:
        return sum(float(v @ v) for v in self.members.values()) * 2.0 ** -self.depth

    def norm(self) -> float:
        return self.norm_sq() ** 0.5

    def l1_of_norms(self) -> float:
        """Sum over members of their L2 norms."""
        return sum(float(np.linalg.norm(v)) for v in self.members.values()) * 2.0 ** (-self.depth / 2)

    def average(self, key: DyadicInterval, over: DyadicInterval) -> float:
        """Mean of member ``key`` over the interval ``over``."""
        vals = self.members.get(key)
        if vals is None:
            return 0.0
        cells = over.cells(self.depth)
        return float(vals[cells.start:cells.stop].mean())

    def conditional_expectation(self, depth: int) -> "FunctionFamily":
        """Replace each member by its cell averages at the coarser ``depth``."""
        if depth > self.depth:
            raise ValueError("can only project to a coarser depth")
        k = 1 << (self.depth - depth)
        return FunctionFamily(depth, {
            key: v.reshape(-1, k).mean(axis=1) for key, v in self.members.items()
        })

    def refine(self, depth: int) -> "FunctionFamily":
        if depth < self.depth:
            raise ValueError("can only refine to a finer depth")
        k = 1 << (depth - self.depth)
        return FunctionFamily(depth, {key: np.repeat(v, k) for key, v in self.members.items()})


@dataclass
class HaarExpansion2D:
    """``f = sum f_IJ h_I (x) h_J`` with finitely many nonzero coefficients."""

    coeffs: dict[DyadicRectangle, float] = field(default_factory=dict)

    def norm_sq(self) -> float:
        return float(sum(v * v for v in self.coeffs.values()))

    @property
    def max_scale(self) -> int:
        return max((max(r.x.scale, r.y.scale) for r in self.coeffs), default=0)

    def pointwise(self, depth: int | None = None) -> np.ndarray:
        """Cell values on the ``2**depth x 2**depth`` grid, indexed ``[x_cell, y_cell]``."""
        depth = self.max_scale + 1 if depth is None else depth
        out = np.zeros((1 << depth, 1 << depth))
        for r, v in self.coeffs.items():
            out += v * np.outer(haar_vector(r.x, depth), haar_vector(r.y, depth))
        return out


def gamma_eval(lam: CoefficientSequence, u: FunctionFamily, g: FunctionFamily) -> float:
    """``sum_{I,J} lam_IJ <g_J>_I <u_I>_J`` by direct summation."""
    if u.depth != g.depth:
        raise ValueError(f"families at different depths ({u.depth} vs {g.depth})")
    if u.depth < lam.max_scale:
        raise ValueError(f"depth {u.depth} below the sequence's max scale {lam.max_scale}")
    # compensated summation: lifted sequences have tens of thousands of terms
    return math.fsum(v * g.average(rect.y, rect.x) * u.average(rect.x, rect.y)
                     for rect, v in lam.items()
                     if rect.y in g.members and rect.x in u.members)


def _strict_ancestor_pairing(coeffs: dict, fixed: DyadicInterval, interval: DyadicInterval,
                             fixed_is_x: bool) -> float:
    # sum over strict ancestors K of `interval` of coeff(fixed, K) * h_K(interval)
    total = 0.0
    for s in range(interval.scale):
        K = interval.ancestor(s)
        rect = DyadicRectangle(fixed, K) if fixed_is_x else DyadicRectangle(K, fixed)
        c = coeffs.get(rect)
        if c:
            total += c * haar_value(K, interval)
    return total


def evaluate_P(lam: CoefficientSequence, f: HaarExpansion2D, g: HaarExpansion2D) -> float:
    """``sum lam_IJ <f, h_I (x) 1_J/|J|> <g, 1_I/|I| (x) h_J>`` for finite expansions."""
    total = 0.0
    for rect, v in lam.items():
        fp = _strict_ancestor_pairing(f.coeffs, rect.x, rect.y, fixed_is_x=True)
        if fp == 0.0:
            continue
        gp = _strict_ancestor_pairing(g.coeffs, rect.y, rect.x, fixed_is_x=False)
        total += v * fp * gp
    return total


def family_from_expansion(expansion: HaarExpansion2D, axis: Axis,
                          depth: int | None = None) -> FunctionFamily:
    """Partial Haar coefficients as a family of one-variable step functions.

    ``axis="x"`` pairs with ``h_I`` in the first variable: member ``I`` is
    ``sum_J f_IJ h_J``.  ``axis="y"`` gives member ``J`` = ``sum_I g_IJ h_I``.
    """
    if axis not in ("x", "y"):
        raise ValueError("axis must be 'x' or 'y'")
    depth = expansion.max_scale + 1 if depth is None else depth
    members: dict[DyadicInterval, np.ndarray] = {}
    for r, v in expansion.coeffs.items():
        key, other = (r.x, r.y) if axis == "x" else (r.y, r.x)
        vec = members.setdefault(key, np.zeros(1 << depth))
        vec += v * haar_vector(other, depth)
    return FunctionFamily(depth, members)


def matrix_embedding(a, b, depth: int | None = None) -> tuple[FunctionFamily, FunctionFamily]:
    """Families ``u_I = 2**(-i/2) a_i 1_[0,1)`` and ``g_J = 2**(-j/2) b_j 1_[0,1)``."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if depth is None:
        depth = max(len(a), len(b)) - 1
    ones = np.ones(1 << depth)

    def build(c):
        return {DyadicInterval(i, p): 2.0 ** (-i / 2) * ci * ones
                for i, ci in enumerate(c) for p in range(1 << i)}

    return FunctionFamily(depth, build(a)), FunctionFamily(depth, build(b))


class TruncatedFormOperator:
    """Linear map ``G`` with ``gamma_eval(lam, u, g) == <coords(g), G coords(u)>``.

    The domain is indexed by ``(I, y-cell)`` and the range by ``(J, x-cell)``.
    The full grid uses every interval of scale <= depth on both sides;
    :meth:`reduced` keeps only intervals occurring in the support and the
    coarsest exact cell resolution per axis, which has the same singular
    values (up to zeros) because dropped coordinates do not enter the form
    and conditional expectation onto the support's resolution is a
    contraction that leaves every average unchanged.
    """

    def __init__(self, lam: CoefficientSequence, depth: int, *, _reduced: bool = False):
        if depth < lam.max_scale:
            raise ValueError(f"depth {depth} below the sequence's max scale {lam.max_scale}")
        self.lam = lam
        self.depth = depth
        blocks = lam.blocks()
        if _reduced:
            u_ids = np.unique(np.concatenate(
                [((1 << i) - 1 + b.px) for (i, _), b in blocks.items()] or [np.zeros(0, np.int64)]))
            g_ids = np.unique(np.concatenate(
                [((1 << j) - 1 + b.py) for (_, j), b in blocks.items()] or [np.zeros(0, np.int64)]))
            self.u_depth = max((j for _, j in blocks), default=0)
            self.g_depth = max((i for i, _ in blocks), default=0)
        else:
            u_ids = g_ids = np.arange((1 << (depth + 1)) - 1, dtype=np.int64)
            self.u_depth = self.g_depth = depth
        self.u_ids = u_ids
        self.g_ids = g_ids
        self.n_u = len(u_ids)
        self.n_g = len(g_ids)
        self.shape = (self.n_g << self.g_depth, self.n_u << self.u_depth)
        scale = 2.0 ** (-(self.u_depth + self.g_depth) / 2)
        self._terms = []
        for (i, j), b in blocks.items():
            ru = np.searchsorted(u_ids, (1 << i) - 1 + b.px)
            rg = np.searchsorted(g_ids, (1 << j) - 1 + b.py)
            w = b.val * 2.0 ** (i + j) * scale
            self._terms.append((i, j, ru, rg, b.px, b.py, w))

    @classmethod
    def reduced(cls, lam: CoefficientSequence, depth: int | None = None) -> "TruncatedFormOperator":
        return cls(lam, lam.max_scale if depth is None else depth, _reduced=True)

    # -- application ------------------------------------------------------

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.shape[1],):
            raise ValueError(f"expected vector of length {self.shape[1]}, got {x.shape}")
        X = x.reshape(self.n_u, 1 << self.u_depth)
        Y = np.zeros((self.n_g, 1 << self.g_depth))
        sums: dict[int, np.ndarray] = {}
        for i, j, ru, rg, px, py, w in self._terms:
            if j not in sums:
                sums[j] = X.reshape(self.n_u, 1 << j, -1).sum(axis=2)
            s = sums[j][ru, py]
            Yv = Y.reshape(self.n_g, 1 << i, -1)
            Yv[rg, px, :] += (w * s)[:, None]
        return Y.ravel()

    def adjoint_apply(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.shape[0],):
            raise ValueError(f"expected vector of length {self.shape[0]}, got {y.shape}")
        Y = y.reshape(self.n_g, 1 << self.g_depth)
        X = np.zeros((self.n_u, 1 << self.u_depth))
        sums: dict[int, np.ndarray] = {}
        for i, j, ru, rg, px, py, w in self._terms:
            if i not in sums:
                sums[i] = Y.reshape(self.n_g, 1 << i, -1).sum(axis=2)
            s = sums[i][rg, px]
            Xv = X.reshape(self.n_u, 1 << j, -1)
            Xv[ru, py, :] += (w * s)[:, None]
        return X.ravel()

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator(self.shape, matvec=self.apply, rmatvec=self.adjoint_apply,
                              dtype=float)

    def to_dense(self) -> np.ndarray:
        G = np.zeros((self.n_g, 1 << self.g_depth, self.n_u, 1 << self.u_depth))
        for i, j, ru, rg, px, py, w in self._terms:
            ki = 1 << (self.g_depth - i)
            kj = 1 << (self.u_depth - j)
            for a, b, p, q, c in zip(rg, ru, px, py, w):
                G[a, p * ki:(p + 1) * ki, b, q * kj:(q + 1) * kj] += c
        return G.reshape(self.shape)

    # -- coordinates ------------------------------------------------------

    def _coords(self, fam: FunctionFamily, ids: np.ndarray, depth: int) -> np.ndarray:
        if fam.depth != depth:
            raise ValueError(f"family depth {fam.depth} does not match operator depth {depth}")
        out = np.zeros((len(ids), 1 << depth))
        for key, vals in fam.members.items():
            k = np.searchsorted(ids, key.heap_index)
            if k < len(ids) and ids[k] == key.heap_index:
                out[k] = vals * 2.0 ** (-depth / 2)
        return out.ravel()

    def u_coords(self, u: FunctionFamily) -> np.ndarray:
        return self._coords(u, self.u_ids, self.u_depth)

    def g_coords(self, g: FunctionFamily) -> np.ndarray:
        return self._coords(g, self.g_ids, self.g_depth)

    def _family(self, coords: np.ndarray, ids: np.ndarray, depth: int) -> FunctionFamily:
        C = np.asarray(coords, dtype=float).reshape(len(ids), 1 << depth) * 2.0 ** (depth / 2)
        return FunctionFamily(depth, {DyadicInterval.from_heap_index(int(h)): C[k]
                                      for k, h in enumerate(ids) if np.any(C[k])})

    def u_family(self, x: np.ndarray) -> FunctionFamily:
        return self._family(x, self.u_ids, self.u_depth)

    def g_family(self, y: np.ndarray) -> FunctionFamily:
        return self._family(y, self.g_ids, self.g_depth)


def random_family(rng: np.random.Generator, depth: int, keys) -> FunctionFamily:
    """Independent standard normal cell values for every interval in ``keys``."""
    return FunctionFamily(depth, {k: rng.standard_normal(1 << depth) for k in keys})

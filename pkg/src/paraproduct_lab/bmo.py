"""Rectangular, product and mixed BMO norms, square functions and maximal
functions on the dyadic grid, and the embedding inequalities built on them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Literal

import numpy as np

from .constants import C_CAR, C_EMB
from .dyadic import DyadicRectangle, rect_contains
from .forms import FunctionFamily
from .sequences import CoefficientSequence

PROD_BMO_CAP = 20

Orientation = Literal["x-fixed", "y-fixed"]


# -- unions of dyadic rectangles -----------------------------------------------

class _CompressedGrid:
    """Cells cut out by all rectangle edges; each rectangle is a cell mask."""

    def __init__(self, rects: list[DyadicRectangle]):
        self.dx = max((r.x.scale for r in rects), default=0)
        self.dy = max((r.y.scale for r in rects), default=0)
        xe = {0, 1 << self.dx}
        ye = {0, 1 << self.dy}
        spans = []
        for r in rects:
            x0 = r.x.position << (self.dx - r.x.scale)
            x1 = (r.x.position + 1) << (self.dx - r.x.scale)
            y0 = r.y.position << (self.dy - r.y.scale)
            y1 = (r.y.position + 1) << (self.dy - r.y.scale)
            xe.update((x0, x1))
            ye.update((y0, y1))
            spans.append((x0, x1, y0, y1))
        self.xe = sorted(xe)
        self.ye = sorted(ye)
        # integer cell areas in units of 2**-(dx+dy)
        wx = [b - a for a, b in zip(self.xe, self.xe[1:])]
        wy = [b - a for a, b in zip(self.ye, self.ye[1:])]
        self.int_areas = [[a * b for b in wy] for a in wx]
        self.areas = np.array(self.int_areas, dtype=float).ravel() * 2.0 ** -(self.dx + self.dy)
        shape = (len(wx), len(wy))
        masks = np.zeros((len(rects),) + shape, dtype=bool)
        xi = {v: k for k, v in enumerate(self.xe)}
        yi = {v: k for k, v in enumerate(self.ye)}
        for n, (x0, x1, y0, y1) in enumerate(spans):
            masks[n, xi[x0]:xi[x1], yi[y0]:yi[y1]] = True
        self.shape = shape
        self.masks = masks.reshape(len(rects), -1)

    def exact_measure(self, union: np.ndarray) -> Fraction:
        flat = [a for row in self.int_areas for a in row]
        total = sum(a for a, u in zip(flat, union) if u)
        return Fraction(total, 1 << (self.dx + self.dy))


@dataclass(frozen=True)
class RectangleUnion:
    """A finite union of dyadic rectangles inside the unit square."""

    parts: frozenset[DyadicRectangle]

    def __init__(self, parts: Iterable[DyadicRectangle]):
        object.__setattr__(self, "parts", frozenset(parts))

    def measure(self) -> Fraction:
        if not self.parts:
            return Fraction(0)
        grid = _CompressedGrid(sorted(self.parts))
        return grid.exact_measure(grid.masks.any(axis=0))

    def contains_rectangle(self, rect: DyadicRectangle) -> bool:
        if any(rect_contains(p, rect) for p in self.parts):
            return True
        grid = _CompressedGrid(sorted(self.parts) + [rect])
        union = grid.masks[:-1].any(axis=0)
        return not np.any(grid.masks[-1] & ~union)


# -- BMO norms ---------------------------------------------------------------

def _require_support(lam: CoefficientSequence):
    if lam.support_size == 0:
        raise ValueError("empty support")


def _grouped_max(ax: np.ndarray, ay: np.ndarray, w: np.ndarray) -> float:
    """Largest sum of ``w`` over equal ``(ax, ay)`` keys."""
    keys = np.stack([ax, ay])
    _, inv = np.unique(keys, axis=1, return_inverse=True)
    return float(np.bincount(inv.ravel(), weights=w).max())


def rect_bmo(lam: CoefficientSequence) -> float:
    """``sup_R (|R|^-1 sum_{R' in R} lam_R'^2)^{1/2}`` over dyadic rectangles ``R``."""
    _require_support(lam)
    blocks = lam.blocks()
    max_i = max(i for i, _ in blocks)
    max_j = max(j for _, j in blocks)
    best = 0.0
    for i0 in range(max_i + 1):
        for j0 in range(max_j + 1):
            parts = [(b.px >> (i - i0), b.py >> (j - j0), b.val ** 2)
                     for (i, j), b in blocks.items() if i >= i0 and j >= j0]
            if not parts:
                continue
            ax, ay, w = (np.concatenate(p) for p in zip(*parts))
            best = max(best, _grouped_max(ax, ay, w) * 2.0 ** (i0 + j0))
    return math.sqrt(best)


def mixed_bmo(lam: CoefficientSequence, orientation: Orientation = "x-fixed") -> float:
    """One-parameter BMO condition with one interval pinned to the support.

    ``x-fixed``: sup over support intervals ``I0`` and dyadic ``J0`` of
    ``(|I0||J0|)^-1 sum_{J in J0} lam_{I0 J}^2``, square-rooted.  ``y-fixed``
    is the same with the roles of the variables exchanged.
    """
    if orientation not in ("x-fixed", "y-fixed"):
        raise ValueError("orientation must be 'x-fixed' or 'y-fixed'")
    _require_support(lam)
    blocks = lam.blocks()
    if orientation == "y-fixed":
        blocks = {(j, i): type(b)(b.py, b.px, b.val) for (i, j), b in blocks.items()}
    best = 0.0
    for i in sorted({i for i, _ in blocks}):
        row = {j: b for (ii, j), b in blocks.items() if ii == i}
        for j0 in range(max(row) + 1):
            parts = [(b.px, b.py >> (j - j0), b.val ** 2) for j, b in row.items() if j >= j0]
            if not parts:
                continue
            ax, ay, w = (np.concatenate(p) for p in zip(*parts))
            best = max(best, _grouped_max(ax, ay, w) * 2.0 ** (i + j0))
    return math.sqrt(best)


def _antichains(comparable: np.ndarray) -> Iterable[tuple[int, ...]]:
    """Nonempty sets of pairwise incomparable indices."""
    n = len(comparable)
    free = [sum(1 << b for b in range(n) if b > a and not comparable[a, b]) for a in range(n)]
    stack = [((a,), free[a]) for a in range(n - 1, -1, -1)]
    while stack:
        members, allowed = stack.pop()
        yield members
        bits = allowed
        children = []
        while bits:
            b = (bits & -bits).bit_length() - 1
            bits &= bits - 1
            children.append((members + (b,), allowed & free[b]))
        stack.extend(reversed(children))


def _union_ratio(grid: _CompressedGrid, vals2: np.ndarray, chosen) -> float:
    union = grid.masks[list(chosen)].any(axis=0)
    measure = float(grid.areas @ union)
    captured = ~np.any(grid.masks & ~union, axis=1)
    return float(vals2[captured].sum()) / measure


def prod_bmo_exact(lam: CoefficientSequence, cap: int = PROD_BMO_CAP) -> float:
    """Product BMO norm of a finitely supported sequence.

    An admissible set can be shrunk to the union of the support rectangles it
    contains without losing captured mass, and that union is the union of
    its maximal members, so it suffices to scan antichains of the support.
    """
    rects = sorted(lam.sparse().entries)
    if len(rects) > cap:
        raise ValueError(f"support {len(rects)} exceeds the exact cap {cap}; use prod_bmo_greedy")
    if not rects:
        return 0.0
    vals2 = np.array([lam.get(r) ** 2 for r in rects])
    grid = _CompressedGrid(rects)
    comparable = np.array([[rect_contains(a, b) or rect_contains(b, a) for b in rects]
                           for a in rects])
    best = max(_union_ratio(grid, vals2, ch) for ch in _antichains(comparable))
    return math.sqrt(best)


def prod_bmo_greedy(lam: CoefficientSequence) -> float:
    """Lower bound for the product BMO norm by greedy union growth, and rect BMO."""
    _require_support(lam)
    rects = sorted(lam.sparse().entries)
    vals2 = np.array([lam.get(r) ** 2 for r in rects])
    grid = _CompressedGrid(rects)
    remaining = set(range(len(rects)))
    start = max(remaining, key=lambda k: _union_ratio(grid, vals2, (k,)))
    chosen = [start]
    remaining.discard(start)
    best = _union_ratio(grid, vals2, chosen)
    while remaining:
        ratio, k = max((_union_ratio(grid, vals2, chosen + [k]), k) for k in remaining)
        chosen.append(k)
        remaining.discard(k)
        best = max(best, ratio)
    return max(math.sqrt(best), rect_bmo(lam))


# -- step functions, square and maximal functions -----------------------------

@dataclass
class Step2D:
    """Function on [0,1)^2 constant on the ``2**depth x 2**depth`` cells, indexed ``[x, y]``."""

    depth: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n = 1 << self.depth
        if self.values.shape != (n, n):
            raise ValueError(f"expected shape {(n, n)}, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite cell values")

    @property
    def cell_area(self) -> float:
        return 4.0 ** -self.depth

    def l1(self) -> float:
        return float(np.abs(self.values).sum()) * self.cell_area

    def l2(self) -> float:
        return math.sqrt(float((self.values ** 2).sum()) * self.cell_area)

    def measure(self, mask: np.ndarray) -> float:
        return float(np.count_nonzero(mask)) * self.cell_area

    def rect_average(self, rect: DyadicRectangle) -> float:
        cx = rect.x.cells(self.depth)
        cy = rect.y.cells(self.depth)
        return float(self.values[cx.start:cx.stop, cy.start:cy.stop].mean())


def _upsample(L: np.ndarray, depth: int) -> np.ndarray:
    kx = (1 << depth) // L.shape[0]
    ky = (1 << depth) // L.shape[1]
    return np.repeat(np.repeat(L, kx, axis=0), ky, axis=1)


def square_function(A: CoefficientSequence, depth: int) -> Step2D:
    """``s_A = (sum_R A_R^2 1_R / |R|)^{1/2}`` evaluated cell by cell."""
    if depth < A.max_scale:
        raise ValueError(f"depth {depth} below the sequence's max scale {A.max_scale}")
    sq = np.zeros((1 << depth, 1 << depth))
    for (i, j), b in A.blocks().items():
        L = np.zeros((1 << i, 1 << j))
        L[b.px, b.py] = b.val ** 2 * 2.0 ** (i + j)
        sq += _upsample(L, depth)
    return Step2D(depth, np.sqrt(sq))


def strong_maximal(f: Step2D) -> Step2D:
    """Cellwise sup of averages of ``|f|`` over dyadic rectangles containing the cell."""
    a = np.abs(f.values)
    d = f.depth
    out = a.copy()
    for i0 in range(d + 1):
        for j0 in range(d + 1):
            means = a.reshape(1 << i0, 1 << (d - i0), 1 << j0, 1 << (d - j0)).mean(axis=(1, 3))
            np.maximum(out, _upsample(means, d), out=out)
    return Step2D(d, out)


def dyadic_maximal(values: np.ndarray) -> np.ndarray:
    """One-variable dyadic maximal function of a step function on ``len(values)`` cells."""
    a = np.abs(np.asarray(values, dtype=float))
    n = len(a)
    d = n.bit_length() - 1
    if n != 1 << d:
        raise ValueError("number of cells must be a power of two")
    out = a.copy()
    for s in range(d + 1):
        means = a.reshape(1 << s, -1).mean(axis=1)
        np.maximum(out, np.repeat(means, n >> s), out=out)
    return out


# -- embedding inequalities ---------------------------------------------------

@dataclass
class LevelSet:
    k: int
    measure_U: float
    measure_V: float
    captured: list[DyadicRectangle]
    captured_inside_V: bool

    def to_json(self) -> dict:
        return {"k": self.k, "measure_U": self.measure_U, "measure_V": self.measure_V,
                "captured": [r.to_json() for r in self.captured],
                "captured_inside_V": self.captured_inside_V}


@dataclass
class EmbeddingReport:
    lhs: float
    bmo: float
    sA_l1: float
    constant: float
    levels: list[LevelSet] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.lhs <= self.constant * self.bmo * self.sA_l1 + 1e-12

    def to_json(self) -> dict:
        return {"lhs": self.lhs, "bmo": self.bmo, "sA_l1": self.sA_l1,
                "constant": self.constant, "pass": self.passed,
                "levels": [lv.to_json() for lv in self.levels]}


def _level_sets(A: CoefficientSequence, s: Step2D) -> list[LevelSet]:
    positive = s.values[s.values > 0]
    if positive.size == 0:
        return []
    k_lo = math.floor(math.log2(positive.min())) - 1
    k_hi = math.ceil(math.log2(positive.max())) - 1
    levels = []
    for k in range(k_lo, k_hi + 1):
        U = s.values > 2.0 ** k
        if not U.any():
            continue
        V = strong_maximal(Step2D(s.depth, U.astype(float))).values > 0.5
        Uf = Step2D(s.depth, U.astype(float))
        Vf = Step2D(s.depth, V.astype(float))
        captured = [r for r in sorted(A.sparse().entries) if Uf.rect_average(r) > 0.5]
        inside = all(Vf.rect_average(r) == 1.0 for r in captured)
        levels.append(LevelSet(k, s.measure(U), s.measure(V), captured, inside))
    return levels


def embedding_check(lam: CoefficientSequence, A: CoefficientSequence, depth: int,
                    constant: float = C_EMB) -> EmbeddingReport:
    """``sum |lam_R||A_R|`` against ``constant * ||lam||_BMOprod * ||s_A||_1``."""
    lhs = float(sum(abs(v) * abs(A.get(r)) for r, v in lam.sparse().items()))
    bmo = prod_bmo_exact(lam)
    s = square_function(A, depth)
    return EmbeddingReport(lhs, bmo, s.l1(), constant, _level_sets(A, s))


@dataclass
class MixedEmbeddingReport:
    lhs: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.lhs <= self.bound + 1e-12

    def to_json(self) -> dict:
        return {"lhs": self.lhs, "bound": self.bound, "pass": self.passed}


def mixed_embedding_check(lam: CoefficientSequence, u: FunctionFamily, g: FunctionFamily,
                          constant: float = C_CAR) -> MixedEmbeddingReport:
    """Absolute form against ``constant * mixed_bmo * ||(g_J)||_{l2 L2} * sum_I ||u_I||``."""
    if u.depth != g.depth:
        raise ValueError("families at different depths")
    lhs = 0.0
    for rect, v in lam.sparse().items():
        if rect.y in g.members and rect.x in u.members:
            lhs += abs(v * g.average(rect.y, rect.x) * u.average(rect.x, rect.y))
    if lam.support_size == 0:
        return MixedEmbeddingReport(lhs, 0.0)
    bound = constant * mixed_bmo(lam, "x-fixed") * g.norm() * u.l1_of_norms()
    return MixedEmbeddingReport(lhs, bound)

"""Coefficient sequences indexed by dyadic rectangles, and the named examples.

Two storage layouts share one interface:

* :class:`CoefficientSequence` keeps an explicit sparse map rectangle -> value.
* :class:`ScaleInvariantSequence` keeps one value per scale pair ``(i, j)``
  for every rectangle inside the unit square.  Lifts of ``n x n`` matrices
  have ``(2**n - 1)**2`` nonzero entries, so anything bigger than a handful of
  scales cannot be stored rectangle by rectangle.

Numerical code consumes sequences through :meth:`CoefficientSequence.blocks`,
which groups the support by scale pair into flat numpy arrays.
"""
from __future__ import annotations

import json
import math
from collections.abc import Callable, Iterator, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import NamedTuple

import numpy as np

from .dyadic import MAX_SCALE, DyadicInterval, DyadicRectangle

# Largest support materialised rectangle by rectangle.
MATERIALIZE_CAP = 1 << 21
WALSH_MAX_M = 12
HADAMARD_MAX_M = 6


class ScaleBlock(NamedTuple):
    """Support entries at one scale pair: x positions, y positions, values."""

    px: np.ndarray
    py: np.ndarray
    val: np.ndarray


class CoefficientSequence:
    """Finitely supported real sequence indexed by dyadic rectangles in [0,1)^2.

    Zero values are dropped; absent rectangles read as zero.  Instances are
    immutable.
    """

    def __init__(self, entries: Mapping[DyadicRectangle, float] | None = None):
        clean: dict[DyadicRectangle, float] = {}
        for rect, value in (entries or {}).items():
            if not isinstance(rect, DyadicRectangle):
                raise TypeError(f"keys must be DyadicRectangle, got {type(rect).__name__}")
            value = float(value)
            if not math.isfinite(value):
                raise ValueError(f"non-finite value at {rect}")
            if value != 0.0:
                clean[rect] = value
        self._entries = MappingProxyType(clean)
        self._blocks: dict[tuple[int, int], ScaleBlock] | None = None

    # -- basic access -----------------------------------------------------

    @property
    def entries(self) -> Mapping[DyadicRectangle, float]:
        return self._entries

    def items(self):
        return self.entries.items()

    def get(self, rect: DyadicRectangle) -> float:
        return self._entries.get(rect, 0.0)

    @property
    def support_size(self) -> int:
        return len(self._entries)

    def __len__(self) -> int:
        return self.support_size

    def __bool__(self) -> bool:
        return self.support_size > 0

    @property
    def max_scale(self) -> int:
        """Largest scale in the support (0 for the empty sequence)."""
        return max((max(r.x.scale, r.y.scale) for r in self._entries), default=0)

    def scale_pairs(self) -> list[tuple[int, int]]:
        return sorted(self.blocks())

    def blocks(self) -> dict[tuple[int, int], ScaleBlock]:
        if self._blocks is None:
            grouped: dict[tuple[int, int], list] = {}
            for rect, v in self._entries.items():
                grouped.setdefault(rect.scales, []).append((rect.x.position, rect.y.position, v))
            blocks = {}
            for key in sorted(grouped):
                arr = grouped[key]
                blocks[key] = ScaleBlock(
                    np.array([a[0] for a in arr], dtype=np.int64),
                    np.array([a[1] for a in arr], dtype=np.int64),
                    np.array([a[2] for a in arr], dtype=float),
                )
            self._blocks = blocks
        return self._blocks

    def map_values(self, fn: Callable[[DyadicRectangle, float], float]) -> "CoefficientSequence":
        return CoefficientSequence({r: fn(r, v) for r, v in self.items()})

    def sparse(self) -> "CoefficientSequence":
        return self

    # -- arithmetic used by the norm-axiom checks ------------------------

    def __mul__(self, c: float) -> "CoefficientSequence":
        return self.map_values(lambda r, v: c * v)

    __rmul__ = __mul__

    def __neg__(self) -> "CoefficientSequence":
        return self * -1.0

    def __add__(self, other: "CoefficientSequence") -> "CoefficientSequence":
        out = dict(self.sparse().items())
        for r, v in other.sparse().items():
            out[r] = out.get(r, 0.0) + v
        return CoefficientSequence(out)

    def __sub__(self, other: "CoefficientSequence") -> "CoefficientSequence":
        return self + (-other.sparse())

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoefficientSequence):
            return NotImplemented
        if self.support_size != other.support_size:
            return False
        return dict(self.items()) == dict(other.items())

    def __hash__(self):
        return hash(frozenset(self.items()))

    def __repr__(self):
        return f"{type(self).__name__}(support={self.support_size}, max_scale={self.max_scale})"

    # -- serialisation ----------------------------------------------------

    def to_json(self) -> dict:
        return {"entries": [dict(r.to_json(), val=v) for r, v in sorted(self.items())]}

    @staticmethod
    def from_json(obj: dict) -> "CoefficientSequence":
        if "scale_profile" in obj:
            return ScaleInvariantSequence(np.asarray(obj["scale_profile"], dtype=float))
        entries: dict[DyadicRectangle, float] = {}
        for item in obj["entries"]:
            rect = DyadicRectangle.from_json(item)
            if rect in entries:
                raise ValueError(f"duplicate rectangle {rect} in sequence file")
            value = float(item["val"])
            if not math.isfinite(value):
                raise ValueError(f"non-finite value at {rect}")
            entries[rect] = value
        return CoefficientSequence(entries)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1))

    @staticmethod
    def load(path: str | Path) -> "CoefficientSequence":
        return CoefficientSequence.from_json(json.loads(Path(path).read_text()))


class ScaleInvariantSequence(CoefficientSequence):
    """``lambda_{IJ} = profile[i, j]`` for every ``I x J`` in [0,1)^2 with scales ``(i, j)``."""

    def __init__(self, profile):
        profile = np.array(profile, dtype=float, ndmin=2)
        if profile.ndim != 2:
            raise ValueError("profile must be a matrix")
        if not np.all(np.isfinite(profile)):
            raise ValueError("profile has non-finite entries")
        nz = np.argwhere(profile != 0)
        if len(nz):
            profile = profile[: nz[:, 0].max() + 1, : nz[:, 1].max() + 1]
        else:
            profile = np.zeros((0, 0))
        if max(profile.shape) > MAX_SCALE + 1:
            raise ValueError(f"profile needs scales beyond {MAX_SCALE}")
        profile.setflags(write=False)
        self.profile = profile
        self._entries_cache = None
        self._blocks = None

    @property
    def entries(self) -> Mapping[DyadicRectangle, float]:
        if self._entries_cache is None:
            if self.support_size > MATERIALIZE_CAP:
                raise MemoryError(
                    f"support of {self.support_size} rectangles exceeds {MATERIALIZE_CAP}")
            self._entries_cache = MappingProxyType(dict(self._iter_entries()))
        return self._entries_cache

    def _iter_entries(self) -> Iterator[tuple[DyadicRectangle, float]]:
        for (i, j), v in np.ndenumerate(self.profile):
            if v == 0:
                continue
            for px in range(1 << i):
                x = DyadicInterval(i, px)
                for py in range(1 << j):
                    yield DyadicRectangle(x, DyadicInterval(j, py)), float(v)

    def items(self):
        return self.entries.items()

    def get(self, rect: DyadicRectangle) -> float:
        i, j = rect.scales
        if i < self.profile.shape[0] and j < self.profile.shape[1]:
            return float(self.profile[i, j])
        return 0.0

    @property
    def support_size(self) -> int:
        i, j = np.nonzero(self.profile)
        return int(sum(1 << int(a + b) for a, b in zip(i, j)))

    @property
    def max_scale(self) -> int:
        return max(self.profile.shape, default=1) - 1 if self.profile.size else 0

    def blocks(self) -> dict[tuple[int, int], ScaleBlock]:
        if self._blocks is None:
            if self.support_size > MATERIALIZE_CAP:
                raise MemoryError(
                    f"support of {self.support_size} rectangles exceeds {MATERIALIZE_CAP}")
            blocks = {}
            for (i, j), v in np.ndenumerate(self.profile):
                if v == 0:
                    continue
                px, py = np.meshgrid(np.arange(1 << i, dtype=np.int64),
                                     np.arange(1 << j, dtype=np.int64), indexing="ij")
                blocks[(i, j)] = ScaleBlock(px.ravel(), py.ravel(), np.full(px.size, float(v)))
            self._blocks = blocks
        return self._blocks

    def scale_pairs(self) -> list[tuple[int, int]]:
        return [tuple(map(int, k)) for k in np.argwhere(self.profile != 0)]

    def sparse(self) -> CoefficientSequence:
        return CoefficientSequence(self.entries)

    def map_values(self, fn):
        return self.sparse().map_values(fn)

    def __mul__(self, c: float) -> "ScaleInvariantSequence":
        return ScaleInvariantSequence(c * self.profile)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if isinstance(other, ScaleInvariantSequence):
            return self.profile.shape == other.profile.shape and bool(
                np.array_equal(self.profile, other.profile))
        return super().__eq__(other)

    def __hash__(self):
        return hash((self.profile.shape, self.profile.tobytes()))

    def to_json(self) -> dict:
        if self.support_size <= MATERIALIZE_CAP:
            return super().to_json()
        return {"scale_profile": self.profile.tolist()}


@dataclass(frozen=True)
class SignPattern:
    """Signs on rectangles; rectangles not listed take ``default``."""

    signs: Mapping[DyadicRectangle, int] = field(default_factory=dict)
    default: int = 1

    def __post_init__(self):
        if self.default not in (1, -1) or any(s not in (1, -1) for s in self.signs.values()):
            raise ValueError("signs must be +1 or -1")

    def __getitem__(self, rect: DyadicRectangle) -> int:
        return self.signs.get(rect, self.default)


# -- transformations ------------------------------------------------------

def abs_seq(lam: CoefficientSequence) -> CoefficientSequence:
    if isinstance(lam, ScaleInvariantSequence):
        return ScaleInvariantSequence(np.abs(lam.profile))
    return lam.map_values(lambda r, v: abs(v))


def apply_signs(lam: CoefficientSequence, eps: SignPattern | Mapping) -> CoefficientSequence:
    if not isinstance(eps, SignPattern):
        eps = SignPattern(dict(eps))
    if isinstance(lam, ScaleInvariantSequence) and not eps.signs:
        return lam * eps.default
    return lam.map_values(lambda r, v: eps[r] * v)


def product_sign_flip(lam: CoefficientSequence,
                      eps_x: Mapping[DyadicInterval, int] | Callable[[DyadicInterval], int],
                      eps_y: Mapping[DyadicInterval, int] | Callable[[DyadicInterval], int],
                      ) -> CoefficientSequence:
    """Multiply the entry at ``I x J`` by ``eps_x(I) * eps_y(J)``.

    Mappings default to +1 for intervals they do not list.
    """
    fx = eps_x if callable(eps_x) else (lambda I: eps_x.get(I, 1))
    fy = eps_y if callable(eps_y) else (lambda J: eps_y.get(J, 1))
    return lam.map_values(lambda r, v: fx(r.x) * fy(r.y) * v)


# -- constructors ---------------------------------------------------------

def lift_matrix(A) -> ScaleInvariantSequence:
    """Place ``2**(-(i+j)/2) * A[i, j]`` on every rectangle with scales ``(i, j)``."""
    A = np.array(A, dtype=float, ndmin=2)
    if A.ndim != 2:
        raise ValueError("expected a matrix")
    if max(A.shape) > MAX_SCALE + 1:
        raise ValueError(f"matrix of shape {A.shape} needs scales beyond {MAX_SCALE}")
    i = np.arange(A.shape[0])[:, None]
    j = np.arange(A.shape[1])[None, :]
    return ScaleInvariantSequence(A * 2.0 ** (-(i + j) / 2))


def unlift(lam: ScaleInvariantSequence) -> np.ndarray:
    """Inverse of :func:`lift_matrix` (trailing zero rows/columns dropped)."""
    p = lam.profile
    i = np.arange(p.shape[0])[:, None]
    j = np.arange(p.shape[1])[None, :]
    return p * 2.0 ** ((i + j) / 2)


def identity_example(depth: int) -> ScaleInvariantSequence:
    """``|I|^{1/2} |J|^{1/2}`` on equal-size rectangles of scale <= depth."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    return lift_matrix(np.eye(depth + 1))


def column_example(depth: int) -> CoefficientSequence:
    """``2**(-j/2)`` on ``[0,1) x [0, 2**-j)`` for j = 0..depth."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    return CoefficientSequence({
        DyadicRectangle.of(0, 0, j, 0): 2.0 ** (-j / 2) for j in range(depth + 1)
    })


def walsh_hadamard(m: int) -> np.ndarray:
    """Sylvester ``2**m x 2**m`` sign matrix with ``H @ H.T == 2**m * I``."""
    if not 0 <= m <= WALSH_MAX_M:
        raise ValueError(f"m must be in [0, {WALSH_MAX_M}]")
    H = np.ones((1, 1), dtype=np.int64)
    for _ in range(m):
        H = np.block([[H, H], [H, -H]])
    return H


def hadamard_sequence(m: int) -> ScaleInvariantSequence:
    if not 0 <= m <= HADAMARD_MAX_M:
        raise ValueError(f"m must be in [0, {HADAMARD_MAX_M}]")
    n = 1 << m
    return lift_matrix(walsh_hadamard(m) / math.sqrt(n))


def random_sign_matrix(n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    return rng.choice(np.array([-1.0, 1.0]), size=(n, n))


def random_sequence(rng: np.random.Generator, depth: int, size: int) -> CoefficientSequence:
    """``size`` distinct rectangles of scale <= depth with standard normal values."""
    n_per_axis = (1 << (depth + 1)) - 1
    size = min(size, n_per_axis ** 2)
    chosen = rng.choice(n_per_axis ** 2, size=size, replace=False)
    entries = {}
    for idx in chosen:
        hx, hy = divmod(int(idx), n_per_axis)
        rect = DyadicRectangle(DyadicInterval.from_heap_index(hx), DyadicInterval.from_heap_index(hy))
        entries[rect] = rng.standard_normal()
    return CoefficientSequence(entries)


# -- matrix files ---------------------------------------------------------

def save_matrix(A, path: str | Path) -> None:
    np.savetxt(path, np.asarray(A, dtype=float), delimiter=",", fmt="%.17g")


def load_matrix(path: str | Path) -> np.ndarray:
    A = np.loadtxt(path, delimiter=",", ndmin=2)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix file has non-finite entries")
    return A

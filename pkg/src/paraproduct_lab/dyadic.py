"""Exact dyadic geometry on [0,1) and [0,1)^2.

Intervals are stored as integer ``(scale, position)`` pairs, so containment,
ancestry and measure never touch floating point.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

MAX_SCALE = 52


@dataclass(frozen=True, order=True, slots=True)
class DyadicInterval:
    """The interval ``[position * 2**-scale, (position + 1) * 2**-scale)``."""

    scale: int
    position: int

    def __post_init__(self):
        if not 0 <= self.scale <= MAX_SCALE:
            raise ValueError(f"scale {self.scale} outside [0, {MAX_SCALE}]")
        if not 0 <= self.position < (1 << self.scale):
            raise ValueError(f"position {self.position} outside [0, 2**{self.scale})")

    @property
    def length(self) -> float:
        return 2.0 ** -self.scale

    @property
    def left(self) -> float:
        return self.position * 2.0 ** -self.scale

    @property
    def right(self) -> float:
        return (self.position + 1) * 2.0 ** -self.scale

    @property
    def heap_index(self) -> int:
        """Index in the breadth-first ordering of the dyadic tree."""
        return (1 << self.scale) - 1 + self.position

    @classmethod
    def from_heap_index(cls, index: int) -> "DyadicInterval":
        scale = (index + 1).bit_length() - 1
        return cls(scale, index + 1 - (1 << scale))

    def parent(self) -> "DyadicInterval":
        if self.scale == 0:
            raise ValueError("[0,1) has no parent inside the unit interval")
        return DyadicInterval(self.scale - 1, self.position >> 1)

    def ancestor(self, scale: int) -> "DyadicInterval":
        if scale > self.scale:
            raise ValueError("ancestor must be at a coarser scale")
        return DyadicInterval(scale, self.position >> (self.scale - scale))

    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        return (DyadicInterval(self.scale + 1, 2 * self.position),
                DyadicInterval(self.scale + 1, 2 * self.position + 1))

    def cells(self, depth: int) -> range:
        """Positions of the scale-``depth`` cells inside this interval."""
        if depth < self.scale:
            raise ValueError("cells must be at least as fine as the interval")
        shift = depth - self.scale
        return range(self.position << shift, (self.position + 1) << shift)

    def to_json(self) -> dict:
        return {"s": self.scale, "p": self.position}

    @classmethod
    def from_json(cls, obj: dict) -> "DyadicInterval":
        return cls(int(obj["s"]), int(obj["p"]))

    def __repr__(self):
        return f"I({self.scale},{self.position})"


UNIT = DyadicInterval(0, 0)


@dataclass(frozen=True, order=True, slots=True)
class DyadicRectangle:
    x: DyadicInterval
    y: DyadicInterval

    @classmethod
    def of(cls, sx: int, px: int, sy: int, py: int) -> "DyadicRectangle":
        return cls(DyadicInterval(sx, px), DyadicInterval(sy, py))

    @property
    def area(self) -> float:
        return 2.0 ** -(self.x.scale + self.y.scale)

    @property
    def scales(self) -> tuple[int, int]:
        return self.x.scale, self.y.scale

    def to_json(self) -> dict:
        return {"sx": self.x.scale, "px": self.x.position,
                "sy": self.y.scale, "py": self.y.position}

    @classmethod
    def from_json(cls, obj: dict) -> "DyadicRectangle":
        # "pl" is accepted as an alias of "py" for older sequence files
        py = obj["py"] if "py" in obj else obj["pl"]
        return cls.of(int(obj["sx"]), int(obj["px"]), int(obj["sy"]), int(py))

    def __repr__(self):
        return f"R({self.x.scale},{self.x.position}|{self.y.scale},{self.y.position})"


UNIT_SQUARE = DyadicRectangle(UNIT, UNIT)


@dataclass(frozen=True)
class GridSpec:
    """Truncation to intervals of scale <= depth, with step functions on scale-depth cells."""

    depth: int

    def __post_init__(self):
        if not 0 <= self.depth <= MAX_SCALE:
            raise ValueError(f"depth {self.depth} outside [0, {MAX_SCALE}]")

    @property
    def n_intervals(self) -> int:
        return (1 << (self.depth + 1)) - 1

    @property
    def n_cells(self) -> int:
        return 1 << self.depth

    def intervals(self) -> Iterator[DyadicInterval]:
        for s in range(self.depth + 1):
            for p in range(1 << s):
                yield DyadicInterval(s, p)

    def cells(self) -> Iterator[DyadicInterval]:
        for p in range(self.n_cells):
            yield DyadicInterval(self.depth, p)


def contains(outer: DyadicInterval, inner: DyadicInterval) -> bool:
    """True iff ``inner`` is a subset of ``outer``."""
    if inner.scale < outer.scale:
        return False
    return inner.position >> (inner.scale - outer.scale) == outer.position


def rect_contains(outer: DyadicRectangle, inner: DyadicRectangle) -> bool:
    return contains(outer.x, inner.x) and contains(outer.y, inner.y)


def interval_containing(point: float, scale: int) -> DyadicInterval:
    if not 0.0 <= point < 1.0:
        raise ValueError(f"point {point!r} outside [0, 1)")
    # floor(point * 2**scale) is exact: scaling by a power of two is exact
    return DyadicInterval(scale, int(np.floor(point * 2.0 ** scale)))


def least_common_ancestor(a: DyadicInterval, b: DyadicInterval) -> DyadicInterval:
    s = min(a.scale, b.scale)
    pa = a.position >> (a.scale - s)
    pb = b.position >> (b.scale - s)
    while pa != pb:
        pa >>= 1
        pb >>= 1
        s -= 1
    return DyadicInterval(s, pa)


def haar_value(interval: DyadicInterval, cell: DyadicInterval) -> float:
    """Value of the L2-normalised Haar function of ``interval`` on ``cell``."""
    if cell.scale < interval.scale:
        raise ValueError("cell is coarser than the Haar interval")
    if cell.scale == interval.scale:
        if cell.position != interval.position:
            return 0.0
        raise ValueError("Haar function is not constant on its own interval")
    if not contains(interval, cell):
        return 0.0
    amp = 2.0 ** (interval.scale / 2)
    half = cell.position >> (cell.scale - interval.scale - 1)
    return amp if half % 2 == 0 else -amp


def haar_vector(interval: DyadicInterval, depth: int) -> np.ndarray:
    """Cell values of the Haar function of ``interval`` at resolution ``depth``."""
    if depth <= interval.scale:
        raise ValueError("need depth > scale to resolve a Haar function")
    out = np.zeros(1 << depth)
    cells = interval.cells(depth)
    mid = (cells.start + cells.stop) // 2
    amp = 2.0 ** (interval.scale / 2)
    out[cells.start:mid] = amp
    out[mid:cells.stop] = -amp
    return out


def indicator_vector(interval: DyadicInterval, depth: int) -> np.ndarray:
    out = np.zeros(1 << depth)
    cells = interval.cells(depth)
    out[cells.start:cells.stop] = 1.0
    return out

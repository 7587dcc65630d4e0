"""Shared lattice-geometry plumbing: boxes, the sup metric, grids and masks.

Everything downstream (covers, partitions, adversary) measures distances in
the sup (Chebyshev) metric, where unit king moves on Z^d have length 1 and
the distance transform of a mask is the chessboard transform.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage


class DomainError(ValueError):
    """A precondition on operation inputs was violated."""


class BudgetError(RuntimeError):
    """A resource budget (point count, search nodes) was exceeded."""


import os

# Global cap on dense grid cells a single operation may allocate.
POINT_BUDGET = int(os.environ.get("COARSEDIM_POINT_BUDGET", 20_000_000))


def linf(a: Sequence[int], b: Sequence[int]) -> int:
    """Sup distance between two lattice points."""
    if len(a) != len(b):
        raise DomainError(f"dimension mismatch: {len(a)} vs {len(b)}")
    return max(abs(int(x) - int(y)) for x, y in zip(a, b))


def set_distance(pts_a: np.ndarray, pts_b: np.ndarray) -> float:
    """Min pairwise sup distance between two point arrays (inf if either empty)."""
    from scipy.spatial.distance import cdist

    a = np.asarray(pts_a)
    b = np.asarray(pts_b)
    if a.size == 0 or b.size == 0:
        return float("inf")
    a = a.reshape(len(a), -1).astype(np.float64)
    b = b.reshape(len(b), -1).astype(np.float64)
    best = np.inf
    # chunk so the pairwise matrix stays bounded
    step = max(1, 4_000_000 // max(1, len(b)))
    for i in range(0, len(a), step):
        d = cdist(a[i : i + step], b, metric="chebyshev")
        best = min(best, float(d.min()))
    return best


def set_diameter(pts: np.ndarray) -> int:
    """Sup diameter of a point set; 0 for empty or singleton sets."""
    p = np.asarray(pts)
    if p.size == 0:
        return 0
    p = p.reshape(len(p), -1)
    return int((p.max(axis=0) - p.min(axis=0)).max())


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned integer box [lo, hi] (coordinatewise, inclusive)."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise DomainError("box lo/hi dimension mismatch")
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise DomainError(f"box has empty sides: {self.lo}..{self.hi}")
        object.__setattr__(self, "lo", tuple(int(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(int(v) for v in self.hi))

    @classmethod
    def cube(cls, side: int, dim: int, lo: int = 0) -> "Box":
        return cls((lo,) * dim, (lo + side,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    @property
    def volume(self) -> int:
        v = 1
        for s in self.shape:
            v *= s
        return v

    @property
    def diameter(self) -> int:
        return max(h - l for l, h in zip(self.lo, self.hi))

    def contains(self, point: Sequence[int]) -> bool:
        if len(point) != self.dim:
            raise DomainError("point/box dimension mismatch")
        return all(l <= int(x) <= h for x, l, h in zip(point, self.lo, self.hi))

    def contains_box(self, other: "Box") -> bool:
        return all(l <= ol and oh <= h for l, h, ol, oh in
                   zip(self.lo, self.hi, other.lo, other.hi))

    def index_of(self, points: np.ndarray) -> tuple:
        """Points (k, dim) -> tuple of index arrays into a mask of self.shape."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.int64))
        off = pts - np.array(self.lo, dtype=np.int64)
        if off.size and ((off < 0).any() or (off >= np.array(self.shape)).any()):
            raise DomainError("points outside box")
        return tuple(off[:, i] for i in range(self.dim))

    def grid_coords(self) -> list:
        """Per-axis coordinate arrays (broadcastable over the mask shape)."""
        out = []
        for i, (l, s) in enumerate(zip(self.lo, self.shape)):
            shp = [1] * self.dim
            shp[i] = s
            out.append(np.arange(l, l + s, dtype=np.int64).reshape(shp))
        return out

    def check_budget(self, budget: int | None = None) -> None:
        cap = POINT_BUDGET if budget is None else budget
        if self.volume > cap:
            raise BudgetError(
                f"box volume {self.volume} exceeds point budget {cap}")

    def to_json(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}

    @classmethod
    def from_json(cls, obj: dict) -> "Box":
        return cls(tuple(obj["lo"]), tuple(obj["hi"]))


def points_to_mask(points: Iterable[Sequence[int]], box: Box) -> np.ndarray:
    mask = np.zeros(box.shape, dtype=bool)
    pts = np.array(sorted(tuple(int(v) for v in p) for p in points), dtype=np.int64)
    if pts.size:
        mask[box.index_of(pts)] = True
    mask.setflags(write=False)
    return mask

def mask_to_points(mask: np.ndarray, box: Box) -> list:
    idx = np.argwhere(mask)
    lo = np.array(box.lo, dtype=np.int64)
    return [tuple(int(v) for v in row) for row in idx + lo]


def chessboard_dt(target: np.ndarray) -> np.ndarray:
    """Exact sup distance from every cell to the nearest True cell.

    All-False targets give +inf everywhere (returned as a float array).
    """
    if not target.any():
        return np.full(target.shape, np.inf)
    return ndimage.distance_transform_cdt(~target, metric="chessboard")


def dilate_mask(mask: np.ndarray, radius: int) -> np.ndarray:
    """Closed sup-ball dilation, separable per axis (cost independent of radius)."""
    if radius <= 0:
        return mask.copy()
    out = mask.astype(np.uint8)
    for ax in range(mask.ndim):
        out = ndimage.maximum_filter1d(out, 2 * radius + 1, axis=ax,
                                       mode="constant", cval=0)
    return out.astype(bool)


def chessboard_dt_labeled(target: np.ndarray, labels: np.ndarray):
    """(distance, nearest-label) per cell, chessboard metric.

    labels must be >= 1 exactly on target cells.
    """
    dt, (inds) = ndimage.distance_transform_cdt(
        ~target, metric="chessboard", return_indices=True)
    near = labels[tuple(inds)]
    return dt.astype(np.int64), near


def king_offsets(dim: int) -> list:
    return [d for d in product((-1, 0, 1), repeat=dim) if any(d)]


def face_offsets(dim: int) -> list:
    out = []
    for i in range(dim):
        for s in (-1, 1):
            d = [0] * dim
            d[i] = s
            out.append(tuple(d))
    return out


def structure(dim: int, adjacency: str) -> np.ndarray:
    if adjacency == "vertex":
        return np.ones((3,) * dim, dtype=bool)
    if adjacency == "face":
        return ndimage.generate_binary_structure(dim, 1)
    raise DomainError(f"unknown adjacency {adjacency!r}")


def shifted_pairs(mask_a: np.ndarray, mask_b: np.ndarray, offsets) -> bool:
    """True iff some cell of mask_a is offset-adjacent to a cell of mask_b."""
    for off in offsets:
        sl_a = tuple(slice(max(0, -o), mask_a.shape[i] - max(0, o))
                     for i, o in enumerate(off))
        sl_b = tuple(slice(max(0, o), mask_b.shape[i] - max(0, -o))
                     for i, o in enumerate(off))
        if (mask_a[sl_a] & mask_b[sl_b]).any():
            return True
    return False


def integral_image(mask: np.ndarray) -> np.ndarray:
    """Zero-padded cumulative sum table for box-count queries."""
    acc = mask.astype(np.int64)
    for ax in range(mask.ndim):
        acc = np.cumsum(acc, axis=ax)
    pad = np.zeros(tuple(s + 1 for s in mask.shape), dtype=np.int64)
    pad[tuple(slice(1, None) for _ in range(mask.ndim))] = acc
    return pad


def box_counts(table: np.ndarray, lo_idx: list, hi_idx: list) -> np.ndarray:
    """Counts of True cells in [lo, hi] boxes, from an integral_image table.

    lo_idx/hi_idx are per-axis index arrays broadcastable to a common shape.
    """
    dim = table.ndim
    total = None
    for corner in product((0, 1), repeat=dim):
        idx = tuple((hi_idx[i] + 1) if corner[i] else lo_idx[i] for i in range(dim))
        sign = 1 if (dim - sum(corner)) % 2 == 0 else -1
        term = sign * table[idx]
        total = term if total is None else total + term
    return total


def rle_encode(mask: np.ndarray) -> str:
    """Run-length encoding of the C-order flattened mask: '0x12,1x3,...'."""
    flat = np.asarray(mask, dtype=bool).ravel()
    if flat.size == 0:
        return ""
    change = np.flatnonzero(np.diff(flat.view(np.int8)))
    starts = np.concatenate(([0], change + 1))
    ends = np.concatenate((change + 1, [flat.size]))
    return ",".join(f"{int(flat[s])}x{e - s}" for s, e in zip(starts, ends))


def rle_decode(text: str, shape: tuple) -> np.ndarray:
    size = int(np.prod(shape)) if shape else 0
    flat = np.zeros(size, dtype=bool)
    pos = 0
    if text:
        for token in text.split(","):
            bit, _, count = token.partition("x")
            n = int(count)
            if bit == "1":
                flat[pos : pos + n] = True
            pos += n
    if pos != size:
        raise DomainError(f"RLE length {pos} does not match shape {shape}")
    out = flat.reshape(shape)
    out.setflags(write=False)
    return out

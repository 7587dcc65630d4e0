"""The lattice space family given by scale exponents p and multiplicities q.

A space spec (p, q) with p nondecreasing and q nonnegative carves out the
points of (2^p1 Z)^N, N = sum(q), whose count of coordinates off each finer
grid 2^pk Z stays within the running budget q1+...+qk.  Specs violating the
monotonicity or sign conventions are accepted and denote the empty space.

All metric work is in the sup metric; a coarse disjoint union places distinct
components at distance (sum of indices) + (sum of box diameters) so that
cross-component distances grow without bound in the indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .geometry import Box, BudgetError, DomainError, linf


@dataclass(frozen=True)
class SpaceSpec:
    """Scale exponents p (nondecreasing) and multiplicities q; bad specs denote the empty space."""

    p: tuple
    q: tuple

    def __post_init__(self):
        if len(self.p) != len(self.q):
            raise DomainError("p and q must have equal length")
        object.__setattr__(self, "p", tuple(int(v) for v in self.p))
        object.__setattr__(self, "q", tuple(int(v) for v in self.q))

    @property
    def is_empty(self) -> bool:
        p, q = self.p, self.q
        if not p:
            return True
        if any(v < 0 for v in q) or any(v < 0 for v in p):
            return True
        return any(a > b for a, b in zip(p, p[1:]))

    @property
    def ambient_dim(self) -> int:
        return sum(self.q) if not self.is_empty else 0

    @property
    def ambient_step(self) -> int:
        """Grid pitch of the ambient lattice (2^p1 Z)^N."""
        return 2 ** self.p[0]

    def budgets(self) -> list:
        out, acc = [], 0
        for v in self.q:
            acc += v
            out.append(acc)
        return out

    def to_json(self) -> dict:
        return {"p": list(self.p), "q": list(self.q)}

    @classmethod
    def from_json(cls, obj: dict) -> "SpaceSpec":
        return cls(tuple(obj["p"]), tuple(obj["q"]))


def is_member(point: Sequence[int], spec: SpaceSpec) -> bool:
    """Membership of one lattice point (empty-space specs refuse everything)."""
    if spec.is_empty:
        return False
    n = spec.ambient_dim
    if len(point) != n:
        raise DomainError(f"point has dimension {len(point)}, space needs {n}")
    xs = [int(v) for v in point]
    if any(v % spec.ambient_step for v in xs):
        return False
    for pk, budget in zip(spec.p, spec.budgets()):
        mod = 2 ** pk
        if sum(1 for v in xs if v % mod) > budget:
            return False
    return True


def membership_mask(points: np.ndarray, spec: SpaceSpec) -> np.ndarray:
    """Vector membership over an array of points (k, N)."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.int64))
    if spec.is_empty:
        return np.zeros(len(pts), dtype=bool)
    if pts.shape[1] != spec.ambient_dim:
        raise DomainError("point array dimension mismatch")
    ok = (pts % spec.ambient_step == 0).all(axis=1)
    for pk, budget in zip(spec.p, spec.budgets()):
        off = (pts % (2 ** pk) != 0).sum(axis=1)
        ok &= off <= budget
    return ok


def enumerate_truncation(spec: SpaceSpec, box: Box,
                         budget: int | None = None) -> list:
    """All space points inside the box, lexicographically sorted."""
    if spec.is_empty:
        return []
    if box.dim != spec.ambient_dim:
        raise DomainError("box dimension does not match the space")
    box.check_budget(budget)
    step = spec.ambient_step
    axes = []
    for lo, hi in zip(box.lo, box.hi):
        start = -(-lo // step) * step
        axes.append(np.arange(start, hi + 1, step, dtype=np.int64))
    if any(len(a) == 0 for a in axes):
        return []
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    keep = membership_mask(pts, spec)
    return [tuple(int(v) for v in row) for row in pts[keep]]


def truncation_mask(spec: SpaceSpec, box: Box,
                    budget: int | None = None) -> np.ndarray:
    """Dense boolean mask of the truncated space over the box grid."""
    if box.dim != spec.ambient_dim and not spec.is_empty:
        raise DomainError("box dimension does not match the space")
    box.check_budget(budget)
    if spec.is_empty:
        return np.zeros(box.shape, dtype=bool)
    coords = box.grid_coords()
    ok = np.ones(box.shape, dtype=bool)
    for c in coords:
        ok &= (c % spec.ambient_step) == 0
    for pk, budget_k in zip(spec.p, spec.budgets()):
        mod = 2 ** pk
        off = np.zeros(box.shape, dtype=np.int16)
        for c in coords:
            off = off + (c % mod != 0)
        ok &= off <= budget_k
    return ok


def dist(a: Sequence[int], b: Sequence[int]) -> int:
    """Sup distance between points of one space."""
    return linf(a, b)


@dataclass(frozen=True)
class CoarseUnionSpec:
    """Finitely many indexed components (index, spec, truncation box)."""

    components: tuple

    def __post_init__(self):
        comps = []
        seen = set()
        for k, spec, box in self.components:
            k = int(k)
            if k <= 0:
                raise DomainError("component indices must be positive")
            if k in seen:
                raise DomainError(f"duplicate component index {k}")
            seen.add(k)
            comps.append((k, spec, box))
        object.__setattr__(self, "components", tuple(comps))

    def component(self, k: int):
        for idx, spec, box in self.components:
            if idx == k:
                return spec, box
        raise DomainError(f"unknown component index {k}")


def union_dist(a, b, union: CoarseUnionSpec) -> int:
    """Distance in the coarse disjoint union realization.

    Same component: the sup metric.  Distinct components k, m: k + m + D with
    D the sum of the two truncation-box diameters, which dominates k + m.
    """
    ka, pa = a
    kb, pb = b
    _, box_a = union.component(ka)
    _, box_b = union.component(kb)
    if ka == kb:
        return dist(pa, pb)
    return ka + kb + box_a.diameter + box_b.diameter

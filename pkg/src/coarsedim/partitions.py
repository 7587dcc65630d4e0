"""Discrete cubes, separators and their certificates.

A grid region is a finite set of lattice points in a reference box, carried
as a dense boolean mask.  A partition certificate (U, L, W) witnesses that L
separates the two designated faces of a region: the three parts tile the
region, no face-adjacent edge joins U to W, the faces lie in U and W, and for
a positive margin the separator keeps sup distance greater than epsilon from
both faces.

The builder realizes the separator as a level shell of a quotient
pseudo-distance from the negative face in which every obstacle set is
contracted (travel within one obstacle is free).  The pseudo-distance is
1-Lipschitz in the sup metric and constant on each obstacle, so a shell at a
level avoiding the obstacle values and keeping epsilon away from both ends
meets every certificate clause; sides U and W never touch because adjacent
points differ by at most one level.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .covers import CoverFamily, verify_family
from .geometry import (Box, DomainError, chessboard_dt, face_offsets,
                       mask_to_points, points_to_mask, rle_decode, rle_encode,
                       set_distance, shifted_pairs, structure)


class BuildPartitionError(RuntimeError):
    """No admissible separator level existed; with checked preconditions this is a bug signal."""


@dataclass(frozen=True, eq=False)
class GridRegion:
    """Immutable set of lattice points inside a reference box."""

    box: Box
    mask: np.ndarray
    adjacency: str = "face"

    def __post_init__(self):
        if self.adjacency not in ("face", "vertex"):
            raise DomainError(f"unknown adjacency {self.adjacency!r}")
        m = np.asarray(self.mask, dtype=bool)
        if m.shape != self.box.shape:
            raise DomainError("mask shape does not match box")
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    # --- constructors ------------------------------------------------------
    @classmethod
    def from_points(cls, points: Iterable, box: Box,
                    adjacency: str = "face") -> "GridRegion":
        return cls(box, points_to_mask(points, box), adjacency)

    @classmethod
    def full(cls, box: Box, adjacency: str = "face") -> "GridRegion":
        return cls(box, np.ones(box.shape, dtype=bool), adjacency)

    @classmethod
    def empty(cls, box: Box, adjacency: str = "face") -> "GridRegion":
        return cls(box, np.zeros(box.shape, dtype=bool), adjacency)

    def replace_mask(self, mask: np.ndarray) -> "GridRegion":
        return GridRegion(self.box, mask, self.adjacency)

    # --- queries -----------------------------------------------------------
    @property
    def count(self) -> int:
        return int(self.mask.sum())

    def points(self) -> list:
        return mask_to_points(self.mask, self.box)

    def contains(self, point) -> bool:
        if not self.box.contains(point):
            return False
        idx = tuple(int(x) - l for x, l in zip(point, self.box.lo))
        return bool(self.mask[idx])

    def is_subset(self, other: "GridRegion") -> bool:
        if self.box != other.box:
            raise DomainError("regions live in different boxes")
        return bool((~other.mask & self.mask).sum() == 0)

    def same_points(self, other: "GridRegion") -> bool:
        return self.box == other.box and bool((self.mask == other.mask).all())

    def component_labels(self):
        labels, n = ndimage.label(self.mask,
                                  structure=structure(self.box.dim, self.adjacency))
        return labels, n

    # --- serialization -----------------------------------------------------
    def to_json(self) -> dict:
        return {"box": self.box.to_json(), "adjacency": self.adjacency,
                "rle": rle_encode(self.mask)}

    @classmethod
    def from_json(cls, obj: dict) -> "GridRegion":
        box = Box.from_json(obj["box"])
        return cls(box, rle_decode(obj["rle"], box.shape), obj["adjacency"])

    def __repr__(self):
        return (f"GridRegion(box={self.box.lo}..{self.box.hi}, "
                f"adjacency={self.adjacency}, count={self.count})")


@dataclass(frozen=True)
class FacePair:
    """The opposite faces of the reference box orthogonal to one axis."""

    axis: int

    def _face(self, region: GridRegion, positive: bool) -> np.ndarray:
        if not 0 <= self.axis < region.box.dim:
            raise DomainError(f"axis {self.axis} out of range")
        sel = [slice(None)] * region.box.dim
        sel[self.axis] = -1 if positive else 0
        out = np.zeros(region.box.shape, dtype=bool)
        out[tuple(sel)] = region.mask[tuple(sel)]
        return out

    def negative(self, region: GridRegion) -> np.ndarray:
        return self._face(region, positive=False)

    def positive(self, region: GridRegion) -> np.ndarray:
        return self._face(region, positive=True)


@dataclass(frozen=True, eq=False)
class PartitionCertificate:
    """(U, L, W) with a claimed margin; epsilon 0 means a plain partition."""

    U: GridRegion
    L: GridRegion
    W: GridRegion
    epsilon: int
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"epsilon": self.epsilon,
                "box": self.U.box.to_json(),
                "adjacency": self.U.adjacency,
                "U": [list(p) for p in self.U.points()],
                "L": [list(p) for p in self.L.points()],
                "W": [list(p) for p in self.W.points()]}

    @classmethod
    def from_json(cls, obj: dict) -> "PartitionCertificate":
        box = Box.from_json(obj["box"])
        adj = obj.get("adjacency", "face")
        return cls(GridRegion.from_points(obj["U"], box, adj),
                   GridRegion.from_points(obj["L"], box, adj),
                   GridRegion.from_points(obj["W"], box, adj),
                   int(obj["epsilon"]))


@dataclass(frozen=True)
class PartitionReport:
    passed: bool
    violation: str
    margin_negative: float
    margin_positive: float

    def to_json(self) -> dict:
        def num(v):
            return None if v == float("inf") else int(v)
        return {"pass": self.passed, "violation": self.violation,
                "margin_negative": num(self.margin_negative),
                "margin_positive": num(self.margin_positive)}


def _mask_set_distance(a: np.ndarray, b: np.ndarray) -> float:
    if not a.any() or not b.any():
        return float("inf")
    dt = chessboard_dt(a)
    return float(dt[b].min())


def verify_partition(cert: PartitionCertificate, region: GridRegion,
                     faces: FacePair) -> PartitionReport:
    """Check every certificate clause; the first violated clause is named."""
    for part in (cert.U, cert.L, cert.W):
        if part.box != region.box:
            raise DomainError("certificate parts must share the region's box")
    u, l, w = cert.U.mask, cert.L.mask, cert.W.mask
    a_face = faces.negative(region)
    b_face = faces.positive(region)
    if l.any() and (a_face.any() or b_face.any()):
        dt_l = chessboard_dt(l)
        margin_a = float(dt_l[a_face].min()) if a_face.any() else float("inf")
        margin_b = float(dt_l[b_face].min()) if b_face.any() else float("inf")
    else:
        margin_a = margin_b = float("inf")

    def report(violation=""):
        return PartitionReport(violation == "", violation, margin_a, margin_b)

    if ((u | l | w) & ~region.mask).any():
        return report("parts-outside-region")
    if (u & l).any() or (u & w).any() or (l & w).any():
        return report("parts-overlap")
    if (region.mask & ~(u | l | w)).any():
        return report("parts-incomplete")
    if (a_face & ~u).any():
        return report("negative-face-not-in-U")
    if (b_face & ~w).any():
        return report("positive-face-not-in-W")
    if shifted_pairs(u, w, face_offsets(region.box.dim)):
        return report("U-W-adjacent")
    if cert.epsilon > 0:
        if margin_a <= cert.epsilon:
            return report("margin-to-negative-face")
        if margin_b <= cert.epsilon:
            return report("margin-to-positive-face")
    return report()


def clip_family_to_region(fam: CoverFamily, region: GridRegion) -> CoverFamily:
    kept = []
    for s in fam.sets:
        pts = tuple(p for p in s if region.contains(p))
        if pts:
            kept.append(pts)
    return CoverFamily(fam.name, tuple(kept), fam.r, fam.B)


def _obstacle_entry_levels(entry: list, hops: dict) -> list:
    """Quotient distance of each contracted obstacle from the negative face."""
    k = len(entry)
    dist = list(entry)
    settled = [False] * k
    heap = [(d, j) for j, d in enumerate(dist)]
    heapq.heapify(heap)
    while heap:
        d, j = heapq.heappop(heap)
        if settled[j] or d > dist[j]:
            continue
        settled[j] = True
        for w in range(k):
            if settled[w]:
                continue
            cand = d + hops[j, w]
            if cand < dist[w]:
                dist[w] = cand
                heapq.heappush(heap, (cand, w))
    return dist


def _mask_bbox_diam(mask: np.ndarray) -> int:
    idx = np.argwhere(mask)
    if not len(idx):
        return 0
    return int((idx.max(axis=0) - idx.min(axis=0)).max())


def build_partition(region: GridRegion, faces: FacePair,
                    obstacles: CoverFamily, epsilon: int,
                    preconditions: str = "strict") -> PartitionCertificate:
    """Margin-epsilon partition of the region whose separator misses every obstacle.

    Preconditions (checked): 0 < epsilon < side/6 where side is the box extent
    along the partition axis; the obstacle family, clipped to the region, is
    epsilon-disjoint and side/3-bounded.  With preconditions='warn' violations
    are recorded in the certificate metadata instead of fatal (the adversary
    pipeline runs outside the guaranteed regime on purpose and flags it).
    """
    clipped = clip_family_to_region(obstacles, region)
    masks = [points_to_mask(s, region.box) for s in clipped.sets]
    return build_partition_masks(region, faces, masks, epsilon, preconditions)


def build_partition_masks(region: GridRegion, faces: FacePair,
                          obstacle_masks: Sequence[np.ndarray], epsilon: int,
                          preconditions: str = "strict",
                          fatten: int = 0) -> PartitionCertificate:
    """Mask-level builder.

    With fatten > 0 the effective obstacles are the closed sup-ball
    fattenings of the given masks; since fattening shifts sup distances by
    exactly the radius, all distance work happens on the original masks.
    """
    if preconditions not in ("strict", "warn"):
        raise DomainError("preconditions must be 'strict' or 'warn'")
    box = region.box
    axis = faces.axis
    if not 0 <= axis < box.dim:
        raise DomainError(f"axis {axis} out of range")
    side = box.hi[axis] - box.lo[axis]
    epsilon = int(epsilon)
    fatten = int(fatten)
    if epsilon <= 0:
        raise DomainError("epsilon must be a positive integer")
    masks = [np.asarray(m, dtype=bool) for m in obstacle_masks]
    if fatten == 0:
        masks = [region.mask & m for m in masks]
    masks = [m for m in masks if m.any()]
    dts = [chessboard_dt(m) for m in masks]

    violations = []
    if 6 * epsilon >= side:
        violations.append(f"epsilon {epsilon} not below side/6 = {side}/6")
    diam_max = 0
    for m in masks:
        idx = np.argwhere(m)
        lo = np.maximum(idx.min(axis=0) - fatten, 0)
        hi = np.minimum(idx.max(axis=0) + fatten,
                        np.array(box.shape, dtype=np.int64) - 1)
        diam_max = max(diam_max, int((hi - lo).max()))
    if 3 * diam_max > side:
        violations.append(f"obstacle diameter {diam_max} above side/3 = {side}/3")
    gap_min = float("inf")
    for j in range(len(masks)):
        for k in range(j + 1, len(masks)):
            gap_min = min(gap_min,
                          max(float(dts[j][masks[k]].min()) - 2 * fatten, 0.0))
    if gap_min < epsilon:
        violations.append(f"obstacle gap {int(gap_min)} below epsilon {epsilon}")
    meta = {"axis": axis, "precondition_violations": violations,
            "obstacle_sets": len(masks), "obstacle_gap": gap_min,
            "obstacle_diam": diam_max, "fatten": fatten}
    if violations and preconditions == "strict":
        raise DomainError("; ".join(violations))

    a_face = faces.negative(region)
    b_face = faces.positive(region)
    adjacency = region.adjacency
    if not a_face.any() or not b_face.any():
        # nothing to separate from: one side swallows the region
        empty = np.zeros(box.shape, dtype=bool)
        if a_face.any():
            u, l, w = region.mask, empty, empty
        else:
            u, l, w = empty, empty, region.mask
        cert = PartitionCertificate(
            GridRegion(box, u, adjacency), GridRegion(box, l, adjacency),
            GridRegion(box, w, adjacency), epsilon,
            dict(meta, degenerate="empty-face"))
        _assert_built(cert, region, faces, dts, fatten)
        return cert

    dt_a = chessboard_dt(a_face)
    entry = [max(float(dt_a[m].min()) - fatten, 0.0) for m in masks]
    hops = {}
    for j in range(len(masks)):
        for k in range(len(masks)):
            if j != k:
                hops[j, k] = max(float(dts[j][masks[k]].min()) - 2 * fatten, 0.0)
    levels = _obstacle_entry_levels(entry, hops)
    rho = dt_a.astype(np.float64)
    for dt_j, e_j in zip(dts, levels):
        np.minimum(rho, np.maximum(dt_j - fatten, 0) + e_j, out=rho)
    reach = float(rho[b_face].min())
    lo_level = epsilon + 1
    hi_level = int(reach) - epsilon - 1 if np.isfinite(reach) else lo_level + side
    blocked = {int(e) for e in levels if np.isfinite(e)}
    free = [t for t in range(lo_level, hi_level + 1) if t not in blocked]
    meta.update(levels=sorted(blocked),
                reach=None if not np.isfinite(reach) else int(reach),
                window=[lo_level, hi_level])
    if not free:
        raise BuildPartitionError(
            f"no admissible level in [{lo_level}, {hi_level}] "
            f"(blocked {sorted(blocked)})")
    mid = (lo_level + hi_level) / 2
    t = min(free, key=lambda v: (abs(v - mid), v))
    meta["level"] = t
    u = region.mask & (rho < t)
    l = region.mask & (rho == t)
    w = region.mask & (rho > t)
    cert = PartitionCertificate(
        GridRegion(box, u, adjacency), GridRegion(box, l, adjacency),
        GridRegion(box, w, adjacency), epsilon, meta)
    _assert_built(cert, region, faces, dts, fatten)
    return cert


def _assert_built(cert: PartitionCertificate, region: GridRegion,
                  faces: FacePair, obstacle_dts, fatten: int) -> None:
    """Post-conditions are machine-checked, never trusted from construction."""
    report = verify_partition(cert, region, faces)
    if not report.passed:
        raise BuildPartitionError(
            f"constructed certificate fails verification: {report.violation}")
    lmask = cert.L.mask
    if lmask.any():
        for dt in obstacle_dts:
            if float(dt[lmask].min()) <= fatten:
                raise BuildPartitionError("separator touches an obstacle set")


def separates(region: GridRegion, separator: GridRegion,
              side_a: np.ndarray, side_b: np.ndarray) -> bool:
    """Recomputed connectivity check: removing the separator disconnects the sides."""
    rest = region.mask & ~separator.mask
    labels, _ = ndimage.label(rest, structure=structure(region.box.dim,
                                                        region.adjacency))
    la = set(np.unique(labels[side_a & rest])) - {0}
    lb = set(np.unique(labels[side_b & rest])) - {0}
    return not (la & lb)


# --- cube subdivision and skeletons -----------------------------------------

def subdivide(box: Box, edge: int) -> list:
    """Tile the box by edge-length cubes; list position + 1 is the unranking index."""
    edge = int(edge)
    if edge <= 0:
        raise DomainError("edge must be positive")
    sides = [h - l for l, h in zip(box.lo, box.hi)]
    if any(s % edge for s in sides):
        raise DomainError(f"edge {edge} does not divide box sides {sides}")
    counts = [s // edge for s in sides]
    cubes = []
    for combo in product(*[range(c) for c in counts]):
        lo = tuple(l + edge * v for l, v in zip(box.lo, combo))
        cubes.append(Box(lo, tuple(v + edge for v in lo)))
    return cubes


def skeleton(cubes: Sequence[Box], dim: int, reference: Box | None = None,
             adjacency: str = "face") -> GridRegion:
    """Union of the <=dim-dimensional faces of the cubes, as lattice points."""
    if not cubes:
        raise DomainError("no cubes given")
    ambient = cubes[0].dim
    if not 0 <= dim < ambient:
        raise DomainError(f"skeleton dimension {dim} must be below ambient {ambient}")
    if reference is None:
        lo = tuple(min(c.lo[i] for c in cubes) for i in range(ambient))
        hi = tuple(max(c.hi[i] for c in cubes) for i in range(ambient))
        reference = Box(lo, hi)
    mask = np.zeros(reference.shape, dtype=bool)
    for cube in cubes:
        if not reference.contains_box(cube):
            raise DomainError("cube outside the reference box")
        local = np.zeros(cube.shape, dtype=np.int8)
        for ax in range(ambient):
            shp = [1] * ambient
            shp[ax] = cube.shape[ax]
            coord = np.arange(cube.lo[ax], cube.hi[ax] + 1).reshape(shp)
            local = local + ((coord > cube.lo[ax]) & (coord < cube.hi[ax]))
        sel = tuple(slice(cl - rl, ch - rl + 1) for cl, ch, rl in
                    zip(cube.lo, cube.hi, reference.lo))
        mask[sel] |= local <= dim
    return GridRegion(reference, mask, adjacency)


# --- nested partitions -------------------------------------------------------

@dataclass(frozen=True)
class NestedReport:
    verified: bool
    stage_reports: tuple
    final_count: int
    counterexample: bool

    @property
    def final_nonempty(self) -> bool:
        return self.final_count > 0

    def to_json(self) -> dict:
        return {"verified": self.verified,
                "stages": [r.to_json() for r in self.stage_reports],
                "final_count": self.final_count,
                "final_nonempty": self.final_nonempty,
                "counterexample": self.counterexample}


def check_nested(sequence: Sequence[GridRegion], faces: Sequence[FacePair],
                 certs: Sequence[PartitionCertificate]) -> NestedReport:
    """Verify a chain of partition certificates, then test final nonemptiness.

    A verified chain ending in an empty region is the recorded counterexample
    to the discrete nested-partition principle; a failed certificate rejects
    the chain before the emptiness question is asked.
    """
    if not (len(sequence) == len(faces) + 1 == len(certs) + 1):
        raise DomainError("sequence/faces/certs lengths are inconsistent")
    for i, cert in enumerate(certs):
        if not cert.L.same_points(sequence[i + 1]):
            raise DomainError(f"stage {i}: sequence region is not the certificate separator")
        if not sequence[i + 1].is_subset(sequence[i]):
            raise DomainError(f"stage {i}: sequence is not decreasing")
    reports = []
    ok = True
    for i, cert in enumerate(certs):
        rep = verify_partition(cert, sequence[i], faces[i])
        reports.append(rep)
        if not rep.passed:
            ok = False
            break
    final_count = sequence[-1].count if ok else 0
    return NestedReport(ok, tuple(reports), final_count,
                        counterexample=ok and final_count == 0)


# --- random obstacle families (harness + CLI plumbing) -----------------------

def random_obstacles(region: GridRegion, epsilon: int, bound: int,
                     count: int, rng: np.random.Generator,
                     interior_margin: int = 0, attempts: int = 200) -> CoverFamily:
    """Random epsilon-disjoint bound-bounded family of small boxes in the region."""
    box = region.box
    chosen: list = []
    arrs: list = []
    for _ in range(attempts):
        if len(chosen) >= count:
            break
        lo = []
        hi = []
        degenerate = False
        for l, h in zip(box.lo, box.hi):
            l2, h2 = l + interior_margin, h - interior_margin
            if l2 > h2:
                degenerate = True
                break
            ext = int(rng.integers(0, bound + 1))
            start = int(rng.integers(l2, h2 + 1))
            lo.append(start)
            hi.append(min(start + ext, h2))
        if degenerate:
            break
        cand = [p for p in product(*[range(a, b + 1) for a, b in zip(lo, hi)])
                if region.contains(p)]
        if not cand:
            continue
        arr = np.array(cand, dtype=np.int64)
        if any(set_distance(arr, other) < epsilon for other in arrs):
            continue
        chosen.append(tuple(map(tuple, cand)))
        arrs.append(arr)
    return CoverFamily("obstacles", tuple(chosen), epsilon, bound)

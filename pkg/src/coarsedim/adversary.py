"""The cover-refutation pipeline.

Given candidate families purporting to cover a truncated lattice space cube
(one gap-a family, m+1 gap-b families, n+1 gap-c families, all B-bounded),
the pipeline runs a cascade of obstacle-avoiding partitions, snapping each
separator to a cube complex and replacing it by a skeleton one dimension
lower, first through the coarse-grid stages (avoiding the fattened gap-c
families), then through the fine sub-cube stages (avoiding the fattened gap-b
families).  What survives is a one-dimensional web of cube edges; a connected
component of it that crosses the last axis while avoiding every processed
family is the obstruction certificate: a connected crossing set no bounded
disjoint family of small diameter can cover.

Every certificate invariant is re-verified independently of the
construction.  When no crossing component exists (or a stage cannot place a
separator because the families blanket the box) the pipeline reports that the
cover held, together with a coverage check of the carrier; at desk scale that
report is an observation, not a completeness proof.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy import ndimage

from .covers import CoverFamily, CoverReport, verify_family
from .geometry import (Box, DomainError, box_counts, chessboard_dt,
                       integral_image, king_offsets, set_distance, structure)
from .partitions import (BuildPartitionError, FacePair, GridRegion,
                         build_partition_masks)
from .spaces import SpaceSpec, membership_mask, truncation_mask


@dataclass(frozen=True)
class AdversaryParams:
    """Gaps a < b < c, family counts m+1 and n+1, uniform bound B.

    m or n may be -1 for a degenerate cascade with no families of that kind.
    The working cube is [0, 6B]^(m+n+3) and 6B must be divisible by the
    coarse cube edge 2^(m+n+2).  The asymptotic regime the guarantees need is
    advisory; regime_flags() says which inequalities hold.
    """

    a: int
    b: int
    c: int
    m: int
    n: int
    B: int

    def __post_init__(self):
        for name in ("a", "b", "c", "B"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be a positive integer")
        if self.m < -1 or self.n < -1:
            raise DomainError("m and n must be >= -1")
        if self.dim < 1:
            raise DomainError("ambient dimension must be at least 1")
        if (6 * self.B) % self.coarse_edge:
            raise DomainError(
                f"6B = {6 * self.B} not divisible by the coarse edge "
                f"{self.coarse_edge}")

    @property
    def dim(self) -> int:
        return self.m + self.n + 3

    @property
    def side(self) -> int:
        return 6 * self.B

    @property
    def coarse_edge(self) -> int:
        return 2 ** (self.m + self.n + 2)

    @property
    def fine_edge(self) -> int:
        return 2 ** (self.m + 1)

    @property
    def box(self) -> Box:
        return Box.cube(self.side, self.dim)

    @property
    def space(self) -> SpaceSpec:
        return SpaceSpec((0, self.m + 1, self.m + self.n + 2),
                         (1, self.m + 1, self.n + 1))

    @property
    def eps_coarse(self) -> int:
        return self.c - 2 * self.coarse_edge

    @property
    def eps_fine(self) -> int:
        return self.b - 2 * self.fine_edge

    def regime_flags(self) -> dict:
        """Which advisory inequalities hold; failures forfeit guarantees only."""
        return {
            "a >= 2 (single family cannot cover a crossing set)": self.a >= 2,
            "a < b": self.a < self.b,
            "b < c": self.b < self.c,
            "c < B": self.c < self.B,
            "coarse fattening keeps sets side/3-bounded": 2 * self.coarse_edge <= self.B,
            "fine fattening keeps sets side/3-bounded": 2 * self.fine_edge <= self.B,
            "coarse stage margin positive": self.eps_coarse >= 1,
            "fine stage margin positive": self.m < 0 or self.eps_fine >= 1,
            "coarse margin below side/6": 6 * self.eps_coarse < self.side,
            "fine margin below side/6": self.m < 0 or 6 * self.eps_fine < self.side,
        }

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in ("a", "b", "c", "m", "n", "B")}

    @classmethod
    def from_json(cls, obj: dict) -> "AdversaryParams":
        return cls(**{k: int(obj[k]) for k in ("a", "b", "c", "m", "n", "B")})


class CubeComplex:
    """Axis-aligned k-dimensional subcubes of edge s in a cube box.

    Cubes are grouped by their set of free axes; per group a boolean array
    over (free cube index, fixed grid position) marks membership.  Fixed
    coordinates sit on the s-grid.  All queries reduce to per-axis index
    arithmetic, so they vectorize over the whole point grid.
    """

    def __init__(self, box: Box, edge: int, groups: dict):
        self.box = box
        self.edge = int(edge)
        self.groups = groups  # free-axes tuple -> bool ndarray
        side = box.hi[0] - box.lo[0]
        if any(h - l != side for l, h in zip(box.lo, box.hi)):
            raise DomainError("cube complex requires a cube box")
        if side % self.edge:
            raise DomainError(f"edge {edge} does not divide side {side}")
        self.cells = side // self.edge

    @classmethod
    def full(cls, box: Box, edge: int) -> "CubeComplex":
        dim = box.dim
        side = box.hi[0] - box.lo[0]
        p = side // edge
        free = tuple(range(dim))
        return cls(box, edge, {free: np.ones((p,) * dim, dtype=bool)})

    def _group_shape(self, free: tuple) -> tuple:
        return tuple(self.cells if ax in free else self.cells + 1
                     for ax in range(self.box.dim))

    @classmethod
    def faces_within(cls, region: GridRegion, edge: int,
                     face_dim: int) -> "CubeComplex":
        """All face_dim-dimensional edge-cubes entirely inside the region."""
        box = region.box
        dim = box.dim
        if not 0 <= face_dim <= dim:
            raise DomainError("face dimension out of range")
        table = integral_image(region.mask)
        side = box.hi[0] - box.lo[0]
        p = side // edge
        groups = {}
        want = (edge + 1) ** face_dim
        for free in combinations(range(dim), face_dim):
            lo_idx, hi_idx = [], []
            for ax in range(dim):
                if ax in free:
                    base = np.arange(p) * edge
                    span = edge
                    n = p
                else:
                    base = np.arange(p + 1) * edge
                    span = 0
                    n = p + 1
                shape = [1] * dim
                shape[ax] = n
                lo_idx.append(base.reshape(shape))
                hi_idx.append((base + span).reshape(shape))
            counts = box_counts(table, lo_idx, hi_idx)
            groups[free] = counts == want
        return cls(box, edge, groups)

    def total(self) -> int:
        return int(sum(g.sum() for g in self.groups.values()))

    def restrict_touching(self, mask: np.ndarray) -> "CubeComplex":
        """Keep cubes whose closed point box meets the mask."""
        table = integral_image(mask)
        dim = self.box.dim
        out = {}
        for free, arr in self.groups.items():
            lo_idx, hi_idx = [], []
            for ax in range(dim):
                n = arr.shape[ax]
                base = np.arange(n) * self.edge
                span = self.edge if ax in free else 0
                shape = [1] * dim
                shape[ax] = n
                lo_idx.append(base.reshape(shape))
                hi_idx.append((base + span).reshape(shape))
            counts = box_counts(table, lo_idx, hi_idx)
            out[free] = arr & (counts > 0)
        return CubeComplex(self.box, self.edge, out)

    def skeleton_mask(self, skel_dim: int) -> np.ndarray:
        """Points on faces of dimension <= skel_dim of some member cube.

        Per group, cube membership is upsampled to point resolution
        (half-open), closed by shifted ORs along the free axes, then
        filtered by how many free coordinates are off the s-grid.
        """
        box = self.box
        dim = box.dim
        shape = box.shape
        s = self.edge
        axis_coord = [np.arange(n) for n in shape]
        on_grid = [(c % s) == 0 for c in axis_coord]

        def spread(arr, ax):
            shp = [1] * dim
            shp[ax] = len(arr)
            return arr.reshape(shp)

        result = np.zeros(shape, dtype=bool)
        for free, cubes in self.groups.items():
            if not cubes.any():
                continue
            off = np.zeros(shape, dtype=np.int8)
            cond = np.ones(shape, dtype=bool)
            for ax in range(dim):
                if ax in free:
                    off = off + spread(~on_grid[ax], ax)
                else:
                    cond &= spread(on_grid[ax], ax)
            cond &= off <= skel_dim
            if not cond.any():
                continue
            arr = cubes
            for ax in free:
                arr = np.repeat(arr, s, axis=ax)
            half_open = np.zeros(shape, dtype=bool)
            sel = tuple(slice(0, self.cells * s) if ax in free
                        else slice(None, None, s) for ax in range(dim))
            half_open[sel] = arr
            closed = np.zeros(shape, dtype=bool)
            free_list = list(free)
            for bits in range(1 << len(free_list)):
                dst, src = [], []
                for ax in range(dim):
                    if ax in free and bits & (1 << free_list.index(ax)):
                        dst.append(slice(1, shape[ax]))
                        src.append(slice(0, shape[ax] - 1))
                    else:
                        dst.append(slice(None))
                        src.append(slice(None))
                closed[tuple(dst)] |= half_open[tuple(src)]
            result |= cond & closed
        return result


def _set_masks(fam: CoverFamily, box: Box) -> list:
    """One boolean mask per nonempty set, clipped to the box."""
    masks = []
    for s in fam.sets:
        pts = [p for p in s if box.contains(p)]
        if not pts:
            continue
        base = np.zeros(box.shape, dtype=bool)
        base[box.index_of(np.array(pts, dtype=np.int64))] = True
        masks.append(base)
    return masks


@dataclass(frozen=True)
class CoverHolds:
    """The pipeline found no crossing obstruction; not a completeness proof."""

    reason: str
    cover_report: CoverReport
    flags: dict
    trace: tuple

    found = False

    def to_json(self) -> dict:
        return {"found": False, "reason": self.reason,
                "cover": self.cover_report.to_json(),
                "flags": self.flags,
                "trace": list(self.trace)}


@dataclass(frozen=True, eq=False)
class ObstructionCertificate:
    """A connected crossing component avoiding every processed family."""

    component: GridRegion
    chain: tuple
    crossing_axis: int
    avoidance: tuple  # (family name, (per-set min distance, ...))
    params: AdversaryParams
    meta: dict = field(default_factory=dict)

    found = True

    def to_json(self) -> dict:
        return {"found": True,
                "params": self.params.to_json(),
                "crossing_axis": self.crossing_axis,
                "component": self.component.to_json(),
                "chain": [r.to_json() for r in self.chain],
                "avoidance": [
                    {"family": name, "min_distances": list(dists)}
                    for name, dists in self.avoidance],
                "meta": {k: v for k, v in self.meta.items()}}


def _check_inputs(params: AdversaryParams, fam_u: CoverFamily,
                  fams_v: Sequence[CoverFamily],
                  fams_w: Sequence[CoverFamily]) -> None:
    if len(fams_v) != params.m + 1:
        raise DomainError(f"expected {params.m + 1} gap-b families, got {len(fams_v)}")
    if len(fams_w) != params.n + 1:
        raise DomainError(f"expected {params.n + 1} gap-c families, got {len(fams_w)}")
    jobs = [(fam_u, params.a)]
    jobs += [(f, params.b) for f in fams_v]
    jobs += [(f, params.c) for f in fams_w]
    for fam, gap in jobs:
        report = verify_family(CoverFamily(fam.name, fam.sets, gap, params.B))
        if not report.passed:
            raise DomainError(
                f"family {fam.name!r} violates its precondition: {report.reason}")


def _carrier_cover_report(params: AdversaryParams,
                          families: Sequence[CoverFamily]) -> CoverReport:
    space_mask = truncation_mask(params.space, params.box)
    covered = np.zeros(params.box.shape, dtype=bool)
    for fam in families:
        for s in fam.sets:
            pts = np.array([p for p in s if params.box.contains(p)],
                           dtype=np.int64)
            if len(pts):
                covered[params.box.index_of(pts)] = True
    uncovered = space_mask & ~covered
    count = int(uncovered.sum())
    sample = []
    if count:
        idx = np.argwhere(uncovered)[:50]
        sample = [tuple(int(v) for v in row) for row in idx]
    return CoverReport(count == 0, count, tuple(sample))


def _run_pipeline(params: AdversaryParams, fam_u: CoverFamily,
                  fams_v: Sequence[CoverFamily], fams_w: Sequence[CoverFamily]):
    _check_inputs(params, fam_u, fams_v, fams_w)
    box = params.box
    box.check_budget()
    flags = params.regime_flags()
    trace: list = []
    all_families = [fam_u, *fams_v, *fams_w]

    def hold(reason):
        return CoverHolds(reason, _carrier_cover_report(params, all_families),
                          flags, tuple(trace))

    region = GridRegion.full(box, adjacency="face")
    complex_ = CubeComplex.full(box, params.coarse_edge)
    chain: list = []
    trace.append({"stage": "init", "region_points": region.count,
                  "cubes": complex_.total(), "flags": flags})

    processed_masks: list = []

    def stage(kind, index, fam, edge, eps, axis, cubes, skel_dim):
        nonlocal region
        cert = build_partition_masks(region, FacePair(axis), _set_masks(fam, box),
                                     eps, preconditions="warn", fatten=edge)
        cubes = cubes.restrict_touching(cert.L.mask)
        new_mask = cubes.skeleton_mask(skel_dim)
        for m in processed_masks:
            if (new_mask & m).any():
                raise BuildPartitionError(
                    f"stage {kind}{index}: skeleton touches an earlier family")
        region = GridRegion(box, new_mask, "face")
        chain.append(region)
        trace.append({
            "stage": f"{kind}{index}", "axis": axis, "epsilon": eps,
            "separator_points": cert.L.count, "level": cert.meta.get("level"),
            "window": cert.meta.get("window"),
            "precondition_violations": cert.meta.get("precondition_violations"),
            "cubes": cubes.total(), "skeleton_dim": skel_dim,
            "region_points": region.count,
        })
        return cubes

    try:
        for j, fam in enumerate(fams_w, start=1):
            if params.eps_coarse < 1:
                return hold(f"coarse stage margin {params.eps_coarse} is not positive")
            processed_masks.extend(_set_masks(fam, box))
            complex_ = stage("W", j, fam, params.coarse_edge, params.eps_coarse,
                             j - 1, complex_, params.dim - j)
            if region.count == 0:
                return hold(f"skeleton empty after coarse stage {j}")
    except BuildPartitionError as exc:
        return hold(f"coarse cascade: {exc}")

    # coordinate profile after the coarse cascade (asserted, not assumed)
    if fams_w and region.count:
        pts = np.argwhere(region.mask)
        off = (pts % params.coarse_edge != 0).sum(axis=1)
        worst = int(off.max())
        trace.append({"stage": "profile", "max_coords_off_coarse_grid": worst,
                      "allowed": params.m + 2})
        if worst > params.m + 2:
            raise AssertionError(
                f"coordinate profile violated: {worst} > {params.m + 2}")

    if params.m >= 0:
        sub = CubeComplex.faces_within(region, params.fine_edge, params.m + 2)
        trace.append({"stage": "subcomplex", "edge": params.fine_edge,
                      "face_dim": params.m + 2, "cubes": sub.total()})
        if sub.total() == 0:
            return hold("no fine sub-cubes inside the coarse skeleton")
        try:
            for i, fam in enumerate(fams_v, start=1):
                if params.eps_fine < 1:
                    return hold(f"fine stage margin {params.eps_fine} is not positive")
                processed_masks.extend(_set_masks(fam, box))
                sub = stage("V", i, fam, params.fine_edge, params.eps_fine,
                            params.n + i, sub, params.m + 2 - i)
                if region.count == 0:
                    return hold(f"skeleton empty after fine stage {i}")
        except BuildPartitionError as exc:
            return hold(f"fine cascade: {exc}")

    # crossing component of the final web, vertex adjacency
    final = GridRegion(box, region.mask, "vertex")
    labels, _ = final.component_labels()
    axis = params.dim - 1
    neg = [slice(None)] * params.dim
    neg[axis] = 0
    pos = [slice(None)] * params.dim
    pos[axis] = -1
    neg_labels = set(np.unique(labels[tuple(neg)])) - {0}
    pos_labels = set(np.unique(labels[tuple(pos)])) - {0}
    crossing = sorted(neg_labels & pos_labels)
    if not crossing:
        return hold("no connected component crosses the last axis")
    best = None
    for lab in crossing:
        first = tuple(int(v) for v in np.argwhere(labels == lab)[0])
        if best is None or first < best[1]:
            best = (lab, first)
    comp_mask = labels == best[0]
    component = GridRegion(box, comp_mask, "vertex")

    u_mask = np.zeros(box.shape, dtype=bool)
    for s in fam_u.sets:
        pts = np.array([p for p in s if box.contains(p)], dtype=np.int64)
        if len(pts):
            u_mask[box.index_of(pts)] = True
    uncovered = comp_mask & ~u_mask
    if not uncovered.any():
        return hold("crossing component fully covered by the gap-a family")

    dt_c = chessboard_dt(comp_mask)
    avoidance = []
    for fam in [*fams_v, *fams_w]:
        dists = []
        for s in fam.sets:
            pts = np.array([p for p in s if box.contains(p)], dtype=np.int64)
            if len(pts):
                dists.append(int(dt_c[box.index_of(pts)].min()))
            else:
                dists.append(None)
        avoidance.append((fam.name, tuple(dists)))

    witness = tuple(int(v) for v in np.argwhere(uncovered)[0])
    meta = {
        "flags": flags,
        "uncovered_by_gap_a": int(uncovered.sum()),
        "uncovered_witness": witness,
        "component_points": component.count,
        "component_diameter": int(
            (np.argwhere(comp_mask).max(axis=0) - np.argwhere(comp_mask).min(axis=0)).max()),
    }
    cert = ObstructionCertificate(component, tuple(chain), axis,
                                  tuple(avoidance), params, meta)
    trace.append({"stage": "component", "points": component.count,
                  "uncovered_by_gap_a": meta["uncovered_by_gap_a"]})
    return cert, tuple(trace)


def refute_cover(params: AdversaryParams, fam_u: CoverFamily,
                 fams_v: Sequence[CoverFamily], fams_w: Sequence[CoverFamily]):
    """Obstruction certificate, or a CoverHolds report when none was found."""
    out = _run_pipeline(params, fam_u, fams_v, fams_w)
    if isinstance(out, CoverHolds):
        return out
    cert, _ = out
    check = verify_certificate(cert, fams_v, fams_w)
    if not check.passed:
        raise AssertionError(
            f"pipeline produced an unsound certificate: {check.failures}")
    return cert


def stage_trace(params: AdversaryParams, fam_u: CoverFamily,
                fams_v: Sequence[CoverFamily],
                fams_w: Sequence[CoverFamily]) -> list:
    """Per-stage observability of the cascade; same engine as refute_cover."""
    out = _run_pipeline(params, fam_u, fams_v, fams_w)
    if isinstance(out, CoverHolds):
        return list(out.trace) + [{"stage": "outcome", "found": False,
                                   "reason": out.reason}]
    cert, trace = out
    return list(trace) + [{"stage": "outcome", "found": True}]


@dataclass(frozen=True)
class CertificateCheck:
    passed: bool
    failures: tuple
    details: dict

    def to_json(self) -> dict:
        return {"pass": self.passed, "failures": list(self.failures),
                "details": self.details}


_BFS_POINT_CAP = 60_000


def _mask_connected(mask: np.ndarray) -> bool:
    """Fresh connectivity recomputation under vertex adjacency.

    Small components get a pure-python flood fill, independent of the image
    machinery the construction used; larger ones are relabeled on a cropped
    copy of the mask.
    """
    idx = np.argwhere(mask)
    if len(idx) == 0:
        return False
    lo = idx.min(axis=0)
    hi = idx.max(axis=0)
    sel = tuple(slice(int(l), int(h) + 1) for l, h in zip(lo, hi))
    crop = mask[sel]
    if len(idx) <= _BFS_POINT_CAP:
        points = {tuple(int(v) for v in row) for row in idx}
        start = next(iter(points))
        seen = {start}
        frontier = [start]
        offs = king_offsets(mask.ndim)
        while frontier:
            new = []
            for p in frontier:
                for off in offs:
                    q = tuple(a + d for a, d in zip(p, off))
                    if q in points and q not in seen:
                        seen.add(q)
                        new.append(q)
            frontier = new
        return len(seen) == len(points)
    _, n = ndimage.label(crop, structure=structure(mask.ndim, "vertex"))
    return n == 1


def verify_certificate(cert: ObstructionCertificate,
                       fams_v: Sequence[CoverFamily],
                       fams_w: Sequence[CoverFamily]) -> CertificateCheck:
    """Re-verify the four certificate invariants from scratch."""
    params = cert.params
    box = cert.component.box
    mask = cert.component.mask
    failures = []
    details: dict = {}

    connected = _mask_connected(mask)
    details["connected"] = connected
    if not connected:
        failures.append("component not connected under vertex adjacency")

    axis = params.dim - 1
    neg = [slice(None)] * params.dim
    neg[axis] = 0
    pos = [slice(None)] * params.dim
    pos[axis] = -1
    crosses = bool(mask[tuple(neg)].any() and mask[tuple(pos)].any())
    details["crosses"] = crosses
    if not crosses:
        failures.append("component misses one of the opposite facets")

    comp_pts = np.argwhere(mask) + np.array(box.lo)
    min_gap = float("inf")
    for fam in [*fams_v, *fams_w]:
        for s in fam.sets:
            if not s:
                continue
            d = set_distance(comp_pts, np.array(s, dtype=np.int64))
            min_gap = min(min_gap, d)
            if d <= 0:
                failures.append(f"component meets a set of family {fam.name!r}")
    details["min_distance_to_families"] = (None if min_gap == float("inf")
                                           else int(min_gap))

    member = membership_mask(comp_pts, params.space)
    details["space_members"] = int(member.sum())
    details["component_points"] = len(comp_pts)
    if not member.all():
        failures.append("component leaves the truncated space")

    off_coarse = int(((comp_pts % params.coarse_edge) != 0).sum(axis=1).max())
    details["max_coords_off_coarse_grid"] = off_coarse
    if off_coarse > params.m + 2:
        failures.append("coordinate profile bound violated (coarse grid)")
    off_fine = int(((comp_pts % params.fine_edge) != 0).sum(axis=1).max())
    details["max_coords_off_fine_grid"] = off_fine
    if off_fine > 1:
        failures.append("coordinate profile bound violated (fine grid)")

    return CertificateCheck(not failures, tuple(failures), details)

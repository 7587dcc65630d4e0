"""r-disjoint uniformly bounded families: verification, brick covers, search.

A family is a named collection of finite point sets with a claimed
disjointness gap r and diameter bound B.  Verification reports the true
minimal inter-set gap and maximal set diameter (sup metric) and passes iff
they meet the claims.  The exact cover search decides, for a finite carrier
and per-family gaps, whether any assignment of carrier points to families
yields gap-respecting bounded families covering the carrier; its negative
answers are proofs only when the search space was exhausted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .geometry import (Box, BudgetError, DomainError, POINT_BUDGET,
                       chessboard_dt_labeled, king_offsets, set_diameter,
                       set_distance)

_BRUTE_POINT_CAP = 20_000


def _canon_sets(sets) -> tuple:
    out = []
    for s in sets:
        pts = tuple(sorted(tuple(int(v) for v in p) for p in s))
        out.append(pts)
    return tuple(out)


@dataclass(frozen=True)
class CoverFamily:
    """A collection of point sets claiming to be r-disjoint and B-bounded."""

    name: str
    sets: tuple
    r: int
    B: int

    def __post_init__(self):
        object.__setattr__(self, "sets", _canon_sets(self.sets))

    @property
    def points(self) -> list:
        return [p for s in self.sets for p in s]

    def nonempty_sets(self) -> list:
        return [s for s in self.sets if s]

    def to_json(self) -> dict:
        return {"name": self.name, "r": self.r, "B": self.B,
                "sets": [[list(p) for p in s] for s in self.sets]}

    @classmethod
    def from_json(cls, obj: dict) -> "CoverFamily":
        return cls(obj.get("name", "family"), tuple(
            tuple(tuple(p) for p in s) for s in obj["sets"]),
            int(obj["r"]), int(obj["B"]))


@dataclass(frozen=True)
class FamilyReport:
    name: str
    passed: bool
    gap: float
    diam: int
    reason: str = ""

    def to_json(self) -> dict:
        gap = None if self.gap == float("inf") else int(self.gap)
        return {"name": self.name, "pass": self.passed, "gap": gap,
                "diam": self.diam, "reason": self.reason}


@dataclass(frozen=True)
class CoverReport:
    passed: bool
    uncovered_count: int
    uncovered_sample: tuple

    def to_json(self) -> dict:
        return {"pass": self.passed, "uncovered": [list(p) for p in self.uncovered_sample],
                "uncovered_count": self.uncovered_count}


def family_min_gap(sets: Sequence, budget: int | None = None) -> float:
    """Exact minimal sup distance between points of distinct sets (inf if < 2 sets)."""
    arrs = [np.array(s, dtype=np.int64).reshape(len(s), -1)
            for s in sets if len(s)]
    if len(arrs) < 2:
        return float("inf")
    all_pts = np.concatenate(arrs)
    labels = np.concatenate([np.full(len(a), i + 1) for i, a in enumerate(arrs)])
    lo = all_pts.min(axis=0)
    hi = all_pts.max(axis=0)
    volume = int(np.prod((hi - lo + 1).astype(np.float64)))
    cap = POINT_BUDGET if budget is None else budget
    if 0 < volume <= cap:
        return _gap_grid(all_pts, labels, lo, hi)
    if len(all_pts) <= _BRUTE_POINT_CAP:
        return _gap_brute(all_pts, labels)
    raise BudgetError(
        f"family too large for exact gap: volume {volume}, points {len(all_pts)}")


def _gap_brute(pts: np.ndarray, labels: np.ndarray) -> float:
    best = np.inf
    step = max(1, 4_000_000 // max(1, len(pts)))
    for i in range(0, len(pts), step):
        d = cdist(pts[i : i + step], pts, metric="chebyshev")
        diff = labels[i : i + step, None] != labels[None, :]
        if diff.any():
            best = min(best, float(d[diff].min()))
    return best


def _gap_grid(pts: np.ndarray, labels: np.ndarray, lo, hi) -> float:
    """Exact gap via a labeled chessboard distance transform.

    For the closest pair of distinct sets there is a king geodesic between
    them; somewhere along it two adjacent cells have different nearest
    labels, and that adjacent pair witnesses the exact gap as
    dist(z) + dist(z') + 1.
    """
    shape = tuple(int(v) for v in (hi - lo + 1))
    occ = np.zeros(shape, dtype=bool)
    lab = np.zeros(shape, dtype=np.int32)
    idx = tuple((pts - lo)[:, i] for i in range(pts.shape[1]))
    prev = lab[idx]
    clash = (prev != 0) & (prev != labels)
    if clash.any():
        return 0.0
    occ[idx] = True
    lab[idx] = labels
    dt, near = chessboard_dt_labeled(occ, lab)
    best = np.inf
    dim = pts.shape[1]
    offsets = [o for o in king_offsets(dim) if o > tuple([0] * dim)]
    for off in offsets:
        sl_a = tuple(slice(max(0, -o), shape[i] - max(0, o)) for i, o in enumerate(off))
        sl_b = tuple(slice(max(0, o), shape[i] - max(0, -o)) for i, o in enumerate(off))
        la, lb = near[sl_a], near[sl_b]
        da, db = dt[sl_a], dt[sl_b]
        diff = la != lb
        if diff.any():
            cand = (da[diff] + db[diff] + 1).min()
            best = min(best, float(cand))
    return best


def verify_family(fam: CoverFamily, budget: int | None = None) -> FamilyReport:
    """Measure the true gap and diameter and compare to the claims."""
    diam = max((set_diameter(np.array(s)) for s in fam.nonempty_sets()),
               default=0)
    gap = family_min_gap(fam.sets, budget=budget)
    reasons = []
    if gap < fam.r:
        reasons.append(f"gap {int(gap)} < r {fam.r}")
    if diam > fam.B:
        reasons.append(f"diam {diam} > B {fam.B}")
    return FamilyReport(fam.name, not reasons, gap, diam, "; ".join(reasons))


def verify_cover(families: Sequence[CoverFamily], carrier: Iterable,
                 sample_cap: int = 50) -> CoverReport:
    """Does the union of all sets of all families contain the carrier?"""
    covered = set()
    for fam in families:
        for s in fam.sets:
            covered.update(s)
    missing = sorted(tuple(int(v) for v in p) for p in carrier
                     if tuple(int(v) for v in p) not in covered)
    return CoverReport(not missing, len(missing), tuple(missing[:sample_cap]))


# --- brick covers ----------------------------------------------------------

def brick_cover(dim: int, gap: int, box: Box) -> list:
    """d+1 gap-disjoint uniformly bounded families jointly covering the box.

    Points are assigned to grid faces of a period-L lattice (L = gap*(2d+1))
    by how many coordinates sit within gap*f of a grid hyperplane; the f-th
    threshold band left empty by a pigeonhole argument guarantees sets of the
    same family stay gap-separated, and every diameter is at most 2*d*gap.
    """
    if gap <= 0:
        raise DomainError("gap must be positive")
    if box.dim != dim:
        raise DomainError("box dimension mismatch")
    box.check_budget()
    r, d = int(gap), int(dim)
    period = r * (2 * d + 1)
    grids = np.meshgrid(*[np.arange(l, h + 1, dtype=np.int64)
                          for l, h in zip(box.lo, box.hi)], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    mod = pts % period
    rho = np.minimum(mod, period - mod)
    counts = np.stack([(rho <= r * f).sum(axis=1) for f in range(d + 1)], axis=1)
    feasible = counts == np.arange(d + 1)
    # largest feasible f per point (always exists)
    f = d - np.argmax(feasible[:, ::-1], axis=1)
    fixed = rho <= (r * f)[:, None]
    near_mult = (pts + period // 2) // period
    cell = pts // period
    codes = np.where(fixed, 2 * near_mult, 2 * cell + 1)
    keys = np.concatenate([f[:, None], codes], axis=1)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    families_sets: list = [[] for _ in range(d + 1)]
    order = np.argsort(inverse, kind="stable")
    bounds = np.searchsorted(inverse[order], np.arange(len(uniq) + 1))
    for u in range(len(uniq)):
        rows = order[bounds[u] : bounds[u + 1]]
        set_pts = tuple(tuple(int(v) for v in pts[i]) for i in rows)
        k = d - int(uniq[u][0])
        families_sets[k].append(set_pts)
    out = []
    for k in range(d + 1):
        diam = max((set_diameter(np.array(s)) for s in families_sets[k]),
                   default=0)
        out.append(CoverFamily(f"brick{k}", tuple(families_sets[k]), r, diam))
    return out


# --- exact / greedy cover search -------------------------------------------

@dataclass(frozen=True)
class CoverProblem:
    """Finite carrier, one required gap per family, and a shared diameter cap."""

    carrier: tuple
    sigma: tuple
    b_max: int

    def __post_init__(self):
        pts = tuple(sorted(tuple(int(v) for v in p) for p in self.carrier))
        if not pts:
            raise DomainError("carrier must be nonempty")
        sig = tuple(int(g) for g in self.sigma)
        if not sig or any(g <= 0 for g in sig):
            raise DomainError("gaps must be positive")
        object.__setattr__(self, "carrier", pts)
        object.__setattr__(self, "sigma", sig)
        object.__setattr__(self, "b_max", int(self.b_max))


@dataclass(frozen=True)
class Covered:
    families: tuple

    verdict = "covered"


@dataclass(frozen=True)
class NotCoveredWithinBudget:
    exact: bool
    nodes: int
    reason: str

    verdict = "not-covered-within-budget"


def _attach(point, sets, sigma_gap, b_max):
    """Add a point to a color's sets, merging everything closer than the gap.

    Returns the new set list or None when the forced component gets too wide.
    Points closer than the gap must share a set, so merges are forced and a
    diameter violation prunes the whole subtree.
    """
    x = np.array(point, dtype=np.int64)
    merged_pts = [point]
    lo = x.copy()
    hi = x.copy()
    rest = []
    for pts, slo, shi in sets:
        near = any(max(abs(a - b) for a, b in zip(point, q)) < sigma_gap
                   for q in pts)
        if near:
            merged_pts.extend(pts)
            lo = np.minimum(lo, slo)
            hi = np.maximum(hi, shi)
        else:
            rest.append((pts, slo, shi))
    if int((hi - lo).max()) > b_max:
        return None
    rest.append((tuple(merged_pts), lo, hi))
    return rest


def search_cover(problem: CoverProblem, mode: str = "exact",
                 node_budget: int = 2_000_000):
    """Exhaustive (or greedy) search for a gap/diameter-respecting cover."""
    if mode not in ("exact", "greedy"):
        raise DomainError(f"unknown mode {mode!r}")
    sigma = problem.sigma
    points = problem.carrier
    n_colors = len(sigma)

    def families_from(colors):
        fams = []
        for i, sets in enumerate(colors):
            fams.append(CoverFamily(f"U{i}", tuple(s[0] for s in sets),
                                    sigma[i], problem.b_max))
        return tuple(fams)

    if mode == "greedy":
        colors = [[] for _ in range(n_colors)]
        for p in points:
            for i in range(n_colors):
                new = _attach(p, colors[i], sigma[i], problem.b_max)
                if new is not None:
                    colors[i] = new
                    break
            else:
                return NotCoveredWithinBudget(False, len(points),
                                              "greedy assignment gave up")
        return Covered(families_from(colors))

    nodes = 0

    def dfs(idx, colors):
        nonlocal nodes
        if idx == len(points):
            return colors
        seen_empty_gap = set()
        for i in range(n_colors):
            if not colors[i]:
                # identical gaps make empty colors interchangeable
                if sigma[i] in seen_empty_gap:
                    continue
                seen_empty_gap.add(sigma[i])
            nodes += 1
            if nodes > node_budget:
                raise BudgetError("search node budget exhausted")
            new = _attach(points[idx], colors[i], sigma[i], problem.b_max)
            if new is None:
                continue
            result = dfs(idx + 1, colors[:i] + [new] + colors[i + 1 :])
            if result is not None:
                return result
        return None

    try:
        solution = dfs(0, [[] for _ in range(n_colors)])
    except BudgetError:
        return NotCoveredWithinBudget(False, nodes, "node budget exhausted")
    if solution is None:
        return NotCoveredWithinBudget(True, nodes, "search space exhausted")
    return Covered(families_from(solution))


def membership_report(problem: CoverProblem, outcome) -> dict:
    """Carrier-relative record of one bad-index-set membership probe."""
    report = {
        "carrier_size": len(problem.carrier),
        "sigma": list(problem.sigma),
        "B_max": problem.b_max,
        "verdict": outcome.verdict,
    }
    if isinstance(outcome, NotCoveredWithinBudget):
        report["exact"] = outcome.exact
        report["reason"] = outcome.reason
    else:
        report["families"] = [f.to_json() for f in outcome.families]
    return report

"""Batch front-end: run experiments from JSON configs and emit reports.

Every run is deterministic given (config, seed).  The report carries the
sha256 of the config and of every $ref-included file, the seed, all
verification results, and timing.  Exit status: 0 when every verification in
the run passed, 1 on a verification failure, 2 on domain or parse errors,
3 on budget exhaustion.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import geometry
from .adversary import (AdversaryParams, CoverHolds, refute_cover,
                        stage_trace, verify_certificate)
from .covers import (CoverFamily, CoverProblem, Covered, brick_cover,
                     membership_report, search_cover, verify_cover,
                     verify_family)
from .geometry import Box, BudgetError, DomainError
from .ordinals import (OrdinalParseError, SetSystem, ord_of, ordinal_compare,
                       parse_ordinal)
from .partitions import (FacePair, GridRegion, PartitionCertificate,
                         build_partition, check_nested, random_obstacles,
                         verify_partition)
from .spaces import SpaceSpec, enumerate_truncation, is_member
from .svg import plot_slice

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_DOMAIN = 2
EXIT_BUDGET = 3

SCHEMA = "coarsedim/1"


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _resolve_refs(obj, base: Path, hashes: dict):
    if isinstance(obj, dict):
        if set(obj.keys()) == {"$ref"}:
            path = (base / obj["$ref"]).resolve()
            data = path.read_bytes()
            hashes[str(obj["$ref"])] = _sha256(data)
            return _resolve_refs(json.loads(data), path.parent, hashes)
        return {k: _resolve_refs(v, base, hashes) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_resolve_refs(v, base, hashes) for v in obj]
    return obj


def _families(obj) -> list:
    return [CoverFamily.from_json(f) for f in obj]


def _region_from(obj) -> GridRegion:
    if "rle" in obj:
        return GridRegion.from_json(obj)
    box = Box.from_json(obj["box"])
    if obj.get("full", True):
        return GridRegion.full(box, obj.get("adjacency", "face"))
    return GridRegion.from_points(obj.get("points", []), box,
                                  obj.get("adjacency", "face"))


def _obstacles_from(cfg, region: GridRegion, epsilon: int,
                    rng: np.random.Generator) -> CoverFamily:
    if cfg is None:
        return CoverFamily("obstacles", (), epsilon, 0)
    if "random" in cfg:
        spec = cfg["random"]
        side = min(h - l for l, h in zip(region.box.lo, region.box.hi))
        bound = int(spec.get("bound", side // 3))
        return random_obstacles(region, epsilon, bound,
                                int(spec.get("count", 3)), rng,
                                interior_margin=int(spec.get("interior_margin", 0)))
    return CoverFamily.from_json(cfg)


# --- command handlers -------------------------------------------------------

def cmd_space_member(cfg, rng, args):
    spec = SpaceSpec.from_json(cfg["spec"])
    members = [bool(is_member(tuple(p), spec)) for p in cfg["points"]]
    return {"members": members}, True


def cmd_space_enumerate(cfg, rng, args):
    spec = SpaceSpec.from_json(cfg["spec"])
    box = Box.from_json(cfg["box"])
    pts = enumerate_truncation(spec, box)
    return {"count": len(pts), "points": [list(p) for p in pts]}, True


def cmd_cover_build(cfg, rng, args):
    box = Box.from_json(cfg["box"])
    fams = brick_cover(int(cfg["dimension"]), int(cfg["gap"]), box)
    reports = [verify_family(f) for f in fams]
    carrier = [tuple(p) for p in np.stack(
        [g.ravel() for g in np.meshgrid(
            *[np.arange(l, h + 1) for l, h in zip(box.lo, box.hi)],
            indexing="ij")], axis=1)]
    cover = verify_cover(fams, carrier)
    ok = cover.passed and all(r.passed for r in reports)
    return {"families": [f.to_json() for f in fams],
            "family_reports": [r.to_json() for r in reports],
            "cover_report": cover.to_json()}, ok


def cmd_cover_verify(cfg, rng, args):
    fams = _families(cfg["families"])
    reports = [verify_family(f) for f in fams]
    out = {"family_reports": [r.to_json() for r in reports]}
    ok = all(r.passed for r in reports)
    if "carrier" in cfg:
        cover = verify_cover(fams, [tuple(p) for p in cfg["carrier"]])
        out["cover_report"] = cover.to_json()
        ok = ok and cover.passed
    return out, ok


def cmd_cover_search(cfg, rng, args):
    carrier = cfg["carrier"]
    if isinstance(carrier, dict) and "interval" in carrier:
        lo, hi = carrier["interval"]
        carrier = [[v] for v in range(int(lo), int(hi) + 1)]
    problem = CoverProblem(tuple(tuple(p) for p in carrier),
                           tuple(cfg["sigma"]), int(cfg["B_max"]))
    mode = "greedy" if args.greedy else "exact"
    outcome = search_cover(problem, mode=mode)
    if isinstance(outcome, Covered):
        for fam in outcome.families:
            if not verify_family(fam).passed:
                return {"error": "witness failed verification"}, False
    return {"search": membership_report(problem, outcome), "mode": mode}, True


def cmd_ord_compute(cfg, rng, args):
    system = SetSystem.from_json(cfg["system"])
    return {"ord": str(ord_of(system))}, True


def cmd_ord_compare(cfg, rng, args):
    a = parse_ordinal(cfg["a"])
    b = parse_ordinal(cfg["b"])
    order = {-1: "less", 0: "equal", 1: "greater"}[ordinal_compare(a, b)]
    return {"order": order}, True


def cmd_partition_build(cfg, rng, args):
    region = _region_from(cfg.get("region", {"box": cfg["box"]})
                          if "region" in cfg or "box" in cfg else cfg)
    epsilon = int(cfg["epsilon"])
    faces = FacePair(int(cfg.get("axis", 0)))
    obstacles = _obstacles_from(cfg.get("obstacles"), region, epsilon, rng)
    cert = build_partition(region, faces, obstacles, epsilon)
    report = verify_partition(cert, region, faces)
    return {"certificate": cert.to_json(),
            "obstacles": obstacles.to_json(),
            "verify": report.to_json(),
            "meta": {k: v for k, v in cert.meta.items()
                     if k not in ("obstacle_check",)}}, report.passed


def cmd_partition_verify(cfg, rng, args):
    region = _region_from(cfg["region"])
    cert = PartitionCertificate.from_json(cfg["certificate"])
    faces = FacePair(int(cfg["axis"]))
    report = verify_partition(cert, region, faces)
    return {"verify": report.to_json()}, report.passed


def cmd_partition_nested(cfg, rng, args):
    box = Box.from_json(cfg["box"])
    epsilon = int(cfg["epsilon"])
    region = GridRegion.full(box)
    sequence = [region]
    faces = []
    certs = []
    for axis in range(box.dim):
        fp = FacePair(axis)
        obstacles = _obstacles_from(cfg.get("obstacles_per_stage"),
                                    sequence[-1], epsilon, rng)
        cert = build_partition(sequence[-1], fp, obstacles, epsilon)
        faces.append(fp)
        certs.append(cert)
        sequence.append(cert.L)
    report = check_nested(sequence, faces, certs)
    ok = report.verified and not report.counterexample
    return {"nested": report.to_json()}, ok


def _adversary_inputs(cfg):
    params = AdversaryParams.from_json(cfg["params"])
    fam_u = CoverFamily.from_json(cfg["U"]) if cfg.get("U") else \
        CoverFamily("U", (), params.a, params.B)
    fams_v = _families(cfg.get("V", []))
    fams_w = _families(cfg.get("W", []))
    return params, fam_u, fams_v, fams_w


def cmd_adversary_run(cfg, rng, args):
    params, fam_u, fams_v, fams_w = _adversary_inputs(cfg)
    outcome = refute_cover(params, fam_u, fams_v, fams_w)
    if isinstance(outcome, CoverHolds):
        return {"outcome": outcome.to_json()}, True
    check = verify_certificate(outcome, fams_v, fams_w)
    return {"outcome": outcome.to_json(),
            "verify": check.to_json()}, check.passed


def cmd_adversary_trace(cfg, rng, args):
    params, fam_u, fams_v, fams_w = _adversary_inputs(cfg)
    return {"trace": stage_trace(params, fam_u, fams_v, fams_w)}, True


def cmd_plot_slice(cfg, rng, args):
    fix = {int(k): int(v) for k, v in cfg.get("fix", {}).items()}
    layers = []
    if "obstruction" in cfg:
        comp = GridRegion.from_json(cfg["obstruction"]["component"])
        box = comp.box
        layers.append(("component", comp.points()))
    elif "certificate" in cfg:
        cert = PartitionCertificate.from_json(cfg["certificate"])
        box = cert.U.box
        layers += [("U", cert.U.points()), ("W", cert.W.points()),
                   ("L", cert.L.points())]
    elif "region" in cfg:
        region = _region_from(cfg["region"])
        box = region.box
        layers.append(("region", region.points()))
    else:
        raise DomainError("nothing to plot")
    if "obstacles" in cfg:
        fam = CoverFamily.from_json(cfg["obstacles"])
        layers.append(("obstacle", [p for s in fam.sets for p in s]))
    svg = plot_slice(box, layers, fix, title=cfg.get("title", ""))
    return {"svg": svg}, True


HANDLERS = {
    ("space", "member"): cmd_space_member,
    ("space", "enumerate"): cmd_space_enumerate,
    ("cover", "build"): cmd_cover_build,
    ("cover", "verify"): cmd_cover_verify,
    ("cover", "search"): cmd_cover_search,
    ("ord", "compute"): cmd_ord_compute,
    ("ord", "compare"): cmd_ord_compare,
    ("partition", "build"): cmd_partition_build,
    ("partition", "verify"): cmd_partition_verify,
    ("partition", "nested"): cmd_partition_nested,
    ("adversary", "run"): cmd_adversary_run,
    ("adversary", "trace"): cmd_adversary_trace,
    ("plot", "slice"): cmd_plot_slice,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coarsedim",
        description="coarse-geometry cover/partition laboratory")
    parser.add_argument("group", choices=sorted({g for g, _ in HANDLERS}))
    parser.add_argument("command")
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", help="artifact/report output path")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--budget", type=int, default=None,
                        help="dense grid point budget")
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true")
    mode.add_argument("--greedy", action="store_true")
    return parser


def run(args) -> int:
    key = (args.group, args.command)
    if key not in HANDLERS:
        print(f"unknown command: {args.group} {args.command}", file=sys.stderr)
        return EXIT_DOMAIN
    config_path = Path(args.config)
    started = time.perf_counter()
    hashes: dict = {}
    try:
        raw = config_path.read_bytes()
    except OSError as exc:
        print(f"cannot read config {config_path}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    try:
        cfg = _resolve_refs(json.loads(raw), config_path.parent, hashes)
    except (json.JSONDecodeError, OSError) as exc:
        print(f"config parse error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    rng = np.random.default_rng(seed)
    old_budget = geometry.POINT_BUDGET
    if args.budget is not None:
        geometry.POINT_BUDGET = args.budget
    try:
        payload, ok = HANDLERS[key](cfg, rng, args)
        code = EXIT_OK if ok else EXIT_VERIFY
        error = None
    except BudgetError as exc:
        payload, ok, code, error = {}, False, EXIT_BUDGET, str(exc)
    except (DomainError, OrdinalParseError, KeyError, ValueError) as exc:
        payload, ok, code, error = {}, False, EXIT_DOMAIN, f"{type(exc).__name__}: {exc}"
    finally:
        geometry.POINT_BUDGET = old_budget
    report = {
        "schema": SCHEMA,
        "command": f"{args.group} {args.command}",
        "seed": seed,
        "inputs": {"config_sha256": _sha256(raw), "refs": hashes},
        "elapsed_s": round(time.perf_counter() - started, 6),
        "ok": ok,
        "exit_code": code,
    }
    if error:
        report["error"] = error
    else:
        report["result"] = payload
    if args.out:
        out_path = Path(args.out)
        if key == ("plot", "slice") and not error:
            out_path.write_text(payload["svg"])
        else:
            out_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text if len(text) < 20000 else json.dumps(
        {k: report[k] for k in report if k != "result"}, indent=2, sort_keys=True))
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())

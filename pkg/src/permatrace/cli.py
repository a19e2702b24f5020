"""Command line front end.

Subcommands: trace (analytic manifold to EDGEMESH), prove (plan or
infeasibility certificate for a scene), verify (check a certificate),
bench (tracing/checking timings to CSV).

Exit codes: 0 success or certificate verified, 1 certificate verification
failed, 2 usage or I/O error, 3 timeout.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from .lattice import LatticeConfig
from .manifold import parse_manifold, sample_seeds
from .pipeline import (
    Plan,
    ProblemFile,
    SolveParams,
    SolveTimeout,
    load_problem_file,
    plan_to_text,
    proof_from_text,
    proof_to_text,
    solve,
    verify_proof,
)
from .subdivision import build_template, coarse_cells, refine
from .tracer import TraceConfig, trace, write_edgemesh

BUNDLED_SCENES = ("wall2d", "gap2d", "arm3wall")


def _default_workers() -> int:
    raw = os.environ.get("MC_WORKERS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def _parse_box(text: str, dim: int):
    """`lo:hi` for every axis, or comma-separated per-axis `lo:hi` ranges."""
    ranges = text.split(",")
    if len(ranges) == 1:
        ranges = ranges * dim
    if len(ranges) != dim:
        raise ValueError(f"--box needs 1 or {dim} lo:hi ranges, got {len(ranges)}")
    lo, hi = [], []
    for r in ranges:
        a, _, b = r.partition(":")
        if not b:
            raise ValueError(f"malformed --box range {r!r} (expected lo:hi)")
        lo.append(float(a))
        hi.append(float(b))
    return tuple(lo), tuple(hi)


def _resolve_scene(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    if name in BUNDLED_SCENES:
        return Path(str(resources.files("permatrace.scenes") / f"{name}.yaml"))
    raise ValueError(
        f"scene {name!r} is neither a file nor one of {', '.join(BUNDLED_SCENES)}"
    )


def _parse_config(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(",")])


def _write_text(output: str | None, text: str) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _solve_params(pf: ProblemFile, args) -> SolveParams:
    """Defaults < scene-file params < explicit CLI flags."""
    flag_map = {
        "lam": "lam", "k": "k", "eps": "eps", "seeds": "seeds",
        "mem_budget": "memory_budget", "rng_seed": "rng_seed",
        "workers": "workers", "timeout": "timeout", "gamma": "gamma",
        "max_iters": "max_iters", "samples": "samples_per_iter",
    }
    overrides = {}
    for arg_name, attr in flag_map.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            overrides[attr] = value
    return pf.solve_params(**overrides)


def cmd_trace(args) -> int:
    field = parse_manifold(args.manifold, args.dim)
    box = _parse_box(args.box, args.dim) if args.box else None
    cfg = TraceConfig(
        lattice=LatticeConfig(args.dim, args.lam),
        box=box,
        max_edges=args.max_edges,
        workers=args.workers,
        eps=args.eps,
    )
    if args.seeds:
        if box is None:
            raise ValueError("--seeds needs --box to sample from")
        seeds = sample_seeds(field, box, args.seeds,
                             rng=np.random.default_rng(args.rng_seed))
        if seeds.shape[0] == 0:
            raise ValueError("no seed projected onto the manifold")
    else:
        seeds = np.asarray(field.seed_point())[None, :]
    t0 = time.perf_counter()
    result = trace(seeds, field, cfg)
    elapsed = time.perf_counter() - t0
    s = result.stats
    print(
        f"traced {len(result.edges)} edges / {len(result.points)} points "
        f"in {elapsed:.2f}s: levels={s.levels} evals={s.field_evaluations} "
        f"dropped={s.dropped_out_of_box} complete={s.complete} "
        f"closure={s.closure_ok} polyline={s.polyline_closed}",
        file=sys.stderr,
    )
    write_edgemesh(args.output or sys.stdout, args.dim, result.points, result.adjacency)
    return 0


def cmd_prove(args) -> int:
    pf = load_problem_file(_resolve_scene(args.scene))
    start = _parse_config(args.start) if args.start else None
    goal = _parse_config(args.goal) if args.goal else None
    problem = pf.problem(start, goal)
    params = _solve_params(pf, args)
    outcome = solve(problem, params)
    if isinstance(outcome, Plan):
        _write_text(args.output, plan_to_text(outcome))
        print(f"plan found: {len(outcome.path)} waypoints "
              f"({outcome.stats.seconds:.1f}s, {len(outcome.stats.iterations)} iterations)",
              file=sys.stderr)
        return 0
    if isinstance(outcome, SolveTimeout):
        print(f"timeout: {outcome.reason} after {outcome.stats.seconds:.1f}s "
              f"({len(outcome.stats.iterations)} iterations)", file=sys.stderr)
        return 3
    _write_text(args.output, proof_to_text(outcome))
    print(f"infeasibility certificate: {outcome.points.shape[0]} points, "
          f"{outcome.coarse_edges} coarse edges (fine resolution {outcome.lam:g})",
          file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    proof = proof_from_text(Path(args.proof).read_text())
    pf = load_problem_file(_resolve_scene(args.scene))
    start = _parse_config(args.start) if args.start else None
    goal = _parse_config(args.goal) if args.goal else None
    problem = pf.problem(start, goal)
    report = verify_proof(proof, problem, reconstruct=not args.no_reconstruct)
    for check in report.checks:
        mark = "ok  " if check.passed else "FAIL"
        print(f"[{mark}] {check.name}: {check.detail}")
    if report.ok:
        print("certificate verified")
        return 0
    print("certificate REJECTED", file=sys.stderr)
    return 1


def cmd_bench(args) -> int:
    field = parse_manifold(args.manifold, args.dim)
    if args.scene:
        from .pipeline import _not_free_checker

        pf = load_problem_file(_resolve_scene(args.scene))
        if pf.robot.dof != args.dim:
            raise ValueError("scene robot dof must match --dim for bench")
        problem = pf.problem()
        checker = _not_free_checker(problem)
    else:
        checker = lambda pts: np.zeros(len(pts), dtype=bool)
    from .backend import BACKEND

    rows = []
    for lam in args.lambdas:
        cfg = TraceConfig(
            lattice=LatticeConfig(args.dim, lam * args.k),
            workers=args.workers,
            eps=args.eps,
            box=_parse_box(args.box, args.dim) if args.box else None,
        )
        seeds = np.asarray(field.seed_point())[None, :]
        t0 = time.perf_counter()
        result = trace(seeds, field, cfg)
        tri_time = time.perf_counter() - t0
        template = build_template(args.dim, args.k)
        cells = coarse_cells(result)
        t0 = time.perf_counter()
        refined = refine(cells, template, field, checker, cfg,
                         memory_budget=args.mem_budget)
        refine_time = time.perf_counter() - t0
        check_time = float(sum(b.check_seconds for b in refined.batch_stats))
        rows.append({
            "backend": BACKEND,
            "dim": args.dim,
            "lambda": lam,
            "k": args.k,
            "edges": len(result.edges),
            "points": refined.points.shape[0],
            "tri_time": f"{tri_time + refine_time - check_time:.6f}",
            "check_time": f"{check_time:.6f}",
            "total_time": f"{tri_time + refine_time:.6f}",
        })
    target = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        writer = csv.DictWriter(target, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.output:
            target.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="permatrace",
        description="Trace implicit manifolds on permutahedral lattices and "
                    "build motion-planning infeasibility certificates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--eps", type=float, default=1e-9,
                       help="bisection bracket length (default 1e-9)")
        p.add_argument("--workers", type=int, default=_default_workers(),
                       help="stage parallelism (default $MC_WORKERS or 1)")
        p.add_argument("--rng-seed", type=int, default=0, help="RNG seed")
        p.add_argument("--output", help="output path (default stdout)")

    p = sub.add_parser("trace", help="trace an analytic manifold to EDGEMESH")
    p.add_argument("--manifold", required=True,
                   help="name:key=val,... e.g. sphere:r=1 or plane:n=1|0,d=0.3")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True,
                   help="lattice resolution")
    p.add_argument("--box", help="clamp box lo:hi (one range or per-axis list)")
    p.add_argument("--seeds", type=int, default=0,
                   help="sample this many seeds in --box instead of the natural seed")
    p.add_argument("--max-edges", type=int, default=10_000_000)
    common(p)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("prove", help="plan or prove infeasibility for a scene")
    p.add_argument("--scene", required=True,
                   help=f"scene file or bundled name ({', '.join(BUNDLED_SCENES)})")
    p.add_argument("--start", help="comma-separated start configuration")
    p.add_argument("--goal", help="comma-separated goal configuration")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="fine lattice resolution")
    p.add_argument("--k", type=int, default=None, help="subdivision factor")
    p.add_argument("--eps", type=float, default=None, help="bisection bracket length")
    p.add_argument("--seeds", type=int, default=None, help="trace seeds per round")
    p.add_argument("--mem-budget", dest="mem_budget", type=int, default=None,
                   help="refinement batch memory budget in bytes")
    p.add_argument("--timeout", type=float, default=None, help="seconds before giving up")
    p.add_argument("--gamma", type=float, default=None, help="RBF bandwidth")
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--samples", type=int, default=None, help="roadmap samples per iteration")
    p.add_argument("--workers", type=int, default=_default_workers(),
                   help="stage parallelism (default $MC_WORKERS or 1)")
    p.add_argument("--rng-seed", type=int, default=0, help="RNG seed")
    p.add_argument("--output", help="output path (default stdout)")
    p.set_defaults(func=cmd_prove)

    p = sub.add_parser("verify", help="check an infeasibility certificate")
    p.add_argument("--proof", required=True, help="certificate path")
    p.add_argument("--scene", required=True)
    p.add_argument("--start", help="override the scene file's start")
    p.add_argument("--goal", help="override the scene file's goal")
    p.add_argument("--no-reconstruct", action="store_true",
                   help="skip the reconstruction check")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="tracing/checking timings to CSV")
    p.add_argument("--manifold", default="sphere:r=0.8")
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--lambdas", type=lambda s: [float(v) for v in s.split(",")],
                   default=[0.5, 0.25], help="comma-separated fine resolutions")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--scene", help="optional scene for the collision checker")
    p.add_argument("--box", help="clamp box lo:hi")
    p.add_argument("--mem-budget", dest="mem_budget", type=int, default=64 * 2**20)
    common(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Infeasibility-certificate pipeline.

Alternates roadmap growth with manifold construction: free samples connected
to the start form the positive class, everything else the negative class; a
kernel classifier trained on those labels proposes a separating manifold,
whose zero set is traced, subdivided and collision-checked.  Free points on
the zero set feed the roadmap and sharpen the next classifier; a zero set
with no free point at the target resolution becomes a certificate that the
start and goal are disconnected.

A certificate is self-contained: its manifold, resolution parameters and
point cloud are enough to re-derive the construction, which is what
verify_proof does on top of re-checking collisions and separation.
"""

from __future__ import annotations

import hashlib
import json
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import yaml

from .collision import (
    RobotModel,
    Scene,
    batch_check,
    config_in_collision,
    joint_limits,
    robot_from_dict,
    robot_to_dict,
    scene_from_dict,
    scene_to_dict,
)
from .lattice import LatticeConfig
from .manifold import (
    BoxBarrier,
    KernelClassifierManifold,
    classifier_from_text,
    classifier_to_text,
    median_gamma,
    sample_seeds,
    train_classifier,
)
from .planner import Roadmap, find_path, grow, insert_free_points, labeled_samples
from .subdivision import build_template, coarse_cells, refine
from .tracer import TraceConfig, trace

__all__ = [
    "Problem",
    "ProblemFile",
    "SolveParams",
    "Plan",
    "SolveTimeout",
    "SolveStats",
    "InfeasibilityProof",
    "ProofFormatError",
    "VerifyReport",
    "CheckResult",
    "fingerprint",
    "load_problem_file",
    "solve",
    "verify_proof",
    "proof_to_text",
    "proof_from_text",
    "plan_to_text",
    "plan_from_text",
]

_VERSION = "0.1.0"


class ProofFormatError(ValueError):
    """Certificate text does not parse."""


@dataclass
class Problem:
    """Scene + robot + endpoints; endpoints must be valid and collision-free."""

    robot: RobotModel
    scene: Scene
    q_start: np.ndarray
    q_goal: np.ndarray

    def __post_init__(self):
        self.q_start = np.asarray(self.q_start, dtype=np.float64)
        self.q_goal = np.asarray(self.q_goal, dtype=np.float64)
        n = self.robot.dof
        if self.q_start.shape != (n,) or self.q_goal.shape != (n,):
            raise ValueError(f"start/goal must have {n} coordinates")
        lo, hi = joint_limits(self.robot)
        for name, q in (("start", self.q_start), ("goal", self.q_goal)):
            if np.any(q < lo) or np.any(q > hi):
                raise ValueError(f"{name} configuration violates the joint limits")
            if config_in_collision(q, self.robot, self.scene):
                raise ValueError(f"{name} configuration is in collision")

    @property
    def dof(self) -> int:
        return self.robot.dof

    def limits(self):
        return joint_limits(self.robot)


def fingerprint(problem: Problem) -> str:
    """SHA-256 over the canonical robot+scene serialization."""
    canon = json.dumps(
        {"robot": robot_to_dict(problem.robot), "scene": scene_to_dict(problem.scene)},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canon.encode()).hexdigest()


@dataclass
class ProblemFile:
    """Parsed scene file: models plus optional suggested endpoints/parameters."""

    robot: RobotModel
    scene: Scene
    start: np.ndarray | None
    goal: np.ndarray | None
    params: dict

    def problem(self, start=None, goal=None) -> Problem:
        start = self.start if start is None else start
        goal = self.goal if goal is None else goal
        if start is None or goal is None:
            raise ValueError("scene file has no endpoints; pass --start/--goal")
        return Problem(self.robot, self.scene, start, goal)

    def solve_params(self, **overrides) -> "SolveParams":
        """SolveParams from the file's params block; overrides win."""
        key_map = {
            "lambda": ("lam", float), "k": ("k", int), "eps": ("eps", float),
            "gamma": ("gamma", float), "seeds": ("seeds", int),
            "samples": ("samples_per_iter", int), "margin": ("trace_margin", float),
            "regularization": ("regularization", float), "push": ("push", float),
        }
        params = SolveParams()
        for key, value in self.params.items():
            if key not in key_map:
                raise ValueError(f"unknown scene parameter {key!r}")
            attr, cast = key_map[key]
            setattr(params, attr, cast(value))
        for attr, value in overrides.items():
            if not hasattr(params, attr):
                raise ValueError(f"unknown solve parameter {attr!r}")
            setattr(params, attr, value)
        params.__post_init__()
        return params


def load_problem_file(path) -> ProblemFile:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict) or "robot" not in data or "scene" not in data:
        raise ValueError(f"{path}: expected top-level robot: and scene: sections")
    robot = robot_from_dict(data["robot"])
    scene = scene_from_dict(data["scene"])
    prob = data.get("problem") or {}
    start = np.asarray(prob["start"], dtype=np.float64) if "start" in prob else None
    goal = np.asarray(prob["goal"], dtype=np.float64) if "goal" in prob else None
    return ProblemFile(robot, scene, start, goal, dict(prob.get("params") or {}))


@dataclass
class SolveParams:
    """Resolution and budget knobs for solve()."""

    lam: float = 0.05          # fine lattice resolution (certificate grid)
    k: int = 2                 # subdivision factor; tracing runs at lam * k
    eps: float = 1e-9          # bisection bracket length
    seeds: int = 20
    seed_tol: float = 1e-8
    memory_budget: int = 64 * 2**20
    rng_seed: int = 0
    workers: int = 1
    samples_per_iter: int = 500
    max_iters: int = 50
    timeout: float = 300.0
    gamma: float | None = None
    # loose ridge on purpose: tight interpolation blows the weights up on
    # near-duplicate samples and the field then overshoots between them
    regularization: float = 1e-3
    # bias offset pushing the zero set off the class midline into the
    # blocked side; the midline sits half a sample gap into free space, so
    # without the push the loop keeps finding free points forever.  None
    # picks lam * sqrt(2 * gamma), about one fine cell deep, which also
    # clears the free pockets where obstacles meet the limit box.  Features
    # of the blocked region thinner than ~2 lam are below the certificate
    # resolution either way.
    push: float | None = None
    knn: int = 10
    max_edges: int = 10_000_000
    trace_margin: float | None = None  # box inflation; default 3 * lam * k

    def __post_init__(self):
        if self.lam <= 0 or self.k < 1 or self.eps <= 0:
            raise ValueError("lam, k and eps must be positive")
        if self.seeds < 1 or self.samples_per_iter < 1 or self.max_iters < 1:
            raise ValueError("seeds, samples_per_iter and max_iters must be positive")


@dataclass
class SolveStats:
    iterations: list[dict] = field(default_factory=list)
    outcome: str = ""
    seconds: float = 0.0


@dataclass
class Plan:
    """Collision-free path, validated at half the roadmap step."""

    path: list[np.ndarray]
    stats: SolveStats


@dataclass
class SolveTimeout:
    reason: str
    stats: SolveStats


@dataclass
class InfeasibilityProof:
    """Certificate that no path connects start and goal inside the limits.

    Carries the separating manifold, the construction parameters, the fine
    intersection points (all non-free), the endpoint field values, the scene
    fingerprint and the tracer closure flags; coarse_edges/coarse_cells pin
    the construction so a verifier can re-derive it.
    """

    manifold: KernelClassifierManifold
    lam: float
    k: int
    eps: float
    points: np.ndarray
    f_start: float
    f_goal: float
    fingerprint: str
    closure_ok: bool
    polyline_closed: bool | None
    coarse_edges: int
    coarse_cells: int
    meta: dict = field(default_factory=dict)


def _not_free_checker(problem: Problem, accumulator: list | None = None):
    lo, hi = problem.limits()

    def checker(points: np.ndarray) -> np.ndarray:
        t0 = time.perf_counter()
        points = np.asarray(points, dtype=np.float64)
        not_free = np.ones(points.shape[0], dtype=bool)
        inside = np.all((points >= lo) & (points <= hi), axis=1)
        if inside.any():
            not_free[inside] = batch_check(points[inside], problem.robot, problem.scene)
        if accumulator is not None:
            accumulator.append(time.perf_counter() - t0)
        return not_free

    return checker


def _drop_segment(roadmap: Roadmap, path) -> bool:
    # re-validate a found path at half step; drop the first failing edge
    for a, b in zip(path, path[1:]):
        if not roadmap.validate_segment(a, b, delta=roadmap.delta / 2.0):
            i, j = roadmap.index_of(a), roadmap.index_of(b)
            roadmap.neighbors[i].pop(j, None)
            roadmap.neighbors[j].pop(i, None)
            return True
    return False


def solve(problem: Problem, params: SolveParams | None = None):
    """Search for a Plan or an InfeasibilityProof; SolveTimeout when neither.

    Fixed params.rng_seed makes the outcome deterministic, including the
    serialized certificate bytes (worker count never affects results).
    """
    params = params or SolveParams()
    t0 = time.perf_counter()
    deadline = t0 + params.timeout
    stats = SolveStats()
    n = problem.dof
    lo, hi = problem.limits()
    rng = np.random.default_rng(params.rng_seed)
    roadmap = Roadmap(problem.robot, problem.scene, delta=params.lam / 4.0,
                      knn=params.knn, rng=rng)
    roadmap.add_config(problem.q_start, free=True)
    roadmap.add_config(problem.q_goal, free=True)
    template = build_template(n, params.k)
    coarse = params.lam * params.k
    fp = fingerprint(problem)

    def finish(outcome: str):
        stats.outcome = outcome
        stats.seconds = time.perf_counter() - t0

    for iteration in range(1, params.max_iters + 1):
        record = {"iteration": iteration}
        stats.iterations.append(record)
        if time.perf_counter() > deadline:
            finish("timeout")
            return SolveTimeout("wall-clock timeout", stats)
        grow(roadmap, params.samples_per_iter)
        record["roadmap"] = len(roadmap)
        path = find_path(roadmap, problem.q_start, problem.q_goal)
        while path is not None and _drop_segment(roadmap, path):
            path = find_path(roadmap, problem.q_start, problem.q_goal)
        if path is not None:
            finish("plan")
            return Plan([np.asarray(q) for q in path], stats)
        labels = labeled_samples(roadmap, problem.q_start)
        record["positive"] = len(labels.positive)
        record["negative"] = len(labels.negative)
        if len(labels.positive) == 0 or len(labels.negative) == 0:
            continue
        t = time.perf_counter()
        gamma = params.gamma
        if gamma is None:
            gamma = median_gamma(np.vstack([labels.positive, labels.negative]))
        # the barrier pins the field negative outside the limit box, so the
        # zero set closes near the box instead of leaking to the kernel
        # underflow radius; joints cannot leave the box anyway
        sigma = 1.0 / np.sqrt(2.0 * gamma)
        barrier = BoxBarrier(lo, hi, scale=sigma / 4.0, gain=2.0 / sigma)
        manifold = train_classifier(
            labels.positive, labels.negative,
            gamma=gamma, regularization=params.regularization, barrier=barrier,
        )
        push = params.push
        if push is None:
            push = params.lam * np.sqrt(2.0 * gamma)
        if push:
            manifold = KernelClassifierManifold(
                manifold.support, manifold.weights, manifold.gamma,
                bias=manifold.bias + push, barrier=barrier,
                train_accuracy=manifold.train_accuracy,
            )
        record["train_s"] = time.perf_counter() - t
        margin = params.trace_margin
        if margin is None:
            # room for the zero set (within ~2 sigma of the box thanks to
            # the barrier) plus full lattice edges around its crossings
            margin = max(3.0 * coarse, 2.0 * sigma + (1.0 + 2.0 * np.sqrt(n)) * coarse)
        trace_cfg = TraceConfig(
            lattice=LatticeConfig(n, coarse),
            box=(tuple(lo - margin), tuple(hi + margin)),
            max_edges=params.max_edges,
            workers=params.workers,
            eps=params.eps,
        )
        f_start = manifold.value(problem.q_start)
        f_goal = manifold.value(problem.q_goal)
        if (f_start > 0.0) == (f_goal > 0.0):
            record["skip"] = "no separation"
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # sparse zero sets fail many draws
            seeds = sample_seeds(manifold, (lo, hi), params.seeds,
                                 tol=params.seed_tol, rng=rng,
                                 min_separation=coarse / 2.0)
        if seeds.shape[0] == 0:
            record["skip"] = "no seeds"
            continue
        t = time.perf_counter()
        result = trace(seeds, manifold, trace_cfg)
        record["trace_s"] = time.perf_counter() - t
        record["edges"] = len(result.edges)
        if not result.edges or not result.closure_ok:
            record["skip"] = "trace not closed"
            record["dropped"] = result.stats.dropped_out_of_box
            record["complete"] = result.stats.complete
            continue
        cells = coarse_cells(result)
        record["cells"] = len(cells)
        check_times: list[float] = []
        checker = _not_free_checker(problem, check_times)
        t = time.perf_counter()
        refined = refine(cells, template, manifold, checker, trace_cfg,
                         memory_budget=params.memory_budget)
        record["refine_s"] = time.perf_counter() - t
        record["check_s"] = float(sum(check_times))
        record["points"] = int(refined.points.shape[0])
        record["free_points"] = int(refined.free_points.shape[0])
        if refined.free_points.shape[0]:
            # sub-resolution duplicates add no information and degrade the
            # Gram conditioning, so dedup below the certificate scale
            insert_free_points(roadmap, refined.free_points,
                               dedup_tol=params.lam / 4.0)
            continue
        if refined.points.shape[0] == 0:
            record["skip"] = "empty refinement"
            continue
        proof = InfeasibilityProof(
            manifold=manifold,
            lam=params.lam,
            k=params.k,
            eps=params.eps,
            points=refined.points,
            f_start=f_start,
            f_goal=f_goal,
            fingerprint=fp,
            closure_ok=result.stats.closure_ok,
            polyline_closed=result.stats.polyline_closed,
            coarse_edges=len(result.edges),
            coarse_cells=len(cells),
            meta={
                "generator": f"permatrace {_VERSION}",
                "iterations": str(iteration),
                "support": str(manifold.support.shape[0]),
            },
        )
        report = verify_proof(proof, problem)
        if report.ok:
            finish("proof")
            return proof
        record["skip"] = "self-verification failed: " + report.first_failure()
    finish("timeout")
    return SolveTimeout("iteration budget exhausted", stats)


# -- verification -------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass
class VerifyReport:
    checks: list[CheckResult]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def first_failure(self) -> str:
        for c in self.checks:
            if not c.passed:
                return f"{c.name}: {c.detail}"
        return ""


def _gradient_norms(manifold: KernelClassifierManifold, points: np.ndarray) -> np.ndarray:
    out = np.empty(points.shape[0])
    for i, p in enumerate(points):
        out[i] = float(np.linalg.norm(manifold.gradient(p)))
    return out


def verify_proof(proof: InfeasibilityProof, problem: Problem,
                 reconstruct: bool = True) -> VerifyReport:
    """Independent certificate check; every line must pass.

    (a) fingerprint binds the certificate to this robot+scene;
    (b) the manifold separates start from goal and the stored field values
        match a re-evaluation;
    (c) every stored point is non-free (in collision or outside the limits);
    (d) every stored point lies within eps of the zero set, measured as
        |F| <= 4 * eps * (|grad F| + 1e-12);
    (e) the tracer closure/parity flags are set;
    (f) re-running trace+refine from the certificate's own manifold and
        parameters (seeding at the stored points) reproduces the recorded
        coarse edge/cell counts and the stored point set.
    """
    checks: list[CheckResult] = []
    m = proof.manifold
    points = np.asarray(proof.points, dtype=np.float64)

    expected = fingerprint(problem)
    checks.append(CheckResult(
        "fingerprint", proof.fingerprint == expected,
        f"stored {proof.fingerprint[:12]}.., scene has {expected[:12]}..",
    ))

    if m.dim != problem.dof or points.ndim != 2 or points.shape[1] != problem.dof:
        checks.append(CheckResult(
            "dimensions", False,
            f"manifold dim {m.dim}, points {points.shape}, robot dof {problem.dof}",
        ))
        return VerifyReport(checks)

    f_start = m.value(problem.q_start)
    f_goal = m.value(problem.q_goal)
    separated = (f_start > 0.0) != (f_goal > 0.0)
    stored_ok = (
        abs(f_start - proof.f_start) <= 1e-9 * max(1.0, abs(f_start))
        and abs(f_goal - proof.f_goal) <= 1e-9 * max(1.0, abs(f_goal))
    )
    checks.append(CheckResult(
        "separation", separated and stored_ok,
        f"F(start)={f_start:.6g}, F(goal)={f_goal:.6g}, stored "
        f"({proof.f_start:.6g}, {proof.f_goal:.6g})",
    ))

    if points.shape[0] == 0:
        checks.append(CheckResult("points", False, "certificate has no points"))
        return VerifyReport(checks)

    not_free = _not_free_checker(problem)(points)
    checks.append(CheckResult(
        "points non-free", bool(not_free.all()),
        f"{int((~not_free).sum())} of {len(points)} points are free",
    ))

    residuals = np.abs(m.values(points))
    tolerance = 4.0 * proof.eps * (_gradient_norms(m, points) + 1e-12)
    on_manifold = residuals <= tolerance
    worst = int(np.argmax(residuals - tolerance))
    checks.append(CheckResult(
        "points on zero set", bool(on_manifold.all()),
        f"worst |F|={residuals[worst]:.3g} vs tol {tolerance[worst]:.3g}",
    ))

    flags_ok = proof.closure_ok and (proof.polyline_closed is not False)
    checks.append(CheckResult(
        "closure flags", flags_ok,
        f"closure_ok={proof.closure_ok}, polyline_closed={proof.polyline_closed}",
    ))

    if reconstruct and all(c.passed for c in checks):
        checks.append(_reconstruction_check(proof, points))
    return VerifyReport(checks)


def _reconstruction_check(proof: InfeasibilityProof, points: np.ndarray) -> CheckResult:
    from scipy.spatial import cKDTree

    name = "reconstruction"
    n = points.shape[1]
    cfg = TraceConfig(
        lattice=LatticeConfig(n, proof.lam * proof.k),
        max_edges=4 * proof.coarse_edges + 1024,
        workers=1,
        eps=proof.eps,
    )
    result = trace(points, proof.manifold, cfg)
    if not result.closure_ok:
        return CheckResult(name, False, "re-trace did not close")
    if len(result.edges) != proof.coarse_edges:
        return CheckResult(
            name, False,
            f"re-trace found {len(result.edges)} coarse edges, recorded {proof.coarse_edges}",
        )
    cells = coarse_cells(result)
    if len(cells) != proof.coarse_cells:
        return CheckResult(
            name, False,
            f"re-trace found {len(cells)} coarse cells, recorded {proof.coarse_cells}",
        )
    template = build_template(n, proof.k)
    refined = refine(
        cells, template, proof.manifold,
        lambda pts: np.ones(len(pts), dtype=bool), cfg,
    )
    if refined.points.shape[0] != points.shape[0]:
        return CheckResult(
            name, False,
            f"re-refinement produced {refined.points.shape[0]} points, stored {points.shape[0]}",
        )
    tol = max(64.0 * proof.eps, 1e-12)
    forward = cKDTree(refined.points).query(points)[0]
    backward = cKDTree(points).query(refined.points)[0]
    gap = float(max(forward.max(), backward.max()))
    if gap > tol:
        return CheckResult(name, False, f"point sets differ by {gap:.3g} > {tol:.3g}")
    return CheckResult(name, True, f"{points.shape[0]} points reproduced within {tol:.3g}")


# -- serialization ------------------------------------------------------------

def proof_to_text(proof: InfeasibilityProof) -> str:
    """INFPROOF v1; floats use repr so parsing returns the exact doubles."""
    lines = ["INFPROOF v1", "[manifold]"]
    lines.append(classifier_to_text(proof.manifold).rstrip("\n"))
    lines.append("[params]")
    lines.append(f"dim {proof.points.shape[1]}")
    lines.append(f"lambda {proof.lam!r}")
    lines.append(f"k {proof.k}")
    lines.append(f"eps {proof.eps!r}")
    lines.append(f"coarse_edges {proof.coarse_edges}")
    lines.append(f"coarse_cells {proof.coarse_cells}")
    lines.append(f"closure {int(proof.closure_ok)}")
    polyline = "na" if proof.polyline_closed is None else str(int(proof.polyline_closed))
    lines.append(f"polyline {polyline}")
    lines.append("[signs]")
    lines.append(f"f_start {proof.f_start!r}")
    lines.append(f"f_goal {proof.f_goal!r}")
    lines.append("[points]")
    lines.append(f"count {proof.points.shape[0]}")
    for row in proof.points:
        lines.append(" ".join(repr(float(v)) for v in row))
    lines.append("[fingerprint]")
    lines.append(f"scene {proof.fingerprint}")
    lines.append("[meta]")
    for key in sorted(proof.meta):
        lines.append(f"{key} {proof.meta[key]}")
    return "\n".join(lines) + "\n"


def _split_sections(lines: list[str]) -> dict[str, list[str]]:
    sections: dict[str, list[str]] = {}
    current: list[str] | None = None
    for ln in lines:
        if ln.startswith("[") and ln.endswith("]"):
            name = ln[1:-1]
            if name in sections:
                raise ProofFormatError(f"duplicate section [{name}]")
            current = sections[name] = []
        elif current is not None:
            current.append(ln)
        elif ln.strip():
            raise ProofFormatError(f"content before first section: {ln!r}")
    return sections


def proof_from_text(text: str) -> InfeasibilityProof:
    lines = [ln.rstrip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "INFPROOF v1":
        raise ProofFormatError("missing INFPROOF v1 header")
    sections = _split_sections(lines[1:])
    for required in ("manifold", "params", "signs", "points", "fingerprint"):
        if required not in sections:
            raise ProofFormatError(f"missing section [{required}]")
    try:
        manifold = classifier_from_text("\n".join(sections["manifold"]))
    except ValueError as exc:
        raise ProofFormatError(f"bad manifold section: {exc}") from exc
    try:
        params = dict(ln.split(None, 1) for ln in sections["params"])
        signs = dict(ln.split(None, 1) for ln in sections["signs"])
        dim = int(params["dim"])
        lam = float(params["lambda"])
        k = int(params["k"])
        eps = float(params["eps"])
        coarse_edges = int(params["coarse_edges"])
        coarse_cells = int(params["coarse_cells"])
        closure = bool(int(params["closure"]))
        polyline = None if params["polyline"] == "na" else bool(int(params["polyline"]))
        f_start = float(signs["f_start"])
        f_goal = float(signs["f_goal"])
        plines = sections["points"]
        count = int(plines[0].split()[1]) if plines and plines[0].startswith("count") else -1
        if count < 0 or len(plines) != count + 1:
            raise ValueError("points section count mismatch")
        points = np.array([[float(v) for v in ln.split()] for ln in plines[1:]])
        points = points.reshape(count, dim)
        fp_line = sections["fingerprint"][0].split()
        if fp_line[0] != "scene" or len(fp_line) != 2:
            raise ValueError("bad fingerprint line")
        meta = dict(ln.split(None, 1) for ln in sections.get("meta", []))
    except (KeyError, IndexError, ValueError) as exc:
        raise ProofFormatError(f"malformed certificate: {exc}") from exc
    return InfeasibilityProof(
        manifold=manifold, lam=lam, k=k, eps=eps, points=points,
        f_start=f_start, f_goal=f_goal, fingerprint=fp_line[1],
        closure_ok=closure, polyline_closed=polyline,
        coarse_edges=coarse_edges, coarse_cells=coarse_cells, meta=meta,
    )


def plan_to_text(plan: Plan) -> str:
    lines = ["PLAN v1", f"dim {plan.path[0].size}", f"count {len(plan.path)}"]
    for q in plan.path:
        lines.append(" ".join(repr(float(v)) for v in q))
    return "\n".join(lines) + "\n"


def plan_from_text(text: str) -> list[np.ndarray]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "PLAN v1":
        raise ValueError("missing PLAN v1 header")
    dim = int(lines[1].split()[1])
    count = int(lines[2].split()[1])
    rows = lines[3:]
    if len(rows) != count:
        raise ValueError("plan row count mismatch")
    path = [np.array([float(v) for v in ln.split()]) for ln in rows]
    if any(q.size != dim for q in path):
        raise ValueError("plan row width does not match dim")
    return path

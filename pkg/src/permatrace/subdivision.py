"""Symmetric k-fold subdivision of traced cells, processed in memory batches.

A full-dimensional cell is refined by instantiating the subdivision template
of its dimension: the template holds the fine lattice vertices and edges of
a k-times scaled reference cell, each fine vertex carrying the barycentric
weights that map it into any coarse cell.  Refinement walks the template
over every cell of a batch with one vectorized pass per barrier stage
(map vertices, evaluate field, extract sign-changing edges, bisect, dedup,
collision-check), so results do not depend on worker counts or batching.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import lattice
from .lattice import PermSimplex
from .manifold import intersection_points_batch
from .tracer import TraceConfig, TraceResult

__all__ = [
    "SubdivisionTemplate",
    "BatchPlan",
    "BatchStat",
    "RefinedResult",
    "BudgetError",
    "RefineError",
    "containment_check",
    "barycentric_weights",
    "build_template",
    "local_to_global",
    "coarse_cells",
    "plan_batches",
    "refine",
]


class BudgetError(ValueError):
    """A single cell's working set exceeds the memory budget."""


class RefineError(RuntimeError):
    """The collision checker failed inside refine."""


def containment_check(vertex, k: int) -> bool:
    """Integer test for template membership: k >= v_0 >= ... >= v_{n-1} >= 0."""
    prev = int(k)
    for c in vertex:
        if c > prev:
            return False
        prev = c
    return prev >= 0


def barycentric_weights(vertex, k: int) -> np.ndarray:
    """Weights (1 - v_0/k, (v_0-v_1)/k, ..., (v_{n-2}-v_{n-1})/k, v_{n-1}/k)."""
    v = np.asarray(vertex, dtype=np.float64)
    w = np.empty(v.size + 1)
    w[0] = 1.0 - v[0] / k
    w[1:-1] = (v[:-1] - v[1:]) / k
    w[-1] = v[-1] / k
    return w


@dataclass(frozen=True, eq=False)
class SubdivisionTemplate:
    """Fine vertices/edges of the k-fold subdivided reference cell.

    vertices: (V, n) int lattice coordinates, lexicographically sorted.
    edges: (E, 2) int index pairs into vertices, i < j, sorted.
    weights: (V, n+1) barycentric weights of each vertex in a coarse cell.
    """

    n: int
    k: int
    vertices: np.ndarray
    edges: np.ndarray
    weights: np.ndarray


def build_template(n: int, k: int) -> SubdivisionTemplate:
    """Flood-fill the subdivided reference cell from its first edge.

    Starts at the edge (base 0, parts ({0}, {1..n})) and repeatedly takes
    2-simplex cofaces, keeping edges whose endpoints both pass
    containment_check; this visits every fine edge of the region.
    """
    if n < 2:
        raise ValueError("template dimension must be >= 2")
    if k < 1:
        raise ValueError("subdivision factor must be >= 1")
    first = PermSimplex((0,) * n, ((0,), tuple(range(1, n + 1))))
    seen = {first}
    queue = deque([first])
    while queue:
        edge = queue.popleft()
        for face in lattice.cofaces2_of_edge(edge):
            for e2 in lattice.edges_of_2simplex(face):
                if e2 in seen:
                    continue
                va, vb = lattice.edge_vertices(e2)
                if containment_check(va, k) and containment_check(vb, k):
                    seen.add(e2)
                    queue.append(e2)
    verts = sorted({v for e in seen for v in lattice.edge_vertices(e)})
    index = {v: i for i, v in enumerate(verts)}
    pairs = sorted(
        tuple(sorted((index[va], index[vb])))
        for va, vb in (lattice.edge_vertices(e) for e in seen)
    )
    vertices = np.asarray(verts, dtype=np.int64)
    edges = np.asarray(pairs, dtype=np.int64).reshape(len(pairs), 2)
    weights = np.vstack([barycentric_weights(v, k) for v in verts])
    return SubdivisionTemplate(n=n, k=k, vertices=vertices, edges=edges, weights=weights)


def local_to_global(vertex, k: int, cell: PermSimplex, config: lattice.LatticeConfig) -> np.ndarray:
    """Map a template vertex into a coarse cell by barycentric combination."""
    if not containment_check(vertex, k):
        raise ValueError(f"vertex {tuple(vertex)} is outside the k={k} template region")
    corners = np.asarray(lattice.simplex_vertices(cell), dtype=np.float64)
    corners = corners * config.scale + np.asarray(config.offset)
    return barycentric_weights(vertex, k) @ corners


def coarse_cells(result: TraceResult) -> list[PermSimplex]:
    """Every full-dimensional cell containing a traced edge, deduplicated.

    Sorted canonically (base vertex, then partition) rather than by trace
    discovery order: downstream dedup keeps the first point of each close
    cluster, so refinement output stays identical no matter which seeds the
    trace started from.
    """
    out = {cell for edge in result.edges for cell in lattice.cellcofaces_of_edge(edge)}
    return sorted(out, key=lambda c: (c.base, c.parts))


@dataclass(frozen=True)
class BatchPlan:
    batches: tuple[tuple[PermSimplex, ...], ...]
    bytes_per_cell: int
    memory_budget: int


def _cell_bytes(template: SubdivisionTemplate) -> int:
    # per-cell working set: mapped fine vertices + field values + crossing
    # edge endpoints for bisection, all float64
    v, n = template.vertices.shape
    e = template.edges.shape[0]
    return 8 * (v * (n + 1) + e * (2 * n + 2))


def plan_batches(cells, template: SubdivisionTemplate, memory_budget: int) -> BatchPlan:
    """Greedy order-preserving batches under the byte budget."""
    per_cell = _cell_bytes(template)
    if per_cell > memory_budget:
        raise BudgetError(
            f"one cell needs {per_cell} bytes but the budget is {memory_budget}"
        )
    cells = list(cells)
    per_batch = max(1, memory_budget // per_cell)
    batches = tuple(
        tuple(cells[i : i + per_batch]) for i in range(0, len(cells), per_batch)
    )
    return BatchPlan(batches=batches, bytes_per_cell=per_cell, memory_budget=memory_budget)


@dataclass
class BatchStat:
    index: int
    cells: int
    fine_vertices: int
    crossing_edges: int
    new_points: int
    check_seconds: float


@dataclass
class RefinedResult:
    """Deduplicated fine intersection points with in-collision labels."""

    points: np.ndarray
    in_collision: np.ndarray
    free_points: np.ndarray
    eps_dedup: float
    batch_stats: list[BatchStat]


class _PointRegistry:
    """Grid-quantized dedup at eps: collapses points within eps of a keeper."""

    def __init__(self, eps: float, n: int):
        self.eps = eps
        self.cells: dict[tuple[int, ...], list[int]] = {}
        self.points: list[np.ndarray] = []
        self.neighborhood = list(product((-1, 0, 1), repeat=n))

    def add(self, p: np.ndarray) -> int | None:
        """Index of the new point, or None when a keeper already covers it."""
        key = tuple(int(c) for c in np.floor(p / self.eps))
        for off in self.neighborhood:
            bucket = self.cells.get(tuple(k + o for k, o in zip(key, off)))
            if not bucket:
                continue
            for idx in bucket:
                if float(np.linalg.norm(self.points[idx] - p)) <= self.eps:
                    return None
        idx = len(self.points)
        self.points.append(p)
        self.cells.setdefault(key, []).append(idx)
        return idx


def refine(
    cells,
    template: SubdivisionTemplate,
    manifold,
    checker,
    cfg: TraceConfig,
    memory_budget: int | None = None,
    eps_dedup: float | None = None,
) -> RefinedResult:
    """Subdivide the cells, bisect sign-changing fine edges, label the points.

    `cells` come from a trace on cfg.lattice (scale = fine resolution times
    template.k); `checker` maps an (m, n) array to a boolean in-collision
    mask.  Work proceeds batch by batch under `memory_budget`, but the
    result is identical for any budget (and any worker count: the stages
    are single vectorized passes) because candidate points are deduplicated
    in cell-major, template-edge-major order either way.
    """
    cells = list(cells)
    n = template.n
    if cfg.lattice.dim != n:
        raise ValueError("template and lattice dimension mismatch")
    if eps_dedup is None:
        eps_dedup = cfg.lattice.scale / (10.0 * template.k * template.k)
    if eps_dedup <= 0:
        raise ValueError("eps_dedup must be positive")
    if memory_budget is None:
        plan = BatchPlan((tuple(cells),) if cells else (), _cell_bytes(template), 0)
    else:
        plan = plan_batches(cells, template, memory_budget)
    registry = _PointRegistry(eps_dedup, n)
    labels: list[bool] = []
    stats: list[BatchStat] = []
    offset = np.asarray(cfg.lattice.offset)
    tedges = template.edges
    for bi, batch in enumerate(plan.batches):
        corners = np.asarray(
            [lattice.simplex_vertices(cell) for cell in batch], dtype=np.float64
        )
        corners = corners * cfg.lattice.scale + offset
        fine = np.einsum("vc,bcn->bvn", template.weights, corners)
        flat = fine.reshape(-1, n)
        signs = manifold.signs(flat).reshape(len(batch), -1)
        sa = signs[:, tedges[:, 0]]
        sb = signs[:, tedges[:, 1]]
        crossing = sa != sb
        idx_b, idx_e = np.nonzero(crossing)
        if idx_b.size:
            a = fine[idx_b, tedges[idx_e, 0]]
            b = fine[idx_b, tedges[idx_e, 1]]
            points = intersection_points_batch(
                manifold, a, b, cfg.eps, signs_a=sa[idx_b, idx_e]
            )
        else:
            points = np.zeros((0, n))
        fresh: list[np.ndarray] = []
        for p in points:
            if registry.add(p) is not None:
                fresh.append(p)
        elapsed = 0.0
        if fresh:
            t0 = time.perf_counter()
            try:
                hit = np.asarray(checker(np.asarray(fresh)), dtype=bool)
            except Exception as exc:
                raise RefineError(f"collision checker failed in batch {bi}: {exc}") from exc
            elapsed = time.perf_counter() - t0
            if hit.shape != (len(fresh),):
                raise RefineError(f"checker returned shape {hit.shape} in batch {bi}")
            labels.extend(bool(h) for h in hit)
        stats.append(
            BatchStat(bi, len(batch), int(fine.shape[0] * fine.shape[1]),
                      int(idx_b.size), len(fresh), elapsed)
        )
    points = (
        np.asarray(registry.points, dtype=np.float64)
        if registry.points
        else np.zeros((0, n))
    )
    in_collision = np.asarray(labels, dtype=bool)
    free_points = points[~in_collision] if points.size else points.copy()
    return RefinedResult(points, in_collision, free_points, eps_dedup, stats)

"""Manifold tracing over the permutahedral lattice.

The trace is a breadth-first closure over sign-changing lattice edges,
organised as barrier-separated data-parallel stages: every stage is a pure
map from an input sequence into a preallocated slot buffer sized by the
stage's exact output bound, results are compacted in slot order, and the
shared hash structures only mutate between stages.  Slot order depends on
nothing but the input order, so results are identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import lattice
from .lattice import LatticeConfig, PermSimplex
from .manifold import intersection_points_batch

__all__ = [
    "TraceConfig",
    "Frontier",
    "TraceStats",
    "StageStat",
    "TraceResult",
    "CapacityError",
    "locate_edges",
    "expand_frontier",
    "trace",
    "write_edgemesh",
    "read_edgemesh",
]


class CapacityError(RuntimeError):
    """A stage produced more outputs than its preallocation bound."""


@dataclass(frozen=True)
class TraceConfig:
    """Tracing parameters: lattice, optional clamp box, budget, parallelism."""

    lattice: LatticeConfig
    box: tuple[tuple[float, ...], tuple[float, ...]] | None = None
    max_edges: int = 10_000_000
    workers: int = 1
    eps: float = 1e-9

    def __post_init__(self):
        if self.max_edges < 1:
            raise ValueError("max_edges must be positive")
        if self.workers < 1:
            raise ValueError("workers must be positive")
        if self.eps <= 0:
            raise ValueError("eps must be positive")


@dataclass(frozen=True)
class Frontier:
    """Edges admitted at one BFS level, plus the producing stage's capacity."""

    edges: tuple[PermSimplex, ...]
    capacity: int
    signs: tuple[tuple[int, int], ...] | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.edges)


@dataclass
class StageStat:
    name: str
    level: int
    items: int
    capacity: int
    produced: int


@dataclass
class TraceStats:
    """Counters for one trace; field_evaluations counts lattice vertex signs."""

    levels: int = 0
    seeds: int = 0
    visited_edges: int = 0
    field_evaluations: int = 0
    dropped_out_of_box: int = 0
    two_edge_violations: int = 0
    complete: bool = True
    closure_ok: bool = False
    polyline_closed: bool | None = None
    stages: list[StageStat] = field(default_factory=list)


@dataclass
class TraceResult:
    """Traced edges, one intersection point per edge, and coface adjacency.

    `points[i]` lies on `edges[i]` inside a bisection bracket shorter than
    the configured eps; `adjacency` holds index pairs of edges that share a
    2-simplex coface, each pair once.
    """

    edges: list[PermSimplex]
    points: np.ndarray
    adjacency: list[tuple[int, int]]
    stats: TraceStats
    config: TraceConfig

    @property
    def complete(self) -> bool:
        return self.stats.complete

    @property
    def closure_ok(self) -> bool:
        return self.stats.closure_ok


@lru_cache(maxsize=None)
def _expansion_plan(parts, n: int):
    """Per-coface expansion templates of a canonical edge partition.

    Each entry holds the third-vertex offset and the two candidate partner
    edges (offset, parts, base-is-shared-endpoint) relative to the edge's
    base, so runtime expansion is pure tuple addition plus sign lookups.
    """
    origin = (0,) * n
    edge = PermSimplex(origin, parts)
    a, b = lattice.edge_vertices(edge)
    plan = []
    for face in lattice.cofaces2_of_edge(edge):
        verts = lattice.simplex_vertices(face)
        c = next(v for v in verts if v != a and v != b)
        partner_bc = partner_ac = None
        for e2 in lattice.edges_of_2simplex(face):
            p, q = lattice.edge_vertices(e2)
            ends = {p, q}
            if ends == {b, c}:
                partner_bc = (e2.base, e2.parts, p == b)
            elif ends == {a, c}:
                partner_ac = (e2.base, e2.parts, p == a)
        if partner_bc is None or partner_ac is None:
            raise AssertionError("coface did not contain both partner edges")
        plan.append((c, partner_bc, partner_ac))
    return tuple(plan)


class _Tracer:
    def __init__(self, manifold, cfg: TraceConfig):
        if manifold.dim != cfg.lattice.dim:
            raise ValueError("manifold and lattice dimension mismatch")
        self.m = manifold
        self.cfg = cfg
        n = cfg.lattice.dim
        self.n = n
        self.scale = cfg.lattice.scale
        self.offset = np.asarray(cfg.lattice.offset)
        self.sign_of: dict[tuple[int, ...], int] = {}
        self.visited: dict[PermSimplex, int] = {}
        self.edge_signs: list[tuple[int, int]] = []
        self.adjacency: set[tuple[int, int]] = set()
        self.stats = TraceStats()
        self._level = 0
        if cfg.box is not None:
            lo = np.asarray(cfg.box[0], dtype=np.float64)
            hi = np.asarray(cfg.box[1], dtype=np.float64)
            if lo.shape != (n,) or hi.shape != (n,) or np.any(lo >= hi):
                raise ValueError("box must be a (lower, upper) pair with lower < upper")
            # vertex bounds in lattice units so the in-box test stays integer-cheap
            self._lo = (lo - self.offset) / self.scale
            self._hi = (hi - self.offset) / self.scale
        else:
            self._lo = self._hi = None
        self.pool = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()
            self.pool = None

    # -- primitives --------------------------------------------------------

    def _vertex_in_box(self, v) -> bool:
        if self._lo is None:
            return True
        for i, c in enumerate(v):
            if c < self._lo[i] or c > self._hi[i]:
                return False
        return True

    def _ensure_signs(self, vertices):
        unknown = []
        local = set()
        for v in vertices:
            if v not in self.sign_of and v not in local:
                local.add(v)
                unknown.append(v)
        if not unknown:
            return
        pts = np.asarray(unknown, dtype=np.float64) * self.scale + self.offset
        vals = self.m.values(pts)
        self.stats.field_evaluations += len(unknown)
        sign_of = self.sign_of
        for v, val in zip(unknown, vals):
            sign_of[v] = 1 if val > 0.0 else -1

    def _stage(self, name, items, fn, bounds):
        """Map fn over items into a slot buffer of exactly sum(bounds) slots."""
        if isinstance(bounds, int):
            bounds = [bounds] * len(items)
        offsets = [0]
        for b in bounds:
            offsets.append(offsets[-1] + b)
        total = offsets[-1]
        slots: list = [None] * total
        def work(i):
            outs = fn(items[i])
            if len(outs) > bounds[i]:
                raise CapacityError(
                    f"stage {name}: {items[i]!r} produced {len(outs)} outputs, bound {bounds[i]}"
                )
            base = offsets[i]
            for j, out in enumerate(outs):
                slots[base + j] = out
        if self.pool is not None and len(items) > 1:
            chunk = max(16, len(items) // (8 * self.cfg.workers))
            list(self.pool.map(work, range(len(items)), chunksize=chunk))
        else:
            for i in range(len(items)):
                work(i)
        produced = [s for s in slots if s is not None]
        self.stats.stages.append(StageStat(name, self._level, len(items), total, len(produced)))
        return produced

    def _admit(self, edge, s_pair, source_index=None) -> int | None:
        # sequential-only: called between stages
        idx = self.visited.get(edge)
        if idx is None:
            if len(self.visited) >= self.cfg.max_edges:
                self.stats.complete = False
                return None
            idx = len(self.visited)
            self.visited[edge] = idx
            self.edge_signs.append(s_pair)
        if source_index is not None and source_index != idx:
            pair = (source_index, idx) if source_index < idx else (idx, source_index)
            self.adjacency.add(pair)
        return idx

    # -- stages -------------------------------------------------------------

    def locate(self, seeds) -> Frontier:
        seeds = np.atleast_2d(np.asarray(seeds, dtype=np.float64))
        if seeds.shape[0] == 0 or seeds.shape[1] != self.n:
            raise ValueError("seeds must be a non-empty (m, n) array")
        self.stats.seeds += seeds.shape[0]
        cfg = self.cfg.lattice
        cells = self._stage(
            "locate_cells", list(seeds), lambda s: [lattice.locate_point(s, cfg)], 1
        )
        verts = []
        for cell in cells:
            verts.extend(lattice.simplex_vertices(cell))
        self._ensure_signs(verts)
        bound = (self.n + 1) * self.n // 2
        sign_of = self.sign_of

        def cell_edges(cell):
            out = []
            for edge in lattice.edges_of_cell(cell):
                va, vb = lattice.edge_vertices(edge)
                sa, sb = sign_of[va], sign_of[vb]
                if sa == sb:
                    continue
                if self._vertex_in_box(va) and self._vertex_in_box(vb):
                    out.append(("edge", edge, (sa, sb)))
                else:
                    out.append(("dropped",))
            return out

        markers = self._stage("cell_edges", cells, cell_edges, bound)
        entries = []
        batch = set()
        for marker in markers:
            if marker[0] == "dropped":
                self.stats.dropped_out_of_box += 1
                continue
            _, edge, s_pair = marker
            if edge in batch or edge in self.visited:
                continue
            batch.add(edge)
            entries.append((edge, s_pair))
        return Frontier(
            edges=tuple(e for e, _ in entries),
            capacity=len(cells) * bound,
            signs=tuple(s for _, s in entries),
        )

    def admit_frontier(self, frontier: Frontier):
        signs = self._frontier_signs(frontier)
        for edge, s_pair in zip(frontier.edges, signs):
            self._admit(edge, s_pair)

    def _frontier_signs(self, frontier: Frontier):
        if frontier.signs is not None:
            return frontier.signs
        verts = []
        for edge in frontier.edges:
            va, vb = lattice.edge_vertices(edge)
            verts.append(va)
            verts.append(vb)
        self._ensure_signs(verts)
        return tuple(
            (self.sign_of[va], self.sign_of[vb])
            for va, vb in (lattice.edge_vertices(e) for e in frontier.edges)
        )

    def expand(self, frontier: Frontier) -> Frontier:
        self._level += 1
        self.stats.levels = self._level
        signs = self._frontier_signs(frontier)
        entries = list(zip(frontier.edges, signs))
        n = self.n
        plans = [_expansion_plan(edge.parts, n) for edge, _ in entries]
        bounds = [len(p) for p in plans]

        def edge_cofaces(item):
            (edge, s_pair), plan = item
            return [(edge, s_pair, entry) for entry in plan]

        records = self._stage("edge_cofaces", list(zip(entries, plans)), edge_cofaces, bounds)
        self._ensure_signs(lattice._add(rec[0].base, rec[2][0]) for rec in records)
        sign_of = self.sign_of
        visited = self.visited

        def partner(rec):
            edge, (sa, sb), (c_off, bc, ac) = rec
            base = edge.base
            sc = sign_of[lattice._add(base, c_off)]
            if sc == sa:
                tpl, s_shared = bc, sb
            else:
                tpl, s_shared = ac, sa
            off, parts, base_is_shared = tpl
            s_pair = (s_shared, sc) if base_is_shared else (sc, s_shared)
            new_edge = PermSimplex(lattice._add(base, off), parts)
            va, vb = lattice.edge_vertices(new_edge)
            if not (self._vertex_in_box(va) and self._vertex_in_box(vb)):
                return [("dropped",)]
            if new_edge in visited:
                return [("seen", edge, new_edge)]
            return [("new", edge, new_edge, s_pair)]

        markers = self._stage("coface_partner", records, partner, 1)
        entries_out = []
        batch: set[PermSimplex] = set()
        for marker in markers:
            kind = marker[0]
            if kind == "dropped":
                self.stats.dropped_out_of_box += 1
                continue
            source_index = self.visited[marker[1]]
            new_edge = marker[2]
            if kind == "seen" or new_edge in batch:
                self._admit(new_edge, None, source_index)
                continue
            idx = self._admit(new_edge, marker[3], source_index)
            if idx is None:
                continue
            batch.add(new_edge)
            entries_out.append((new_edge, marker[3]))
        return Frontier(
            edges=tuple(e for e, _ in entries_out),
            capacity=len(records),
            signs=tuple(s for _, s in entries_out),
        )

    # -- assembly ------------------------------------------------------------

    def result(self) -> TraceResult:
        edges = list(self.visited)
        stats = self.stats
        stats.visited_edges = len(edges)
        if edges:
            ends = [lattice.edge_vertices(e) for e in edges]
            va = np.asarray([p[0] for p in ends], dtype=np.float64)
            vb = np.asarray([p[1] for p in ends], dtype=np.float64)
            a = va * self.scale + self.offset
            b = vb * self.scale + self.offset
            signs_a = np.asarray([s[0] for s in self.edge_signs], dtype=np.int8)
            points = intersection_points_batch(self.m, a, b, self.cfg.eps, signs_a=signs_a)
        else:
            points = np.zeros((0, self.n), dtype=np.float64)
        adjacency = sorted(self.adjacency)
        stats.closure_ok = bool(edges) and stats.complete and stats.dropped_out_of_box == 0
        if self.n == 2 and edges:
            degree = np.zeros(len(edges), dtype=np.int64)
            for i, j in adjacency:
                degree[i] += 1
                degree[j] += 1
            stats.polyline_closed = bool(np.all(degree == 2))
        return TraceResult(edges, points, adjacency, stats, self.cfg)


def locate_edges(seeds, manifold, cfg: TraceConfig) -> Frontier:
    """Initial frontier: deduplicated sign-changing edges of the seed cells."""
    tracer = _Tracer(manifold, cfg)
    try:
        return tracer.locate(seeds)
    finally:
        tracer.close()


def expand_frontier(frontier: Frontier, visited, manifold, cfg: TraceConfig) -> Frontier:
    """One BFS level; `visited` (a set of canonical edges) gains the new edges."""
    tracer = _Tracer(manifold, cfg)
    try:
        for edge in visited:
            tracer.visited[edge] = len(tracer.visited)
            tracer.edge_signs.append((0, 0))
        for edge in frontier.edges:
            if edge not in tracer.visited:
                tracer.visited[edge] = len(tracer.visited)
                tracer.edge_signs.append((0, 0))
        out = tracer.expand(frontier)
        visited.update(out.edges)
        return out
    finally:
        tracer.close()


def trace(seeds, manifold, cfg: TraceConfig) -> TraceResult:
    """Breadth-first closure of sign-changing edges reachable from the seeds.

    Returns an explicit empty result when no seed cell intersects the zero
    set.  The visited set is capped at cfg.max_edges; hitting the cap marks
    the result incomplete.  Edges with an endpoint outside cfg.box are
    dropped and counted, which also clears the closure flag.
    """
    tracer = _Tracer(manifold, cfg)
    try:
        frontier = tracer.locate(seeds)
        tracer.admit_frontier(frontier)
        while frontier.edges and tracer.stats.complete:
            frontier = tracer.expand(frontier)
        return tracer.result()
    finally:
        tracer.close()


def write_edgemesh(target, dim, points, pairs) -> None:
    """EDGEMESH v1: header, one vertex line per point, one index pair per edge.

    Reals are written with repr so parsing returns the exact doubles.
    """
    points = np.asarray(points, dtype=np.float64)
    lines = [f"EDGEMESH n {dim} V {len(points)} E {len(pairs)}"]
    for row in points:
        lines.append(" ".join(repr(float(v)) for v in row))
    for i, j in pairs:
        lines.append(f"{i} {j}")
    text = "\n".join(lines) + "\n"
    if hasattr(target, "write"):
        target.write(text)
    else:
        Path(target).write_text(text)


def read_edgemesh(source):
    """Parse EDGEMESH v1 text; returns (dim, points, pairs)."""
    text = source.read() if hasattr(source, "read") else Path(source).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty edgemesh")
    head = lines[0].split()
    if len(head) != 7 or head[0] != "EDGEMESH" or head[1] != "n" or head[3] != "V" or head[5] != "E":
        raise ValueError(f"malformed edgemesh header: {lines[0]!r}")
    dim, nv, ne = int(head[2]), int(head[4]), int(head[6])
    if len(lines) != 1 + nv + ne:
        raise ValueError("edgemesh line count does not match header")
    points = np.array([[float(v) for v in ln.split()] for ln in lines[1 : 1 + nv]])
    points = points.reshape(nv, dim) if nv else np.zeros((0, dim))
    pairs = [tuple(int(v) for v in ln.split()) for ln in lines[1 + nv :]]
    return dim, points, pairs

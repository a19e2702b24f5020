"""Brute-force reference implementations the test suite compares the package against.

Everything here is written the slow, obvious way on purpose: dense scans,
exhaustive enumeration, closed-form geometry.  Nothing is shared with the
modules under test beyond the PermSimplex value type itself.
"""

from __future__ import annotations

from itertools import product

import numpy as np

from permatrace.lattice import (
    PermSimplex,
    canonicalize,
    simplex_vertices,
)


def canonical_edge(u, step):
    """Canonical 1-simplex of the lattice edge from vertex u along step.

    Steps of the triangulation's 1-skeleton are exactly the non-zero 0/1
    vectors; the lex-smaller endpoint is u, so the first part collects the
    coordinates stepped over and the wrap label n lands in the second part.
    """
    n = len(u)
    p1 = tuple(i for i in range(n) if step[i])
    p2 = tuple(sorted(set(range(n + 1)) - set(p1)))
    return PermSimplex(tuple(int(c) for c in u), (p1, p2))


def lattice_steps(n):
    return [s for s in product((0, 1), repeat=n) if any(s)]


def scan_crossing_edges(manifold, config, lo, hi):
    """Every lattice edge with both integer endpoints in [lo, hi] whose
    endpoint signs differ (F > 0 positive, F <= 0 negative).

    Evaluates F once per grid vertex, then compares sign arrays shifted by
    each of the 2^n - 1 steps.
    """
    n = config.dim
    axes = [np.arange(int(lo[i]), int(hi[i]) + 1) for i in range(n)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    points = config.scale * grid.reshape(-1, n).astype(np.float64)
    points += np.asarray(config.offset)
    signs = (manifold.values(points) > 0.0).reshape(grid.shape[:-1])
    edges = set()
    for step in lattice_steps(n):
        src = tuple(slice(0, signs.shape[i] - step[i]) for i in range(n))
        dst = tuple(slice(step[i], signs.shape[i]) for i in range(n))
        for idx in np.argwhere(signs[src] != signs[dst]):
            u = tuple(int(axes[i][idx[i]]) for i in range(n))
            edges.add(canonical_edge(u, step))
    return edges


def traced_edge_set(result):
    """TraceResult edges as canonical PermSimplex values (they already are;
    this re-canonicalizes defensively so set comparisons cannot be fooled)."""
    return {canonicalize(e) for e in result.edges}


def ordered_set_partitions(labels, blocks):
    """All ordered partitions of `labels` into `blocks` non-empty parts,
    each part emitted ascending.  Enumerates every block assignment."""
    labels = tuple(labels)
    out = []
    for assign in product(range(blocks), repeat=len(labels)):
        if len(set(assign)) != blocks:
            continue
        parts = tuple(
            tuple(sorted(l for l, a in zip(labels, assign) if a == b))
            for b in range(blocks)
        )
        out.append(parts)
    return out


def enumerate_simplices_containing(vertices, n, k):
    """All canonical k-simplices whose vertex set contains every given vertex.

    Scans base vertices over the bounding box of `vertices` plus a one-cell
    margin: a simplex vertex never differs from the base by more than 1 per
    coordinate, so nothing outside that window can qualify.
    """
    vs = np.asarray(vertices, dtype=int)
    lo = vs.min(axis=0) - 1
    hi = vs.max(axis=0) + 1
    need = {tuple(int(c) for c in v) for v in vs}
    partitions = ordered_set_partitions(range(n + 1), k + 1)
    found = set()
    for base in product(*(range(lo[i], hi[i] + 1) for i in range(n))):
        for parts in partitions:
            s = canonicalize(PermSimplex(base, parts))
            if s not in found and need.issubset(simplex_vertices(s)):
                found.add(s)
    return found


def template_contained(vertex, k):
    seq = (k,) + tuple(vertex) + (0,)
    return all(a >= b for a, b in zip(seq, seq[1:]))


def enumerate_template_vertices(n, k):
    return [v for v in product(range(k + 1), repeat=n) if template_contained(v, k)]


def enumerate_template_edges(n, k):
    """All unit-lattice edges with both endpoints inside the closed reference
    simplex k >= v_0 >= ... >= v_{n-1} >= 0, as (lo, hi) endpoint pairs."""
    edges = set()
    for v in enumerate_template_vertices(n, k):
        for step in lattice_steps(n):
            w = tuple(a + b for a, b in zip(v, step))
            if template_contained(w, k):
                edges.add((v, w))
    return edges


def template_edge_set(template):
    """SubdivisionTemplate edges as endpoint-coordinate pairs."""
    verts = [tuple(int(c) for c in v) for v in template.vertices]
    return {(verts[i], verts[j]) for i, j in template.edges}


def box_distance(center, size):
    """Distance from a point to a solid origin-centered axis-aligned box."""
    half = np.asarray(size, dtype=np.float64) / 2.0
    d = np.abs(np.asarray(center, dtype=np.float64)) - half
    return float(np.linalg.norm(np.maximum(d, 0.0)))


def cylinder_distance(center, height, radius):
    """Distance from a point to a solid z-aligned origin-centered cylinder."""
    x, y, z = np.asarray(center, dtype=np.float64)
    dr = max(float(np.hypot(x, y)) - radius, 0.0)
    dz = max(abs(float(z)) - height / 2.0, 0.0)
    return float(np.hypot(dr, dz))


def box_distances(centers, size):
    """Vectorized box_distance over (m, 3) centers."""
    half = np.asarray(size, dtype=np.float64) / 2.0
    d = np.maximum(np.abs(np.asarray(centers, dtype=np.float64)) - half, 0.0)
    return np.linalg.norm(d, axis=1)


def cylinder_distances(centers, height, radius):
    """Vectorized cylinder_distance over (m, 3) centers."""
    c = np.asarray(centers, dtype=np.float64)
    dr = np.maximum(np.hypot(c[:, 0], c[:, 1]) - radius, 0.0)
    dz = np.maximum(np.abs(c[:, 2]) - height / 2.0, 0.0)
    return np.hypot(dr, dz)


def polyline_degrees(result):
    """How many adjacency partners each traced intersection point has."""
    degree = np.zeros(len(result.points), dtype=int)
    for i, j in result.adjacency:
        degree[i] += 1
        degree[j] += 1
    return degree


def coverage_misses(a, b, tol):
    """How many points of `a` have no point of `b` within tol.

    Multiplicity is allowed: one b point may cover several a points, which is
    exactly what deduplication produces.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0:
        return 0
    if b.size == 0:
        return len(a)
    d = np.linalg.norm(a[:, None] - b[None, :], axis=2).min(axis=1)
    return int((d > tol).sum())


def match_point_sets(a, b, tol):
    """Greedy one-to-one pairing of two point sets within tol.

    Returns (unmatched_in_a, unmatched_in_b).  Greedy is enough here because
    the suites use tolerances far below the point spacing.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        return len(a), len(b)
    taken = np.zeros(len(b), dtype=bool)
    miss_a = 0
    for p in a:
        d = np.linalg.norm(b - p, axis=1)
        d[taken] = np.inf
        j = int(np.argmin(d))
        if d[j] <= tol:
            taken[j] = True
        else:
            miss_a += 1
    return miss_a, int((~taken).sum())

"""Permutahedral queries on the scaled Freudenthal-Kuhn triangulation of R^n.

A k-simplex is stored as its lexicographically smallest vertex plus an
ordered partition of the labels {0, ..., n} into k+1 parts.  Walking the
parts through the step vectors (u_i = e_i for i < n, u_n = -sum e_i) visits
the simplex vertices in a cycle that closes back on the base vertex, so the
last part never needs to be applied.  Every query below is a pure function
of its arguments with an exact, stated output count, which lets callers
preallocate buffers and map the queries from any number of workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np

__all__ = [
    "LatticeConfig",
    "PermSimplex",
    "locate_point",
    "simplex_vertices",
    "edge_vertices",
    "cartesian",
    "canonicalize",
    "edge_key",
    "edges_of_cell",
    "edges_of_2simplex",
    "cofaces2_of_edge",
    "cellcofaces_of_edge",
]


@dataclass(frozen=True)
class LatticeConfig:
    """Ambient triangulation: dimension, cell edge scale, origin offset."""

    dim: int
    scale: float = 1.0
    offset: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("lattice dimension must be >= 2")
        if not self.scale > 0.0:
            raise ValueError("lattice scale must be positive")
        off = self.offset
        if off is None:
            off = (0.0,) * self.dim
        else:
            off = tuple(float(v) for v in off)
            if len(off) != self.dim:
                raise ValueError("offset length must equal dim")
        object.__setattr__(self, "offset", off)
        object.__setattr__(self, "scale", float(self.scale))


@dataclass(frozen=True)
class PermSimplex:
    """k-simplex of the triangulation: base vertex + ordered label partition.

    `base` is a lattice vertex (integer coordinates, length n) and `parts`
    partitions {0, ..., n} into k+1 ordered, internally sorted parts.
    Instances are hashable and compare by value; the canonical representative
    of a geometric simplex is the rotation whose base is lexicographically
    smallest (see canonicalize).
    """

    base: tuple[int, ...]
    parts: tuple[tuple[int, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.parts) - 1

    def validate(self) -> None:
        """Raise ValueError unless parts is an ordered partition of {0..n}."""
        n = len(self.base)
        seen: set[int] = set()
        for part in self.parts:
            if not part:
                raise ValueError("empty part")
            if tuple(sorted(part)) != tuple(part):
                raise ValueError("part elements must be ascending")
            for label in part:
                if label in seen:
                    raise ValueError("parts are not disjoint")
                seen.add(label)
        if seen != set(range(n + 1)):
            raise ValueError("parts must cover {0, ..., n} exactly")


@lru_cache(maxsize=None)
def _step(part: tuple[int, ...], n: int) -> tuple[int, ...]:
    # summed step vectors of one part; label n contributes -(e_0+...+e_{n-1})
    s = [0] * n
    wrap = False
    for label in part:
        if label == n:
            wrap = True
        else:
            s[label] += 1
    if wrap:
        s = [v - 1 for v in s]
    return tuple(s)


def _add(v: tuple[int, ...], d: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(a + b for a, b in zip(v, d))


def simplex_vertices(simplex: PermSimplex) -> list[tuple[int, ...]]:
    """Vertices in cycle order: v_j = v_{j-1} + step(parts[j-1])."""
    n = len(simplex.base)
    verts = [simplex.base]
    v = simplex.base
    for part in simplex.parts[:-1]:
        v = _add(v, _step(part, n))
        verts.append(v)
    return verts


def edge_vertices(edge: PermSimplex) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """The two endpoints (base first) of a 1-simplex."""
    return edge.base, _add(edge.base, _step(edge.parts[0], len(edge.base)))


def cartesian(vertex, config: LatticeConfig) -> np.ndarray:
    """Embed a lattice vertex: scale * v + offset."""
    return config.scale * np.asarray(vertex, dtype=np.float64) + np.asarray(config.offset)


def locate_point(point, config: LatticeConfig) -> PermSimplex:
    """Full-dimensional cell containing a point.

    The base vertex is the floor of the rescaled point and the singleton
    parts are ordered by descending fractional coordinate, ties broken by
    ascending coordinate index, so points on cell boundaries resolve
    deterministically.
    """
    p = np.asarray(point, dtype=np.float64)
    if p.ndim != 1 or p.size != config.dim:
        raise ValueError("point dimension must match the lattice")
    if not np.all(np.isfinite(p)):
        raise ValueError("point coordinates must be finite")
    y = (p - np.asarray(config.offset)) / config.scale
    base = np.floor(y)
    frac = y - base
    order = sorted(range(config.dim), key=lambda i: (-frac[i], i))
    parts = tuple((i,) for i in order) + ((config.dim,),)
    return PermSimplex(tuple(int(b) for b in base), parts)


def canonicalize(simplex: PermSimplex) -> PermSimplex:
    """Rotate the vertex cycle so the base is the lex-smallest vertex.

    Idempotent; geometric identity is preserved because rotating the part
    cycle re-enters the same vertex set at a different start.
    """
    verts = simplex_vertices(simplex)
    j = min(range(len(verts)), key=verts.__getitem__)
    if j == 0:
        return simplex
    return PermSimplex(verts[j], simplex.parts[j:] + simplex.parts[:j])


def edge_key(edge: PermSimplex):
    """Injective hashable key of a canonical edge: base then part contents."""
    return edge.base, edge.parts


def _merge(parts: tuple[tuple[int, ...], ...]) -> tuple[int, ...]:
    out: list[int] = []
    for p in parts:
        out.extend(p)
    out.sort()
    return tuple(out)


def _pair_edges(simplex: PermSimplex) -> list[PermSimplex]:
    # canonical edge between cycle vertices a < b: the parts walked from a to
    # b form one side, the remaining cycle the other
    verts = simplex_vertices(simplex)
    k = simplex.dim
    out = []
    for a in range(k + 1):
        for b in range(a + 1, k + 1):
            p1 = _merge(simplex.parts[a:b])
            p2 = _merge(simplex.parts[b:] + simplex.parts[:a])
            out.append(canonicalize(PermSimplex(verts[a], (p1, p2))))
    return out


def edges_of_cell(cell: PermSimplex) -> list[PermSimplex]:
    """All C(n+1, 2) canonical edges of a full-dimensional cell."""
    if cell.dim != len(cell.base):
        raise ValueError("edges_of_cell expects a full-dimensional cell")
    return _pair_edges(cell)


def edges_of_2simplex(triangle: PermSimplex) -> list[PermSimplex]:
    """The three canonical edges of a 2-simplex."""
    if triangle.dim != 2:
        raise ValueError("edges_of_2simplex expects a 2-simplex")
    return _pair_edges(triangle)


def _ordered_splits(part: tuple[int, ...]):
    # ordered pairs of non-empty disjoint subsets covering `part`; 2^|part|-2
    m = len(part)
    out = []
    for bits in range(1, (1 << m) - 1):
        a = tuple(part[i] for i in range(m) if bits >> i & 1)
        b = tuple(part[i] for i in range(m) if not bits >> i & 1)
        out.append((a, b))
    return out


@lru_cache(maxsize=None)
def _coface2_templates(parts, n: int):
    origin = (0,) * n
    p1, p2 = parts
    out = []
    for s1, s2 in _ordered_splits(p1):
        out.append(canonicalize(PermSimplex(origin, (s1, s2, p2))))
    for t1, t2 in _ordered_splits(p2):
        out.append(canonicalize(PermSimplex(origin, (p1, t1, t2))))
    return tuple(out)


def cofaces2_of_edge(edge: PermSimplex) -> list[PermSimplex]:
    """All (2^|p1|-2) + (2^|p2|-2) canonical 2-simplex cofaces dropping to the edge.

    Splitting either part in ordered fashion enumerates each coface exactly
    once; templates are cached per partition and translated to the base.
    """
    if edge.dim != 1:
        raise ValueError("cofaces2_of_edge expects a 1-simplex")
    templates = _coface2_templates(edge.parts, len(edge.base))
    return [PermSimplex(_add(edge.base, t.base), t.parts) for t in templates]


@lru_cache(maxsize=None)
def _cellcoface_templates(parts, n: int):
    origin = (0,) * n
    p1, p2 = parts
    out = []
    seen = set()
    for order1 in permutations(p1):
        for order2 in permutations(p2):
            singletons = tuple((label,) for label in order1 + order2)
            cell = canonicalize(PermSimplex(origin, singletons))
            if cell not in seen:
                seen.add(cell)
                out.append(cell)
    return tuple(out)


def cellcofaces_of_edge(edge: PermSimplex) -> list[PermSimplex]:
    """All |p1|! * |p2|! canonical full-dimensional cells containing the edge."""
    if edge.dim != 1:
        raise ValueError("cellcofaces_of_edge expects a 1-simplex")
    templates = _cellcoface_templates(edge.parts, len(edge.base))
    return [PermSimplex(_add(edge.base, t.base), t.parts) for t in templates]

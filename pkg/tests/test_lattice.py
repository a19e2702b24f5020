"""Lattice queries against closed-form counts and brute-force enumeration."""

from itertools import combinations, permutations
from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permatrace.lattice import (
    LatticeConfig,
    PermSimplex,
    canonicalize,
    cartesian,
    cellcofaces_of_edge,
    cofaces2_of_edge,
    edge_key,
    edge_vertices,
    edges_of_2simplex,
    edges_of_cell,
    locate_point,
    simplex_vertices,
)

from oracles import canonical_edge, enumerate_simplices_containing

RED = PermSimplex((0, 0), ((0,), (1,), (2,)))
BLUE = PermSimplex((0, 0), ((1,), (0,), (2,)))
DIAGONAL = PermSimplex((0, 0), ((0, 1), (2,)))


def random_partition(rng, n, blocks):
    labels = list(range(n + 1))
    rng.shuffle(labels)
    cuts = sorted(rng.choice(np.arange(1, n + 1), size=blocks - 1, replace=False))
    pieces = np.split(np.asarray(labels), cuts)
    return tuple(tuple(sorted(int(v) for v in p)) for p in pieces)


# ordered-partition strategy for property tests: n in 2..5, 2..n+1 blocks
@st.composite
def simplices(draw, min_blocks=2):
    n = draw(st.integers(min_value=2, max_value=5))
    blocks = draw(st.integers(min_value=min_blocks, max_value=n + 1))
    labels = draw(st.permutations(list(range(n + 1))))
    cuts = draw(
        st.lists(
            st.integers(min_value=1, max_value=n),
            min_size=blocks - 1,
            max_size=blocks - 1,
            unique=True,
        )
    )
    parts = []
    prev = 0
    for c in sorted(cuts) + [n + 1]:
        parts.append(tuple(sorted(labels[prev:c])))
        prev = c
    base = tuple(draw(st.integers(min_value=-3, max_value=3)) for _ in range(n))
    return PermSimplex(base, tuple(parts))


class TestWorkedExample:
    # the two unit-square triangles: red (0,0)-(1,0)-(1,1), blue (0,0)-(0,1)-(1,1)

    def test_red_vertices(self):
        assert simplex_vertices(RED) == [(0, 0), (1, 0), (1, 1)]

    def test_blue_vertices(self):
        assert simplex_vertices(BLUE) == [(0, 0), (0, 1), (1, 1)]

    def test_diagonal_cofaces_are_the_two_triangles(self):
        assert set(cofaces2_of_edge(DIAGONAL)) == {RED, BLUE}
        assert set(cellcofaces_of_edge(DIAGONAL)) == {RED, BLUE}

    def test_bottom_edge_has_two_triangle_cofaces(self):
        bottom = PermSimplex((0, 0), ((0,), (1, 2)))
        faces = cofaces2_of_edge(bottom)
        assert len(faces) == 2
        assert RED in faces

    def test_red_boundary_edges(self):
        assert set(edges_of_2simplex(RED)) == {
            PermSimplex((0, 0), ((0,), (1, 2))),
            DIAGONAL,
            PermSimplex((1, 0), ((1,), (0, 2))),
        }

    def test_locate_red_and_blue(self):
        cfg = LatticeConfig(2)
        assert locate_point((0.7, 0.3), cfg) == RED
        assert locate_point((0.3, 0.7), cfg) == BLUE


def test_cartesian_examples():
    assert np.array_equal(cartesian((0, 0), LatticeConfig(2, 0.5)), [0.0, 0.0])
    assert np.array_equal(cartesian((1, 1), LatticeConfig(2, 0.5)), [0.5, 0.5])
    got = cartesian((2, -1), LatticeConfig(2, 0.25, offset=(1.0, 0.0)))
    assert np.array_equal(got, [1.5, -0.25])


def test_canonicalize_rebases_to_lex_min():
    got = canonicalize(PermSimplex((1, 1), ((2,), (0,), (1,))))
    assert got == PermSimplex((0, 0), ((0,), (1,), (2,)))


@given(simplices())
@settings(max_examples=200, deadline=None)
def test_canonicalize_idempotent_and_preserves_vertices(s):
    c = canonicalize(s)
    assert canonicalize(c) == c
    assert set(simplex_vertices(c)) == set(simplex_vertices(s))
    assert c.base == min(simplex_vertices(s))


@given(simplices())
@settings(max_examples=200, deadline=None)
def test_cycle_closes_on_base(s):
    # applying every part's step must return to the base vertex exactly
    n = len(s.base)
    v = list(s.base)
    for part in s.parts:
        for label in part:
            if label == n:
                v = [c - 1 for c in v]
            else:
                v[label] += 1
    assert tuple(v) == s.base


@pytest.mark.parametrize("n", range(2, 7))
def test_cell_edge_count_and_keys(n):
    rng = np.random.default_rng(n)
    for _ in range(5):
        base = tuple(int(v) for v in rng.integers(-3, 4, size=n))
        cell = canonicalize(PermSimplex(base, random_partition(rng, n, n + 1)))
        edges = edges_of_cell(cell)
        assert len(edges) == n * (n + 1) // 2
        assert len({edge_key(e) for e in edges}) == len(edges)
        verts = set(simplex_vertices(cell))
        for e in edges:
            a, b = edge_vertices(e)
            assert a in verts and b in verts


@pytest.mark.parametrize("n", range(2, 7))
def test_coface_counts_match_formulas(n):
    # every canonical edge partition: p1 a non-empty subset of {0..n-1}
    labels = set(range(n + 1))
    for size in range(1, n + 1):
        for p1 in combinations(range(n), size):
            p2 = tuple(sorted(labels - set(p1)))
            edge = PermSimplex((0,) * n, (p1, p2))
            faces = cofaces2_of_edge(edge)
            assert len(faces) == (2 ** len(p1) - 2) + (2 ** len(p2) - 2)
            assert len(set(faces)) == len(faces)
            cells = cellcofaces_of_edge(edge)
            expected = factorial(len(p1)) * factorial(len(p2))
            assert len(cells) == expected
            assert len(set(cells)) == len(cells)


@pytest.mark.parametrize("n", [2, 3])
def test_cofaces_equal_brute_force_enumeration(n):
    rng = np.random.default_rng(7 * n)
    labels = set(range(n + 1))
    for size in range(1, n + 1):
        for p1 in combinations(range(n), size):
            p2 = tuple(sorted(labels - set(p1)))
            base = tuple(int(v) for v in rng.integers(-2, 3, size=n))
            edge = PermSimplex(base, (p1, p2))
            verts = edge_vertices(edge)
            assert set(cofaces2_of_edge(edge)) == enumerate_simplices_containing(verts, n, 2)
            assert set(cellcofaces_of_edge(edge)) == enumerate_simplices_containing(verts, n, n)


def test_cell_edges_equal_vertex_pair_enumeration():
    for n in (2, 3, 4):
        rng = np.random.default_rng(n)
        cell = canonicalize(PermSimplex((0,) * n, random_partition(rng, n, n + 1)))
        expected = set()
        for a, b in combinations(simplex_vertices(cell), 2):
            lo, hi = (a, b) if a <= b else (b, a)
            expected.add(canonical_edge(lo, tuple(h - l for l, h in zip(lo, hi))))
        assert set(edges_of_cell(cell)) == expected


def test_edge_appears_in_all_its_cofaces():
    edge = PermSimplex((1, 0, -1), ((0, 2), (1, 3)))
    for t in cofaces2_of_edge(edge):
        assert edge in edges_of_2simplex(t)
    ev = set(edge_vertices(edge))
    for c in cellcofaces_of_edge(edge):
        assert ev <= set(simplex_vertices(c))


def test_singleton_part_gives_factorial_cells():
    for n in (3, 4):
        edge = PermSimplex((0,) * n, ((0,), tuple(range(1, n + 1))))
        assert len(cellcofaces_of_edge(edge)) == factorial(n)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_locate_round_trip_over_block(n):
    """locate_point(barycenter(c)) == c for every cell in a 3^n block."""
    cfg = LatticeConfig(n, scale=0.5, offset=(0.25,) * n)
    for corner in np.ndindex(*(3,) * n):
        for order in permutations(range(n)):
            parts = tuple((i,) for i in order) + ((n,),)
            cell = PermSimplex(tuple(corner), parts)
            center = np.mean([cartesian(v, cfg) for v in simplex_vertices(cell)], axis=0)
            assert locate_point(center, cfg) == cell


def test_locate_is_deterministic_on_faces():
    cfg = LatticeConfig(3)
    for p in [(0, 0, 0), (0.5, 0.5, 0.25), (1, 1, 1), (0.5, 0, 0)]:
        a = locate_point(p, cfg)
        assert a == locate_point(p, cfg)
        vs = np.array(simplex_vertices(a), dtype=float)
        assert np.all(vs.min(axis=0) <= p) and np.all(vs.max(axis=0) >= p)


def test_locate_rejects_bad_points():
    cfg = LatticeConfig(2)
    with pytest.raises(ValueError):
        locate_point((1.0, 2.0, 3.0), cfg)
    with pytest.raises(ValueError):
        locate_point((np.nan, 0.0), cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        LatticeConfig(1)
    with pytest.raises(ValueError):
        LatticeConfig(2, scale=0.0)
    with pytest.raises(ValueError):
        LatticeConfig(2, offset=(0.0,))


def test_simplex_validate():
    PermSimplex((0, 0), ((0, 1), (2,))).validate()
    with pytest.raises(ValueError):
        PermSimplex((0, 0), ((0,), (1,))).validate()  # misses label 2
    with pytest.raises(ValueError):
        PermSimplex((0, 0), ((1, 0), (2,))).validate()  # not ascending
    with pytest.raises(ValueError):
        PermSimplex((0, 0), ((0, 1), (1, 2))).validate()  # overlap

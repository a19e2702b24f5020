"""Sampling-based roadmap over the collision-free configuration space.

Uniform samples inside the joint-limit box are kept whether free or not
(the in-collision ones matter later as negative training data); free
samples connect to their nearest free neighbours through straight segments
validated at a fixed step.  Connectivity is tracked with a union-find so
component queries stay cheap, and all randomness flows through one
generator owned by the roadmap, so a fixed seed reproduces the roadmap
bit for bit.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .collision import RobotModel, Scene, batch_check, joint_limits

__all__ = [
    "UnionFind",
    "LabeledSamples",
    "Roadmap",
    "grow",
    "labeled_samples",
    "find_path",
    "insert_free_points",
]


class UnionFind:
    def __init__(self):
        self.parent: list[int] = []
        self.size: list[int] = []

    def add(self) -> int:
        self.parent.append(len(self.parent))
        self.size.append(1)
        return len(self.parent) - 1

    def find(self, i: int) -> int:
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return
        if self.size[ri] < self.size[rj]:
            ri, rj = rj, ri
        self.parent[rj] = ri
        self.size[ri] += self.size[rj]

    def same(self, i: int, j: int) -> bool:
        return self.find(i) == self.find(j)


@dataclass
class LabeledSamples:
    positive: np.ndarray
    negative: np.ndarray


class Roadmap:
    """PRM state: all samples (free or not), free-space edges, components.

    Segment grids use power-of-two point counts, so halving the step
    refines a grid into a superset of itself; edges are admitted at step
    delta/2 and therefore pass re-validation at delta/2 point for point.
    """

    def __init__(self, robot: RobotModel, scene: Scene, delta: float,
                 knn: int = 10, rng=None):
        if delta <= 0:
            raise ValueError("segment validation step must be positive")
        if knn < 1:
            raise ValueError("knn must be positive")
        self.robot = robot
        self.scene = scene
        self.delta = float(delta)
        self.knn = int(knn)
        self.rng = np.random.default_rng(0) if rng is None else rng
        self.lower, self.upper = joint_limits(robot)
        self.configs: list[np.ndarray] = []
        self.free: list[bool] = []
        self.neighbors: list[dict[int, float]] = []
        self.components = UnionFind()
        self._free_index: list[int] = []
        self._free_buf = np.empty((0, robot.dof))

    def __len__(self):
        return len(self.configs)

    def add_config(self, q, free: bool) -> int:
        q = np.asarray(q, dtype=np.float64)
        idx = len(self.configs)
        self.configs.append(q)
        self.free.append(bool(free))
        self.neighbors.append({})
        self.components.add()
        if free:
            m = len(self._free_index)
            if self._free_buf.shape[0] <= m:
                grown = np.empty((max(64, 2 * m), self.robot.dof))
                grown[:m] = self._free_buf[:m]
                self._free_buf = grown
            self._free_buf[m] = q
            self._free_index.append(idx)
        return idx

    def free_array(self) -> np.ndarray:
        return self._free_buf[: len(self._free_index)].copy()

    def _segment_points(self, a: np.ndarray, b: np.ndarray, step: float) -> np.ndarray:
        length = float(np.linalg.norm(b - a))
        count = 1 << max(0, int(np.ceil(np.log2(max(length / step, 1.0)))))
        t = np.linspace(0.0, 1.0, count + 1)
        return a + t[:, None] * (b - a)

    def validate_segment(self, a, b, delta: float | None = None) -> bool:
        """Every canonical-grid point at spacing <= delta along [a, b] is free."""
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        pts = self._segment_points(a, b, self.delta if delta is None else delta)
        return not batch_check(pts, self.robot, self.scene).any()

    def connect(self, idx: int) -> int:
        """Wire a free vertex to its nearest free neighbours; returns edge count."""
        q = self.configs[idx]
        if self._free_index and self._free_index[-1] == idx:
            others = self._free_index[:-1]
            coords = self._free_buf[: len(others)]
        else:
            others = [i for i in self._free_index if i != idx]
            coords = np.asarray([self.configs[i] for i in others]).reshape(len(others), q.size)
        if not others:
            return 0
        dist = np.linalg.norm(coords - q, axis=1)
        order = np.argsort(dist, kind="stable")[: self.knn]
        cand = [int(j) for j in order if others[int(j)] not in self.neighbors[idx]]
        if not cand:
            return 0
        # one collision batch over every candidate segment, admitted at half
        # step so the half-step re-validation grid is checked up front
        chunks = [self._segment_points(q, coords[j], self.delta / 2.0) for j in cand]
        hits = batch_check(np.concatenate(chunks), self.robot, self.scene)
        added, pos = 0, 0
        for j, pts in zip(cand, chunks):
            blocked = hits[pos : pos + len(pts)].any()
            pos += len(pts)
            if blocked:
                continue
            other = others[j]
            w = float(dist[j])
            self.neighbors[idx][other] = w
            self.neighbors[other][idx] = w
            self.components.union(idx, other)
            added += 1
        return added

    def index_of(self, q) -> int:
        q = np.asarray(q, dtype=np.float64)
        for i, c in enumerate(self.configs):
            if np.array_equal(c, q):
                return i
        raise KeyError("configuration is not a roadmap vertex")


def grow(roadmap: Roadmap, count: int) -> int:
    """Sample `count` configurations in the limit box; returns free count."""
    if count < 1:
        raise ValueError("count must be positive")
    samples = roadmap.rng.uniform(roadmap.lower, roadmap.upper, (count, roadmap.robot.dof))
    hits = batch_check(samples, roadmap.robot, roadmap.scene)
    free_added = 0
    for q, hit in zip(samples, hits):
        idx = roadmap.add_config(q, free=not hit)
        if not hit:
            roadmap.connect(idx)
            free_added += 1
    return free_added


def labeled_samples(roadmap: Roadmap, q_start) -> LabeledSamples:
    """Positive = free vertices connected to q_start; negative = the rest."""
    anchor = roadmap.index_of(q_start)
    positive, negative = [], []
    for i, q in enumerate(roadmap.configs):
        if roadmap.free[i] and roadmap.components.same(anchor, i):
            positive.append(q)
        else:
            negative.append(q)
    n = roadmap.robot.dof
    pos = np.asarray(positive).reshape(len(positive), n)
    neg = np.asarray(negative).reshape(len(negative), n)
    return LabeledSamples(pos, neg)


def find_path(roadmap: Roadmap, q_start, q_goal):
    """Shortest roadmap path as a list of configurations, or None."""
    start = roadmap.index_of(q_start)
    goal = roadmap.index_of(q_goal)
    if not roadmap.components.same(start, goal):
        return None
    dist = {start: 0.0}
    prev: dict[int, int] = {}
    heap = [(0.0, start)]
    done: set[int] = set()
    while heap:
        d, node = heapq.heappop(heap)
        if node in done:
            continue
        if node == goal:
            break
        done.add(node)
        for other, w in roadmap.neighbors[node].items():
            nd = d + w
            if nd < dist.get(other, np.inf):
                dist[other] = nd
                prev[other] = node
                heapq.heappush(heap, (nd, other))
    if goal not in dist:
        return None
    path = [goal]
    while path[-1] != start:
        path.append(prev[path[-1]])
    return [roadmap.configs[i] for i in reversed(path)]


def insert_free_points(roadmap: Roadmap, points, dedup_tol: float = 1e-9) -> int:
    """Add known-free configurations as vertices; returns how many were new."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    inserted = 0
    for q in points:
        if len(roadmap):
            gaps = np.linalg.norm(np.asarray(roadmap.configs) - q, axis=1)
            if float(gaps.min()) <= dedup_tol:
                continue
        idx = roadmap.add_config(q, free=True)
        roadmap.connect(idx)
        inserted += 1
    return inserted

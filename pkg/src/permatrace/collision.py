"""Exact sphere-vs-primitive collision checking for sphere-decomposed robots.

Obstacles are boxes, cylinders and spheres posed in the workspace; robots
are kinematic chains of revolute/prismatic joints whose links carry
bounding spheres.  All tests are exact for the sphere decomposition and
touching counts as collision.  The batched path and the single-config path
share the same primitive kernels, so their verdicts are identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import sphere_box_hits, sphere_cylinder_hits, sphere_sphere_hits

__all__ = [
    "Pose",
    "Box",
    "Cylinder",
    "SphereObstacle",
    "Scene",
    "Joint",
    "LinkSphere",
    "RobotModel",
    "CollisionReport",
    "LimitError",
    "forward_kinematics",
    "fk_batch",
    "sphere_box_collides",
    "sphere_cylinder_collides",
    "sphere_sphere_collides",
    "config_in_collision",
    "first_contact",
    "batch_check",
    "joint_limits",
    "robot_from_dict",
    "scene_from_dict",
    "robot_to_dict",
    "scene_to_dict",
]


class LimitError(ValueError):
    """A configuration violates the joint limits."""


def _rpy_matrix(rpy) -> np.ndarray:
    r, p, y = (float(v) for v in rpy)
    cr, sr = np.cos(r), np.sin(r)
    cp, sp = np.cos(p), np.sin(p)
    cy, sy = np.cos(y), np.sin(y)
    rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
    return rz @ ry @ rx


class Pose:
    """Rigid transform: world = rotation @ local + translation."""

    __slots__ = ("rotation", "translation")

    def __init__(self, rotation=None, translation=None):
        self.rotation = (
            np.eye(3) if rotation is None else np.asarray(rotation, dtype=np.float64)
        )
        self.translation = (
            np.zeros(3) if translation is None else np.asarray(translation, dtype=np.float64)
        )
        if self.rotation.shape != (3, 3) or self.translation.shape != (3,):
            raise ValueError("pose needs a 3x3 rotation and length-3 translation")
        if not np.allclose(self.rotation @ self.rotation.T, np.eye(3), atol=1e-9):
            raise ValueError("rotation is not orthonormal")
        if np.linalg.det(self.rotation) < 0:
            raise ValueError("rotation must be proper (determinant +1)")

    @classmethod
    def from_xyz_rpy(cls, xyz=(0, 0, 0), rpy=(0, 0, 0)):
        return cls(_rpy_matrix(rpy), np.asarray(xyz, dtype=np.float64))

    def to_local(self, points: np.ndarray) -> np.ndarray:
        return (points - self.translation) @ self.rotation


@dataclass
class Box:
    size: tuple[float, float, float]
    pose: Pose

    def __post_init__(self):
        self.size = tuple(float(v) for v in self.size)
        if len(self.size) != 3 or any(v <= 0 for v in self.size):
            raise ValueError("box size must be three positive extents")


@dataclass
class Cylinder:
    height: float
    radius: float
    pose: Pose

    def __post_init__(self):
        self.height = float(self.height)
        self.radius = float(self.radius)
        if self.height <= 0 or self.radius <= 0:
            raise ValueError("cylinder height and radius must be positive")


@dataclass
class SphereObstacle:
    radius: float
    pose: Pose

    def __post_init__(self):
        self.radius = float(self.radius)
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")


class Scene:
    """Posed obstacle set."""

    def __init__(self, obstacles):
        self.obstacles = list(obstacles)
        for obs in self.obstacles:
            if not isinstance(obs, (Box, Cylinder, SphereObstacle)):
                raise ValueError(f"unsupported obstacle {type(obs).__name__}")


@dataclass
class Joint:
    kind: str
    axis: tuple[float, float, float]
    origin: Pose
    limits: tuple[float, float]

    def __post_init__(self):
        if self.kind not in ("revolute", "prismatic"):
            raise ValueError(f"joint type must be revolute or prismatic, got {self.kind!r}")
        axis = np.asarray(self.axis, dtype=np.float64)
        norm = np.linalg.norm(axis)
        if axis.shape != (3,) or norm == 0:
            raise ValueError("joint axis must be a nonzero 3-vector")
        self.axis = tuple(axis / norm)
        lo, hi = (float(v) for v in self.limits)
        if not lo < hi:
            raise ValueError("joint limits must satisfy lower < upper")
        self.limits = (lo, hi)


@dataclass
class LinkSphere:
    link: int
    offset: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        self.offset = tuple(float(v) for v in self.offset)
        self.radius = float(self.radius)
        if self.radius <= 0:
            raise ValueError("link sphere radius must be positive")


class RobotModel:
    """Serial chain; link i is the frame after joint i, link 0 the base."""

    def __init__(self, joints, spheres):
        self.joints = list(joints)
        self.spheres = list(spheres)
        if not self.joints:
            raise ValueError("robot needs at least one joint")
        if not self.spheres:
            raise ValueError("robot needs at least one collision sphere")
        for sp in self.spheres:
            if not 0 <= sp.link <= len(self.joints):
                raise ValueError(f"sphere attached to unknown link {sp.link}")

    @property
    def dof(self) -> int:
        return len(self.joints)


def joint_limits(robot: RobotModel) -> tuple[np.ndarray, np.ndarray]:
    lo = np.array([j.limits[0] for j in robot.joints])
    hi = np.array([j.limits[1] for j in robot.joints])
    return lo, hi


def _axis_rotations(axis, angles: np.ndarray) -> np.ndarray:
    kx, ky, kz = axis
    k = np.asarray(axis, dtype=np.float64)
    skew = np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])
    c = np.cos(angles)
    s = np.sin(angles)
    return (
        c[:, None, None] * np.eye(3)
        + s[:, None, None] * skew
        + (1.0 - c)[:, None, None] * np.outer(k, k)
    )


def fk_batch(robot: RobotModel, configs) -> np.ndarray:
    """World centers of every link sphere: (m, n_spheres, 3)."""
    q = np.atleast_2d(np.asarray(configs, dtype=np.float64))
    if q.shape[1] != robot.dof:
        raise ValueError(f"configs must have {robot.dof} columns")
    m = q.shape[0]
    rot = np.broadcast_to(np.eye(3), (m, 3, 3)).copy()
    trans = np.zeros((m, 3))
    frames = [(rot, trans)]
    for j, joint in enumerate(robot.joints):
        trans = np.einsum("mij,j->mi", rot, joint.origin.translation) + trans
        rot = np.einsum("mij,jk->mik", rot, joint.origin.rotation)
        if joint.kind == "revolute":
            rot = np.einsum("mij,mjk->mik", rot, _axis_rotations(joint.axis, q[:, j]))
        else:
            trans = trans + np.einsum("mij,j->mi", rot, np.asarray(joint.axis)) * q[:, j, None]
        frames.append((rot, trans))
    centers = np.empty((m, len(robot.spheres), 3))
    for si, sp in enumerate(robot.spheres):
        frot, ftrans = frames[sp.link]
        centers[:, si] = np.einsum("mij,j->mi", frot, np.asarray(sp.offset)) + ftrans
    return centers


def forward_kinematics(robot: RobotModel, q) -> np.ndarray:
    """World centers of every link sphere for one configuration: (n_spheres, 3).

    Unlike fk_batch (which trusts its caller), this rejects NaNs and
    out-of-limit configurations.
    """
    q = np.asarray(q, dtype=np.float64)
    if np.isnan(q).any():
        raise ValueError("configuration contains NaN")
    lo, hi = joint_limits(robot)
    if q.shape == (robot.dof,) and (np.any(q < lo) or np.any(q > hi)):
        raise LimitError("configuration violates the joint limits")
    return fk_batch(robot, q[None, :])[0]


def _obstacle_hits(centers: np.ndarray, radii: np.ndarray, obstacle) -> np.ndarray:
    local = np.ascontiguousarray(obstacle.pose.to_local(centers))
    radii = np.ascontiguousarray(radii)
    if isinstance(obstacle, Box):
        return sphere_box_hits(local, radii, *obstacle.size)
    if isinstance(obstacle, Cylinder):
        return sphere_cylinder_hits(local, radii, obstacle.height, obstacle.radius)
    return sphere_sphere_hits(local, radii, obstacle.radius)


def sphere_box_collides(center, radius, box: Box) -> bool:
    """Touching counts: exact test of a sphere against a posed box."""
    hits = _obstacle_hits(np.asarray(center, dtype=np.float64)[None, :], np.array([float(radius)]), box)
    return bool(hits[0])


def sphere_cylinder_collides(center, radius, cylinder: Cylinder) -> bool:
    """Touching counts: exact test of a sphere against a posed cylinder."""
    hits = _obstacle_hits(np.asarray(center, dtype=np.float64)[None, :], np.array([float(radius)]), cylinder)
    return bool(hits[0])


def sphere_sphere_collides(center, radius, sphere: SphereObstacle) -> bool:
    """Touching counts: exact test of a sphere against a posed sphere."""
    hits = _obstacle_hits(np.asarray(center, dtype=np.float64)[None, :], np.array([float(radius)]), sphere)
    return bool(hits[0])


@dataclass
class CollisionReport:
    hit: bool
    sphere_index: int | None = None
    obstacle_index: int | None = None


def _batch_hits(robot, scene, q: np.ndarray) -> np.ndarray:
    m = q.shape[0]
    centers = fk_batch(robot, q).reshape(m * len(robot.spheres), 3)
    radii = np.tile(np.array([sp.radius for sp in robot.spheres]), m)
    hit = np.zeros(m, dtype=bool)
    for obs in scene.obstacles:
        flags = _obstacle_hits(centers, radii, obs).reshape(m, -1)
        hit |= flags.any(axis=1)
    return hit


def config_in_collision(q, robot: RobotModel, scene: Scene) -> bool:
    """True when any link sphere touches any obstacle at configuration q."""
    return bool(_batch_hits(robot, scene, np.atleast_2d(np.asarray(q, dtype=np.float64)))[0])


def first_contact(q, robot: RobotModel, scene: Scene) -> CollisionReport:
    """Like config_in_collision but reports the first (sphere, obstacle) pair."""
    centers = forward_kinematics(robot, q)
    for si, sp in enumerate(robot.spheres):
        row = centers[si][None, :]
        radius = np.array([sp.radius])
        for oi, obs in enumerate(scene.obstacles):
            if _obstacle_hits(row, radius, obs)[0]:
                return CollisionReport(True, si, oi)
    return CollisionReport(False)


def batch_check(configs, robot: RobotModel, scene: Scene, batch_size: int = 4096,
                on_limit: str = "error") -> np.ndarray:
    """Boolean in-collision mask over configuration rows.

    Limit handling: "error" raises LimitError naming the first offending row;
    "unfree" marks out-of-limits rows as hits without testing them.  Identical
    to looping config_in_collision because both paths share the kernels.
    """
    if on_limit not in ("error", "unfree"):
        raise ValueError("on_limit must be 'error' or 'unfree'")
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    q = np.atleast_2d(np.asarray(configs, dtype=np.float64))
    lo, hi = joint_limits(robot)
    inside = np.all((q >= lo) & (q <= hi), axis=1)
    if on_limit == "error" and not inside.all():
        bad = int(np.nonzero(~inside)[0][0])
        raise LimitError(f"configuration {bad} violates the joint limits")
    hit = np.ones(q.shape[0], dtype=bool)
    idx = np.nonzero(inside)[0]
    for lo_i in range(0, idx.size, batch_size):
        chunk = idx[lo_i : lo_i + batch_size]
        hit[chunk] = _batch_hits(robot, scene, q[chunk])
    return hit


# -- structured text schema ---------------------------------------------------

def _pose_from_dict(d) -> Pose:
    d = d or {}
    if "rotation" in d or "translation" in d:
        return Pose(d.get("rotation"), d.get("translation"))
    return Pose.from_xyz_rpy(d.get("xyz", (0, 0, 0)), d.get("rpy", (0, 0, 0)))


def robot_from_dict(data) -> RobotModel:
    try:
        joints = [
            Joint(
                kind=j["type"],
                axis=tuple(j["axis"]),
                origin=_pose_from_dict(j.get("origin")),
                limits=tuple(j["limits"]),
            )
            for j in data["joints"]
        ]
        spheres = [
            LinkSphere(link=int(s["link"]), offset=tuple(s["offset"]), radius=s["radius"])
            for s in data["spheres"]
        ]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed robot description: {exc}") from exc
    return RobotModel(joints, spheres)


def scene_from_dict(data) -> Scene:
    obstacles = []
    try:
        for obs in data["obstacles"]:
            kind = obs["type"]
            pose = _pose_from_dict(obs.get("origin"))
            if kind == "box":
                obstacles.append(Box(size=tuple(obs["size"]), pose=pose))
            elif kind == "cylinder":
                obstacles.append(Cylinder(height=obs["height"], radius=obs["radius"], pose=pose))
            elif kind == "sphere":
                obstacles.append(SphereObstacle(radius=obs["radius"], pose=pose))
            else:
                raise ValueError(f"unknown obstacle type {kind!r}")
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed scene description: {exc}") from exc
    return Scene(obstacles)


def _pose_to_dict(pose: Pose):
    return {
        "rotation": [[float(v) for v in row] for row in pose.rotation],
        "translation": [float(v) for v in pose.translation],
    }


def robot_to_dict(robot: RobotModel):
    return {
        "joints": [
            {
                "type": j.kind,
                "axis": [float(v) for v in j.axis],
                "origin": _pose_to_dict(j.origin),
                "limits": [float(v) for v in j.limits],
            }
            for j in robot.joints
        ],
        "spheres": [
            {"link": sp.link, "offset": [float(v) for v in sp.offset], "radius": sp.radius}
            for sp in robot.spheres
        ],
    }


def scene_to_dict(scene: Scene):
    out = []
    for obs in scene.obstacles:
        if isinstance(obs, Box):
            out.append({"type": "box", "size": [float(v) for v in obs.size],
                        "origin": _pose_to_dict(obs.pose)})
        elif isinstance(obs, Cylinder):
            out.append({"type": "cylinder", "height": obs.height, "radius": obs.radius,
                        "origin": _pose_to_dict(obs.pose)})
        else:
            out.append({"type": "sphere", "radius": obs.radius,
                        "origin": _pose_to_dict(obs.pose)})
    return {"obstacles": out}

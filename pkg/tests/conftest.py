"""Shared fixtures: bundled scenes, small robots, one reusable end-to-end solve."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

import permatrace
from permatrace.collision import Joint, LinkSphere, Pose, RobotModel, Scene
from permatrace.pipeline import InfeasibilityProof, load_problem_file, solve

SCENES = Path(permatrace.__file__).parent / "scenes"


def scene_file(name: str) -> Path:
    return SCENES / f"{name}.yaml"


@pytest.fixture(scope="session")
def wall_problem_file():
    return load_problem_file(scene_file("wall2d"))


@pytest.fixture(scope="session")
def gap_problem_file():
    return load_problem_file(scene_file("gap2d"))


@pytest.fixture(scope="session")
def wall_proof(wall_problem_file):
    """One wall2d solve shared by the certificate tests: (proof, problem)."""
    problem = wall_problem_file.problem()
    outcome = solve(problem, wall_problem_file.solve_params())
    assert isinstance(outcome, InfeasibilityProof), outcome
    return outcome, problem


@pytest.fixture
def planar_arm():
    """Two revolute z joints, unit links along x, one sphere per link end."""
    joints = [
        Joint("revolute", (0, 0, 1), Pose.from_xyz_rpy(), (-np.pi, np.pi)),
        Joint("revolute", (0, 0, 1), Pose.from_xyz_rpy(xyz=(1, 0, 0)), (-np.pi, np.pi)),
    ]
    spheres = [
        LinkSphere(link=1, offset=(1, 0, 0), radius=0.1),
        LinkSphere(link=2, offset=(1, 0, 0), radius=0.1),
    ]
    return RobotModel(joints, spheres)


@pytest.fixture
def point_robot():
    """Planar point robot: two prismatic joints on the unit square."""
    joints = [
        Joint("prismatic", (1, 0, 0), Pose.from_xyz_rpy(), (0.0, 1.0)),
        Joint("prismatic", (0, 1, 0), Pose.from_xyz_rpy(), (0.0, 1.0)),
    ]
    return RobotModel(joints, [LinkSphere(link=2, offset=(0, 0, 0), radius=0.02)])


@pytest.fixture
def empty_scene():
    return Scene([])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    rows = []
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            if status == "passed" and rep.when != "call":
                continue
            rows.append((nodeid.split("::")[-1], status, getattr(rep, "duration", 0.0)))
    if not rows:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, status, duration in sorted(set(rows)):
        word = "PASS" if status == "passed" else "FAIL"
        terminalreporter.write_line(f"{name}: {word} ({duration:.1f}s)")

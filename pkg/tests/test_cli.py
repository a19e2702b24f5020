"""Command line surface: subcommands, exit codes, output formats, env vars."""

from __future__ import annotations

import csv
import io
import os
import subprocess
import sys

import numpy as np
import pytest

from permatrace.cli import _parse_box, _resolve_scene, main
from permatrace.tracer import read_edgemesh

TRACE_CIRCLE = ["trace", "--manifold", "sphere:r=1", "--dim", "2", "--lambda", "0.25"]


@pytest.fixture(scope="module")
def wall_proof_path(tmp_path_factory):
    """One wall2d prove run shared by the verify tests."""
    path = tmp_path_factory.mktemp("proofs") / "wall.proof"
    assert main(["prove", "--scene", "wall2d", "--output", str(path)]) == 0
    text = path.read_text()
    assert text.startswith("INFPROOF v1")
    return path


@pytest.fixture(scope="module")
def circle_mesh_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("meshes") / "circle.mesh"
    assert main(TRACE_CIRCLE + ["--output", str(path)]) == 0
    return path


class TestHelpers:
    def test_box_single_range_expands(self):
        assert _parse_box("-2:2", 3) == ((-2.0, -2.0, -2.0), (2.0, 2.0, 2.0))

    def test_box_per_axis(self):
        assert _parse_box("0:1,-1:1", 2) == ((0.0, -1.0), (1.0, 1.0))

    def test_box_missing_colon(self):
        with pytest.raises(ValueError, match="lo:hi"):
            _parse_box("1", 2)

    def test_box_wrong_count(self):
        with pytest.raises(ValueError, match="1 or 3"):
            _parse_box("0:1,0:1", 3)

    def test_resolve_bundled_scenes(self):
        for name in ("wall2d", "gap2d", "arm3wall"):
            assert _resolve_scene(name).exists()

    def test_resolve_path_passthrough(self, tmp_path):
        f = tmp_path / "scene.yaml"
        f.write_text("robot: {}\n")
        assert _resolve_scene(str(f)) == f

    def test_resolve_unknown(self):
        with pytest.raises(ValueError, match="neither a file"):
            _resolve_scene("no_such_scene")


class TestTrace:
    def test_circle_to_stdout(self, capsys):
        assert main(TRACE_CIRCLE) == 0
        out, err = capsys.readouterr()
        dim, points, pairs = read_edgemesh(io.StringIO(out))
        assert dim == 2
        assert points.shape[0] > 0 and len(pairs) > 0
        assert "traced" in err

    def test_sphere_points_on_zero_set(self, tmp_path):
        path = tmp_path / "sphere.mesh"
        args = ["trace", "--manifold", "sphere:r=1", "--dim", "3",
                "--lambda", "0.25", "--output", str(path)]
        assert main(args) == 0
        dim, points, pairs = read_edgemesh(path)
        assert dim == 3
        assert points.shape[0] > 0
        assert np.abs(np.linalg.norm(points, axis=1) - 1.0).max() < 1e-6
        idx = np.array(pairs)
        assert idx.min() >= 0 and idx.max() < points.shape[0]

    def test_worker_count_does_not_change_output(self, tmp_path, circle_mesh_path):
        path = tmp_path / "w8.mesh"
        assert main(TRACE_CIRCLE + ["--workers", "8", "--output", str(path)]) == 0
        assert path.read_bytes() == circle_mesh_path.read_bytes()

    def test_seeded_run_matches_natural_seed(self, tmp_path, circle_mesh_path):
        # the circle is one component, so sampled seeds find the same mesh,
        # just numbered from a different starting cell
        path = tmp_path / "seeded.mesh"
        args = TRACE_CIRCLE + ["--box=-2:2", "--seeds", "5",
                               "--rng-seed", "3", "--output", str(path)]
        assert main(args) == 0
        _, ref_pts, ref_pairs = read_edgemesh(circle_mesh_path)
        _, pts, pairs = read_edgemesh(path)
        def geometry(points, index_pairs):
            rows = [tuple(row) for row in points]
            return set(rows), {frozenset((rows[i], rows[j])) for i, j in index_pairs}
        assert geometry(pts, pairs) == geometry(ref_pts, ref_pairs)

    def test_seeds_without_box(self, capsys):
        assert main(TRACE_CIRCLE + ["--seeds", "5"]) == 2
        assert "error:" in capsys.readouterr().err

    def test_nonpositive_lambda(self, capsys):
        args = ["trace", "--manifold", "sphere:r=1", "--dim", "2", "--lambda", "0"]
        assert main(args) == 2
        assert "error:" in capsys.readouterr().err

    def test_unknown_manifold(self, capsys):
        args = ["trace", "--manifold", "torus:r=1", "--dim", "3", "--lambda", "0.5"]
        assert main(args) == 2
        assert "error:" in capsys.readouterr().err

    def test_malformed_box(self, capsys):
        assert main(TRACE_CIRCLE + ["--box", "nope"]) == 2
        assert "error:" in capsys.readouterr().err

    def test_missing_required_flag_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["trace", "--dim", "2", "--lambda", "0.25"])
        assert exc.value.code == 2


class TestProve:
    def test_wall_yields_certificate(self, wall_proof_path, capsys, tmp_path):
        path = tmp_path / "again.proof"
        assert main(["prove", "--scene", "wall2d", "--output", str(path)]) == 0
        assert "infeasibility certificate:" in capsys.readouterr().err
        # fixed default seed, so a rerun reproduces the certificate byte for byte
        assert path.read_bytes() == wall_proof_path.read_bytes()

    def test_gap_yields_plan(self, capsys, tmp_path):
        path = tmp_path / "gap.plan"
        assert main(["prove", "--scene", "gap2d", "--output", str(path)]) == 0
        assert "plan found:" in capsys.readouterr().err
        assert path.read_text().startswith("PLAN v1")

    def test_zero_timeout_exits_3(self, capsys):
        assert main(["prove", "--scene", "wall2d", "--timeout", "0"]) == 3
        assert "timeout:" in capsys.readouterr().err

    def test_unknown_scene(self, capsys):
        assert main(["prove", "--scene", "no_such_scene"]) == 2
        assert "neither a file" in capsys.readouterr().err

    def test_bad_start_width(self, capsys):
        args = ["prove", "--scene", "wall2d", "--start", "0.1,0.2,0.3"]
        assert main(args) == 2
        assert "coordinates" in capsys.readouterr().err


class TestVerify:
    def test_valid_certificate(self, wall_proof_path, capsys):
        args = ["verify", "--proof", str(wall_proof_path), "--scene", "wall2d"]
        assert main(args) == 0
        out = capsys.readouterr().out
        assert out.count("[ok  ]") == 6
        assert "[FAIL]" not in out
        assert "certificate verified" in out

    def test_no_reconstruct_skips_one_check(self, wall_proof_path, capsys):
        args = ["verify", "--proof", str(wall_proof_path), "--scene", "wall2d",
                "--no-reconstruct"]
        assert main(args) == 0
        out = capsys.readouterr().out
        assert out.count("[ok  ]") == 5
        assert "reconstruction" not in out

    def test_tampered_point_rejected(self, wall_proof_path, tmp_path, capsys):
        lines = wall_proof_path.read_text().splitlines(keepends=True)
        row = lines.index("[points]\n") + 2
        vals = lines[row].split()
        vals[0] = repr(float(vals[0]) + 5e-3)
        lines[row] = " ".join(vals) + "\n"
        bad = tmp_path / "tampered.proof"
        bad.write_text("".join(lines))
        assert main(["verify", "--proof", str(bad), "--scene", "wall2d"]) == 1
        out, err = capsys.readouterr()
        assert "[FAIL]" in out
        assert "certificate REJECTED" in err

    def test_wrong_scene_rejected(self, wall_proof_path, capsys):
        args = ["verify", "--proof", str(wall_proof_path), "--scene", "gap2d"]
        assert main(args) == 1
        out = capsys.readouterr().out
        assert "[FAIL] fingerprint" in out

    def test_missing_proof_file(self, capsys):
        args = ["verify", "--proof", "/no/such/file", "--scene", "wall2d"]
        assert main(args) == 2
        assert "error:" in capsys.readouterr().err

    def test_garbage_proof_file(self, tmp_path, capsys):
        bad = tmp_path / "garbage.proof"
        bad.write_text("not a certificate\n")
        assert main(["verify", "--proof", str(bad), "--scene", "wall2d"]) == 2
        assert "error:" in capsys.readouterr().err


class TestBench:
    def test_resolution_sweep_csv(self, tmp_path):
        path = tmp_path / "bench.csv"
        args = ["bench", "--manifold", "sphere:r=1", "--dim", "2",
                "--lambdas", "0.5,0.25", "--k", "2", "--output", str(path)]
        assert main(args) == 0
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            assert reader.fieldnames == ["backend", "dim", "lambda", "k", "edges",
                                         "points", "tri_time", "check_time",
                                         "total_time"]
            rows = list(reader)
        assert len(rows) == 2
        for row in rows:
            assert row["backend"] in ("cython", "numpy")
            assert int(row["edges"]) > 0 and int(row["points"]) > 0
            assert float(row["tri_time"]) >= 0.0
            assert float(row["check_time"]) >= 0.0
            assert float(row["total_time"]) >= float(row["check_time"])
        # halving the resolution traces more edges
        assert int(rows[1]["edges"]) > int(rows[0]["edges"])

    def test_scene_checker(self, tmp_path):
        path = tmp_path / "bench.csv"
        args = ["bench", "--scene", "wall2d", "--manifold", "sphere:r=0.3",
                "--dim", "2", "--lambdas", "0.2", "--output", str(path)]
        assert main(args) == 0
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 1 and int(rows[0]["points"]) > 0

    def test_scene_dof_mismatch(self, capsys):
        args = ["bench", "--scene", "wall2d", "--dim", "3", "--lambdas", "0.5"]
        assert main(args) == 2
        assert "must match" in capsys.readouterr().err


class TestConsoleScript:
    def run(self, args, **env):
        return subprocess.run(["permatrace", *args], capture_output=True,
                              text=True, env={**os.environ, **env})

    def test_help(self):
        proc = self.run(["--help"])
        assert proc.returncode == 0
        assert "usage: permatrace" in proc.stdout
        for name in ("trace", "prove", "verify", "bench"):
            assert name in proc.stdout

    def test_usage_error(self):
        proc = self.run(["trace"])
        assert proc.returncode == 2

    def test_mc_workers_env_default(self, circle_mesh_path):
        proc = self.run(TRACE_CIRCLE, MC_WORKERS="8")
        assert proc.returncode == 0
        assert proc.stdout == circle_mesh_path.read_text()

    def test_forced_numpy_backend_matches(self, circle_mesh_path):
        proc = self.run(TRACE_CIRCLE, PERMATRACE_BACKEND="numpy")
        assert proc.returncode == 0
        assert proc.stdout == circle_mesh_path.read_text()

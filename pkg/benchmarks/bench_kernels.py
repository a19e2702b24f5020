"""Time the compiled kernels against the pure numpy fallback.

Runs every kernel on the same random batches through both implementations,
prints mean +- std over the repeats, and cross-checks that the outputs
agree while it is at it.  Batch sizes and repeat count are flags, so this
doubles as a quick regression probe after touching either implementation.

    python3 benchmarks/bench_kernels.py --sizes 1000,100000 --repeats 30
"""

from __future__ import annotations

import argparse
import csv
import sys
import time

import numpy as np

from permatrace import _kernels_np

try:
    from permatrace import _kernels
except ImportError:
    _kernels = None


def timed(fn, args, repeats):
    out = fn(*args)
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        samples.append(time.perf_counter() - t0)
    return out, np.mean(samples), np.std(samples)


def make_cases(size, support, rng):
    centers = np.ascontiguousarray(rng.uniform(-3.0, 3.0, size=(size, 3)))
    radii = np.ascontiguousarray(rng.uniform(0.01, 1.5, size=size))
    points = np.ascontiguousarray(rng.normal(size=(size, 4)))
    sup = np.ascontiguousarray(rng.normal(size=(support, 4)))
    weights = np.ascontiguousarray(rng.normal(size=support))
    return {
        "rbf_values": (points, sup, weights, 2.5, -0.1),
        "sphere_box_hits": (centers, radii, 1.0, 2.0, 0.5),
        "sphere_cylinder_hits": (centers, radii, 2.0, 1.0),
        "sphere_sphere_hits": (centers, radii, 1.0),
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=lambda s: [int(v) for v in s.split(",")],
                        default=[1000, 100_000], help="comma-separated batch sizes")
    parser.add_argument("--support", type=int, default=256,
                        help="RBF support points (kernel cost scales with this)")
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--output", help="also write the rows as CSV")
    args = parser.parse_args(argv)

    if _kernels is None:
        print("compiled kernels unavailable; timing the numpy fallback only",
              file=sys.stderr)

    rows = []
    rng = np.random.default_rng(args.seed)
    for size in args.sizes:
        cases = make_cases(size, args.support, rng)
        for name, case_args in cases.items():
            row = {"kernel": name, "batch": size}
            baseline = None
            for label, mod in (("cython", _kernels), ("numpy", _kernels_np)):
                if mod is None:
                    continue
                out, mean, std = timed(getattr(mod, name), case_args, args.repeats)
                if baseline is None:
                    baseline = np.asarray(out)
                elif name == "rbf_values":
                    err = np.abs(np.asarray(out) - baseline).max()
                    assert err < 1e-9, f"{name} disagrees by {err}"
                else:
                    assert np.array_equal(out, baseline), f"{name} outputs differ"
                row[f"{label}_mean"] = mean
                row[f"{label}_std"] = std
            rows.append(row)

    header = f"{'kernel':<22} {'batch':>8}   {'cython (s)':>22} {'numpy (s)':>22} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for row in rows:
        cy = row.get("cython_mean")
        np_mean = row["numpy_mean"]
        cy_col = f"{cy:.6f} +- {row['cython_std']:.6f}" if cy is not None else "-"
        speed = f"{np_mean / cy:6.2f}x" if cy else "-"
        print(f"{row['kernel']:<22} {row['batch']:>8}   {cy_col:>22} "
              f"{np_mean:.6f} +- {row['numpy_std']:.6f} {speed:>8}")

    if args.output:
        with open(args.output, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())

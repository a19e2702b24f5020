"""Implicit manifolds: analytic test fields and trained kernel classifiers.

Everything is a scalar field F on R^n whose zero level set is the manifold.
Sign convention shared with the tracer and refiner: F > 0 is positive,
F <= 0 (including exact zeros) is negative, so every point has a definite
sign and degenerate vertices cannot stall the crossing tests.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.special import expit

from .backend import rbf_values

__all__ = [
    "ImplicitManifold",
    "SphereManifold",
    "EllipsoidManifold",
    "PlaneManifold",
    "BoxBarrier",
    "KernelClassifierManifold",
    "TrainingError",
    "ProjectionError",
    "median_gamma",
    "train_classifier",
    "project_to_manifold",
    "sample_seeds",
    "edge_intersects",
    "intersection_point",
    "intersection_points_batch",
    "classifier_to_text",
    "classifier_from_text",
    "parse_manifold",
]


class TrainingError(RuntimeError):
    """Kernel system could not be solved or produced a degenerate field."""


class ProjectionError(RuntimeError):
    """Newton projection onto the zero set failed to converge."""


class ImplicitManifold:
    """Scalar field on R^n; subclasses implement batched evaluation."""

    dim: int

    def values(self, points) -> np.ndarray:
        raise NotImplementedError

    def value(self, q) -> float:
        return float(self.values(np.asarray(q, dtype=np.float64).reshape(1, -1))[0])

    def gradient(self, q) -> np.ndarray:
        """Central finite differences; overridden by analytic subclasses."""
        q = np.asarray(q, dtype=np.float64)
        h = 1e-6 * (1.0 + np.abs(q))
        probes = np.repeat(q[None, :], 2 * q.size, axis=0)
        for i in range(q.size):
            probes[2 * i, i] += h[i]
            probes[2 * i + 1, i] -= h[i]
        vals = self.values(probes)
        return (vals[0::2] - vals[1::2]) / (2.0 * h)

    def signs(self, points) -> np.ndarray:
        return np.where(self.values(points) > 0.0, 1, -1).astype(np.int8)


class SphereManifold(ImplicitManifold):
    """F(q) = ||q - c||^2 - r^2."""

    def __init__(self, center, radius):
        self.center = np.asarray(center, dtype=np.float64)
        self.radius = float(radius)
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        self.dim = self.center.size

    def values(self, points):
        d = np.asarray(points, dtype=np.float64) - self.center
        return np.einsum("ij,ij->i", d, d) - self.radius**2

    def gradient(self, q):
        return 2.0 * (np.asarray(q, dtype=np.float64) - self.center)

    def seed_point(self):
        p = self.center.copy()
        p[0] += self.radius
        return p


class EllipsoidManifold(ImplicitManifold):
    """F(q) = sum_i ((q_i - c_i) / a_i)^2 - 1."""

    def __init__(self, center, semi_axes):
        self.center = np.asarray(center, dtype=np.float64)
        self.semi_axes = np.asarray(semi_axes, dtype=np.float64)
        if self.center.size != self.semi_axes.size:
            raise ValueError("center and semi_axes length mismatch")
        if np.any(self.semi_axes <= 0):
            raise ValueError("semi-axes must be positive")
        self.dim = self.center.size

    def values(self, points):
        d = (np.asarray(points, dtype=np.float64) - self.center) / self.semi_axes
        return np.einsum("ij,ij->i", d, d) - 1.0

    def gradient(self, q):
        return 2.0 * (np.asarray(q, dtype=np.float64) - self.center) / self.semi_axes**2

    def seed_point(self):
        p = self.center.copy()
        p[0] += self.semi_axes[0]
        return p


class PlaneManifold(ImplicitManifold):
    """F(q) = n . q - d for a nonzero normal n."""

    def __init__(self, normal, offset):
        self.normal = np.asarray(normal, dtype=np.float64)
        if not np.any(self.normal):
            raise ValueError("normal must be nonzero")
        self.offset = float(offset)
        self.dim = self.normal.size

    def values(self, points):
        return np.asarray(points, dtype=np.float64) @ self.normal - self.offset

    def gradient(self, q):
        return self.normal.copy()

    def seed_point(self):
        return self.offset * self.normal / (self.normal @ self.normal)


class BoxBarrier:
    """Smooth penalty, near zero inside a box and growing linearly outside.

    Each axis contributes gain * scale * softplus(overshoot / scale) per
    face, so the penalty switches on within a few `scale` of the boundary
    and eventually dominates any bounded kernel term.  Subtracting it from
    a classifier field forces the far field negative, which keeps the zero
    set compact no matter how slowly the kernel term decays.
    """

    def __init__(self, lower, upper, scale, gain):
        self.lower = np.asarray(lower, dtype=np.float64)
        self.upper = np.asarray(upper, dtype=np.float64)
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ValueError("lower/upper must be 1-d of equal length")
        if np.any(self.upper <= self.lower):
            raise ValueError("upper must exceed lower on every axis")
        self.scale = float(scale)
        self.gain = float(gain)
        if self.scale <= 0 or self.gain <= 0:
            raise ValueError("scale and gain must be positive")

    def values(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        low = np.logaddexp(0.0, (self.lower - pts) / self.scale)
        high = np.logaddexp(0.0, (pts - self.upper) / self.scale)
        return self.gain * self.scale * (low + high).sum(axis=1)

    def gradient(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=np.float64)
        return self.gain * (expit((q - self.upper) / self.scale)
                            - expit((self.lower - q) / self.scale))


class KernelClassifierManifold(ImplicitManifold):
    """F(q) = sum_i w_i exp(-gamma ||q - s_i||^2) + bias - barrier(q).

    Without a barrier the weights must carry both signs, otherwise the far
    field could keep the positive sign out to floating-point underflow and
    the zero set would not be usefully bounded.
    """

    def __init__(self, support, weights, gamma, bias=0.0, train_accuracy=None,
                 barrier: BoxBarrier | None = None):
        self.support = np.ascontiguousarray(support, dtype=np.float64)
        self.weights = np.ascontiguousarray(weights, dtype=np.float64)
        if self.support.ndim != 2 or self.weights.shape != (self.support.shape[0],):
            raise ValueError("support must be (m, n) with one weight per row")
        if barrier is None and not (np.any(self.weights > 0) and np.any(self.weights < 0)):
            raise ValueError("weights must include both signs for a bounded zero set")
        self.gamma = float(gamma)
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        self.bias = float(bias)
        self.dim = self.support.shape[1]
        if barrier is not None and barrier.lower.size != self.dim:
            raise ValueError("barrier box dimension does not match the support")
        self.barrier = barrier
        self.train_accuracy = train_accuracy

    def values(self, points):
        pts = np.ascontiguousarray(points, dtype=np.float64)
        out = rbf_values(pts, self.support, self.weights, self.gamma, self.bias)
        if self.barrier is not None:
            out -= self.barrier.values(pts)
        return out

    def gradient(self, q):
        q = np.asarray(q, dtype=np.float64)
        d = q - self.support
        k = np.exp(-self.gamma * np.einsum("ij,ij->i", d, d))
        g = -2.0 * self.gamma * ((self.weights * k) @ d)
        if self.barrier is not None:
            g -= self.barrier.gradient(q)
        return g


def median_gamma(samples: np.ndarray) -> float:
    # gamma = 1 / (2 * median pairwise distance^2); subsample to cap the
    # quadratic cost, deterministically
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if samples.shape[0] > 512:
        stride = int(np.ceil(samples.shape[0] / 512))
        samples = samples[::stride]
    d2 = np.einsum("ij,ij->i", samples, samples)
    sq = d2[:, None] + d2[None, :] - 2.0 * samples @ samples.T
    sq = sq[np.triu_indices(samples.shape[0], k=1)]
    med = float(np.sqrt(max(np.median(sq), 0.0))) if sq.size else 0.0
    if med <= 0:
        return 1.0
    return 1.0 / (2.0 * med * med)


def train_classifier(positive, negative, gamma=None, regularization=1e-8,
                     barrier: BoxBarrier | None = None):
    """Fit the kernel field by ridge-regularized least squares on labels +-1.

    The bias stays at zero so the field decays towards zero far from the
    data; pass a BoxBarrier to force it strictly negative outside a box.
    Raises TrainingError when either class is empty or the regularized Gram
    system cannot be factorized.
    """
    positive = np.atleast_2d(np.asarray(positive, dtype=np.float64))
    negative = np.atleast_2d(np.asarray(negative, dtype=np.float64))
    if positive.size == 0 or negative.size == 0:
        raise TrainingError("both classes must be non-empty")
    if positive.shape[1] != negative.shape[1]:
        raise TrainingError("class dimension mismatch")
    x = np.vstack([positive, negative])
    y = np.concatenate([np.ones(len(positive)), -np.ones(len(negative))])
    if gamma is None:
        gamma = median_gamma(x)
    d2 = np.einsum("ij,ij->i", x, x)
    gram = np.exp(-gamma * np.maximum(d2[:, None] + d2[None, :] - 2.0 * x @ x.T, 0.0))
    gram[np.diag_indices_from(gram)] += regularization
    try:
        factor = cho_factor(gram, lower=True)
    except LinAlgError as exc:
        raise TrainingError(
            f"Gram factorization failed for {len(x)} samples "
            f"(gamma={gamma:g}, regularization={regularization:g}): {exc}"
        ) from exc
    weights = cho_solve(factor, y)
    model = KernelClassifierManifold(x, weights, gamma, bias=0.0, barrier=barrier)
    model.train_accuracy = float(np.mean(model.signs(x) == np.sign(y)))
    return model


def project_to_manifold(q0, manifold, tol=1e-8, max_iter=100):
    """Newton projection to |F| <= tol with backtracking on |F| decrease."""
    q = np.array(q0, dtype=np.float64)
    f = manifold.value(q)
    for _ in range(max_iter):
        if abs(f) <= tol:
            return q
        g = manifold.gradient(q)
        gg = float(g @ g)
        if not np.isfinite(gg) or gg <= 0.0:
            raise ProjectionError("vanishing gradient during projection")
        step = (-f / gg) * g
        t = 1.0
        while t >= 1e-12:
            q_new = q + t * step
            f_new = manifold.value(q_new)
            if abs(f_new) <= (1.0 - 1e-4 * t) * abs(f):
                break
            t *= 0.5
        else:
            raise ProjectionError("projection line search stalled")
        q, f = q_new, f_new
    raise ProjectionError(f"projection did not reach |F| <= {tol:g}")


def sample_seeds(manifold, box, count, tol=1e-8, rng=None, min_separation=0.0):
    """Project uniform draws from `box` onto the zero set, deduplicated.

    Returns an (m, n) array with m <= count; warns when more than 90% of the
    projection attempts fail.  `box` is a (lower, upper) pair of length-n
    sequences and the draw budget is 20 attempts per requested seed.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    lo = np.asarray(box[0], dtype=np.float64)
    hi = np.asarray(box[1], dtype=np.float64)
    if lo.shape != (manifold.dim,) or hi.shape != (manifold.dim,) or np.any(lo >= hi):
        raise ValueError("box must be a (lower, upper) pair with lower < upper")
    rng = np.random.default_rng(0) if rng is None else rng
    accepted: list[np.ndarray] = []
    attempts = failures = 0
    budget = 20 * count
    while len(accepted) < count and attempts < budget:
        attempts += 1
        q0 = rng.uniform(lo, hi)
        try:
            q = project_to_manifold(q0, manifold, tol=tol)
        except ProjectionError:
            failures += 1
            continue
        if min_separation > 0.0 and accepted:
            gaps = np.linalg.norm(np.asarray(accepted) - q, axis=1)
            if np.min(gaps) < min_separation:
                continue
        accepted.append(q)
    if failures > 0.9 * attempts:
        warnings.warn(
            f"seed projection failed for {failures}/{attempts} draws; "
            f"returning {len(accepted)} of {count} seeds",
            stacklevel=2,
        )
    return np.asarray(accepted, dtype=np.float64).reshape(len(accepted), manifold.dim)


def edge_intersects(manifold, a, b) -> bool:
    """True when the endpoint signs differ (F = 0 counts as negative)."""
    s = manifold.signs(np.vstack([a, b]).astype(np.float64))
    return bool(s[0] != s[1])


def intersection_point(manifold, a, b, eps):
    """Bisect a sign-changing segment until the bracket is shorter than eps."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    s = manifold.signs(np.vstack([a, b]))
    if s[0] == s[1]:
        raise ValueError("endpoints do not straddle the zero set")
    return intersection_points_batch(manifold, a[None, :], b[None, :], eps, signs_a=s[:1])[0]


def intersection_points_batch(manifold, a, b, eps, signs_a=None):
    """Vectorized bisection; every returned point sits inside a bracket < eps.

    `signs_a` (signs at the `a` endpoints) may be passed to skip one batched
    field evaluation; segments are assumed sign-changing.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError("endpoint arrays must both be (m, n)")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if a.shape[0] == 0:
        return a.copy()
    if signs_a is None:
        signs_a = manifold.signs(a)
    signs_a = np.asarray(signs_a)
    seg = np.linalg.norm(b - a, axis=1)
    lo = np.zeros(a.shape[0])
    hi = np.ones(a.shape[0])
    diff = b - a
    # each row halves until its own bracket is short enough, so a segment's
    # root never depends on what else happens to share the batch
    active = np.nonzero(seg > eps)[0]
    while active.size:
        mid = 0.5 * (lo[active] + hi[active])
        s = manifold.signs(a[active] + mid[:, None] * diff[active])
        same = s == signs_a[active]
        lo[active] = np.where(same, mid, lo[active])
        hi[active] = np.where(same, hi[active], mid)
        active = active[seg[active] * (hi[active] - lo[active]) > eps]
    t = 0.5 * (lo + hi)
    return a + t[:, None] * diff


def classifier_to_text(manifold: KernelClassifierManifold) -> str:
    """Exact decimal serialization (repr round-trips every float)."""
    lines = [
        "KCLF v1",
        f"dim {manifold.dim}",
        f"gamma {manifold.gamma!r}",
        f"bias {manifold.bias!r}",
    ]
    if manifold.barrier is not None:
        bar = manifold.barrier
        coords = list(bar.lower) + list(bar.upper)
        lines.append("barrier " + " ".join(
            repr(float(v)) for v in [bar.scale, bar.gain] + coords))
    lines.append(f"support {manifold.support.shape[0]}")
    for row, w in zip(manifold.support, manifold.weights):
        lines.append(" ".join(repr(float(v)) for v in row) + " " + repr(float(w)))
    return "\n".join(lines) + "\n"


def classifier_from_text(text: str) -> KernelClassifierManifold:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    try:
        if lines[0].strip() != "KCLF v1":
            raise ValueError(f"unsupported header {lines[0]!r}")
        fields = {}
        body = len(lines)
        for i, ln in enumerate(lines[1:], start=1):
            key, val = ln.split(None, 1)
            fields[key] = val
            if key == "support":
                body = i + 1
                break
        dim = int(fields["dim"])
        gamma = float(fields["gamma"])
        bias = float(fields["bias"])
        barrier = None
        if "barrier" in fields:
            vals = [float(v) for v in fields["barrier"].split()]
            if len(vals) != 2 + 2 * dim:
                raise ValueError("barrier line width does not match dim")
            barrier = BoxBarrier(vals[2 : 2 + dim], vals[2 + dim :],
                                 scale=vals[0], gain=vals[1])
        if "support" not in fields:
            raise ValueError("missing support count")
        count = int(fields["support"])
        rows = lines[body : body + count]
        if len(rows) != count:
            raise ValueError(f"expected {count} support rows, found {len(rows)}")
        data = np.array([[float(v) for v in ln.split()] for ln in rows])
        if data.shape[1] != dim + 1:
            raise ValueError("support row width does not match dim")
    except (IndexError, KeyError, ValueError) as exc:
        raise ValueError(f"malformed classifier text: {exc}") from exc
    return KernelClassifierManifold(data[:, :dim], data[:, dim], gamma, bias,
                                    barrier=barrier)


def parse_manifold(spec: str, dim: int) -> ImplicitManifold:
    """Build an analytic manifold from `name:key=val,...`.

    Vector values use `|` separators, e.g. `ellipsoid:a=1|2|1.5` or
    `plane:n=1|0,d=0.25`; unspecified centers default to the origin.
    """
    name, _, body = spec.partition(":")
    name = name.strip().lower()
    params: dict[str, list[float]] = {}
    if body:
        for item in body.split(","):
            key, _, val = item.partition("=")
            if not val:
                raise ValueError(f"malformed manifold parameter {item!r}")
            params[key.strip()] = [float(v) for v in val.split("|")]
    def vector(key, default=None):
        if key not in params:
            if default is None:
                raise ValueError(f"manifold {name!r} requires parameter {key!r}")
            return np.full(dim, default, dtype=np.float64)
        v = np.asarray(params[key], dtype=np.float64)
        if v.size == 1:
            return np.full(dim, v[0])
        if v.size != dim:
            raise ValueError(f"parameter {key!r} must have {dim} components")
        return v
    if name == "sphere":
        if "r" not in params:
            raise ValueError("sphere requires r=<radius>")
        return SphereManifold(vector("c", 0.0), params["r"][0])
    if name == "ellipsoid":
        return EllipsoidManifold(vector("c", 0.0), vector("a"))
    if name == "plane":
        d = params.get("d", [0.0])[0]
        return PlaneManifold(vector("n"), d)
    raise ValueError(f"unknown manifold {name!r} (expected sphere, ellipsoid, or plane)")

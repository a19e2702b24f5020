"""Pure numpy implementations of the compiled kernels.

Same signatures and results as permatrace._kernels; used when the compiled
module is unavailable or when PERMATRACE_BACKEND=numpy is set.
"""

from __future__ import annotations

import numpy as np


def rbf_values(points, support, weights, gamma, bias):
    """sum_j w_j * exp(-gamma * ||p_i - s_j||^2) + bias for every row p_i."""
    points = np.asarray(points, dtype=np.float64)
    support = np.asarray(support, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if support.shape[1] != points.shape[1] or weights.shape[0] != support.shape[0]:
        raise ValueError("support/weights shape mismatch")
    if points.shape[0] == 0:
        return np.zeros(0, dtype=np.float64)
    # chunk the (m, s) distance matrix to keep the temporaries bounded
    out = np.empty(points.shape[0], dtype=np.float64)
    step = max(1, int(2**22 // max(support.shape[0], 1)))
    p2 = np.einsum("ij,ij->i", points, points)
    s2 = np.einsum("ij,ij->i", support, support)
    for lo in range(0, points.shape[0], step):
        hi = min(lo + step, points.shape[0])
        d2 = p2[lo:hi, None] + s2[None, :] - 2.0 * points[lo:hi] @ support.T
        np.maximum(d2, 0.0, out=d2)
        out[lo:hi] = np.exp(-gamma * d2) @ weights
    return out + bias


def sphere_box_hits(centers, radii, lx, ly, lz):
    """1 where a sphere touches an origin-centered axis-aligned box.

    Region logic on the first octant: bounding prune, then the three edge
    regions, then the vertex region; everything else intersects the box.
    """
    p = np.abs(np.asarray(centers, dtype=np.float64))
    r = np.asarray(radii, dtype=np.float64)
    h = np.array([0.5 * lx, 0.5 * ly, 0.5 * lz])
    d = p - h
    r2 = r * r
    miss = (d > r[:, None]).any(axis=1)
    inside = p <= h
    for ax in range(3):
        j, k = (ax + 1) % 3, (ax + 2) % 3
        edge = inside[:, ax] & (d[:, j] > 0) & (d[:, k] > 0)
        miss |= edge & (d[:, j] ** 2 + d[:, k] ** 2 > r2)
    corner = (d > 0).all(axis=1)
    miss |= corner & ((d * d).sum(axis=1) > r2)
    return (~miss).astype(np.uint8)


def sphere_cylinder_hits(centers, radii, height, radius):
    """1 where a sphere touches an origin-centered z-aligned cylinder.

    Prune on the half-height and the radial sum, then the ring region
    around the cap edge; everything else intersects.
    """
    c = np.asarray(centers, dtype=np.float64)
    r = np.asarray(radii, dtype=np.float64)
    dz = np.abs(c[:, 2]) - 0.5 * height
    dr = np.hypot(c[:, 0], c[:, 1]) - radius
    miss = (dz > r) | (dr > r)
    ring = (dz > 0) & (dr > 0)
    miss |= ring & (dr * dr + dz * dz > r * r)
    return (~miss).astype(np.uint8)


def sphere_sphere_hits(centers, radii, radius):
    """1 where a sphere touches an origin-centered sphere of given radius."""
    c = np.asarray(centers, dtype=np.float64)
    r = np.asarray(radii, dtype=np.float64)
    d2 = np.einsum("ij,ij->i", c, c)
    rr = r + radius
    return (d2 <= rr * rr).astype(np.uint8)

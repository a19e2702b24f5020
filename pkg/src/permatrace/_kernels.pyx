# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: RBF field evaluation and sphere-vs-primitive tests.

Signatures and results match permatrace._kernels_np; permatrace.backend
picks whichever module imports.  Collision centers arrive already expressed
in the obstacle's local frame, one row per sphere.
"""

from libc.math cimport exp, fabs, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()


def rbf_values(double[:, ::1] points, double[:, ::1] support,
               double[::1] weights, double gamma, double bias):
    """sum_j w_j * exp(-gamma * ||p_i - s_j||^2) + bias for every row p_i."""
    cdef Py_ssize_t m = points.shape[0]
    cdef Py_ssize_t n = points.shape[1]
    cdef Py_ssize_t s = support.shape[0]
    if support.shape[1] != n or weights.shape[0] != s:
        raise ValueError("support/weights shape mismatch")
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, d
    cdef double acc, dist2, diff
    with nogil:
        for i in range(m):
            acc = bias
            for j in range(s):
                dist2 = 0.0
                for d in range(n):
                    diff = points[i, d] - support[j, d]
                    dist2 += diff * diff
                acc += weights[j] * exp(-gamma * dist2)
            out[i] = acc
    return out_arr


def sphere_box_hits(double[:, ::1] centers, double[::1] radii,
                    double lx, double ly, double lz):
    """1 where a sphere touches an origin-centered axis-aligned box.

    Region logic on the first octant: bounding prune, then the three edge
    regions, then the vertex region; everything else intersects the box.
    """
    cdef Py_ssize_t m = centers.shape[0]
    out_arr = np.zeros(m, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr
    cdef double hx = 0.5 * lx, hy = 0.5 * ly, hz = 0.5 * lz
    cdef double px, py, pz, r, dx, dy, dz
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            px = fabs(centers[i, 0])
            py = fabs(centers[i, 1])
            pz = fabs(centers[i, 2])
            r = radii[i]
            dx = px - hx
            dy = py - hy
            dz = pz - hz
            if dx > r or dy > r or dz > r:
                continue
            if px <= hx and dy > 0 and dz > 0 and dy * dy + dz * dz > r * r:
                continue
            if py <= hy and dx > 0 and dz > 0 and dx * dx + dz * dz > r * r:
                continue
            if pz <= hz and dx > 0 and dy > 0 and dx * dx + dy * dy > r * r:
                continue
            if dx > 0 and dy > 0 and dz > 0 and dx * dx + dy * dy + dz * dz > r * r:
                continue
            out[i] = 1
    return out_arr


def sphere_cylinder_hits(double[:, ::1] centers, double[::1] radii,
                         double height, double radius):
    """1 where a sphere touches an origin-centered z-aligned cylinder.

    Prune on the half-height and the radial sum, then the ring region
    around the cap edge; everything else intersects.
    """
    cdef Py_ssize_t m = centers.shape[0]
    out_arr = np.zeros(m, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr
    cdef double hh = 0.5 * height
    cdef double pz, r, rad, dr, dz
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            pz = fabs(centers[i, 2])
            r = radii[i]
            rad = sqrt(centers[i, 0] * centers[i, 0] + centers[i, 1] * centers[i, 1])
            dz = pz - hh
            dr = rad - radius
            if dz > r or dr > r:
                continue
            if dz > 0 and dr > 0 and dr * dr + dz * dz > r * r:
                continue
            out[i] = 1
    return out_arr


def sphere_sphere_hits(double[:, ::1] centers, double[::1] radii,
                       double radius):
    """1 where a sphere touches an origin-centered sphere of given radius."""
    cdef Py_ssize_t m = centers.shape[0]
    out_arr = np.zeros(m, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr
    cdef double d2, rr
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            d2 = (centers[i, 0] * centers[i, 0] + centers[i, 1] * centers[i, 1]
                  + centers[i, 2] * centers[i, 2])
            rr = radii[i] + radius
            if d2 <= rr * rr:
                out[i] = 1
    return out_arr

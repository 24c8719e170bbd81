"""Low-level simplex geometry: volumes, circumcenters, barycentric coordinates, frames.

All functions accept batched input: ``coords`` has shape (m, k+1, n) for m
simplices with k+1 vertices each, embedded in R^n.  Scalars fall out of the
m=1 case.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateSimplexError

# Relative condition threshold above which the equidistance system is
# considered degenerate.
CIRCUMCENTER_COND_MAX = 1e12


def edge_matrix(coords: np.ndarray) -> np.ndarray:
    """Edge vectors v_i - v_0, shape (m, k, n)."""
    return coords[:, 1:, :] - coords[:, :1, :]


def unsigned_volume(coords: np.ndarray) -> np.ndarray:
    """Unsigned k-volume via the Gram determinant, sqrt(det(E E^T)) / k!.

    Vertices (k=0) get volume 1 by convention.
    """
    coords = np.asarray(coords, dtype=float)
    m, kp1, n = coords.shape
    k = kp1 - 1
    if k == 0:
        return np.ones(m)
    e = edge_matrix(coords)
    if k == n:
        return np.abs(np.linalg.det(e)) / math.factorial(k)
    gram = e @ np.transpose(e, (0, 2, 1))
    det = np.maximum(np.linalg.det(gram), 0.0)
    return np.sqrt(det) / math.factorial(k)


def signed_volume(coords: np.ndarray) -> np.ndarray:
    """Signed n-volume of full-dimensional simplices, det(E) / n!."""
    coords = np.asarray(coords, dtype=float)
    n = coords.shape[2]
    if coords.shape[1] != n + 1:
        raise ValueError("signed_volume needs n+1 vertices in R^n")
    return np.linalg.det(edge_matrix(coords)) / math.factorial(n)


def diameter(coords: np.ndarray) -> np.ndarray:
    """Largest pairwise vertex distance (= longest edge for a simplex)."""
    coords = np.asarray(coords, dtype=float)
    diff = coords[:, :, None, :] - coords[:, None, :, :]
    return np.sqrt((diff ** 2).sum(-1)).max(axis=(1, 2))


def circumcenter(coords: np.ndarray, check: bool = True) -> np.ndarray:
    """Circumcenters of k-simplices in R^n, shape (m, n).

    The unique point of the simplex plane equidistant from all vertices:
    solve the normal equations 2 E E^T a = diag(E E^T) for the barycentric
    offsets a, then c = v_0 + a^T E.
    """
    coords = np.asarray(coords, dtype=float)
    m, kp1, n = coords.shape
    k = kp1 - 1
    if k == 0:
        return coords[:, 0, :].copy()
    e = edge_matrix(coords)
    gram = 2.0 * (e @ np.transpose(e, (0, 2, 1)))
    rhs = np.einsum("mkd,mkd->mk", e, e)
    if check:
        cond = np.linalg.cond(gram)
        bad = ~(cond < CIRCUMCENTER_COND_MAX)
        if bad.any():
            i = int(np.argmax(bad))
            raise DegenerateSimplexError(
                f"near-degenerate simplex (row {i}): equidistance system "
                f"condition estimate {cond[i]:.3e}"
            )
    alpha = np.linalg.solve(gram, rhs[..., None])[..., 0]
    return coords[:, 0, :] + np.einsum("mk,mkd->md", alpha, e)


def barycentric_coordinates(points: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of points (m, n) w.r.t. simplices (m, k+1, n).

    For k < n the point is first projected onto the simplex plane (exact for
    points already lying in it, e.g. circumcenters).  Returns (m, k+1).
    """
    points = np.asarray(points, dtype=float)
    coords = np.asarray(coords, dtype=float)
    e = edge_matrix(coords)
    gram = e @ np.transpose(e, (0, 2, 1))
    rhs = np.einsum("mkd,md->mk", e, points - coords[:, 0, :])
    lam = np.linalg.solve(gram, rhs[..., None])[..., 0]
    lam0 = 1.0 - lam.sum(axis=1, keepdims=True)
    return np.concatenate([lam0, lam], axis=1)


def inradius(coords: np.ndarray) -> np.ndarray:
    """Radius of the largest k-ball inside each k-simplex: k*vol / sum(facet vols).

    Facets of an edge are vertices with volume 1, giving the half-length.
    """
    coords = np.asarray(coords, dtype=float)
    m, kp1, _ = coords.shape
    k = kp1 - 1
    if k == 0:
        return np.zeros(m)
    vol = unsigned_volume(coords)
    surf = np.zeros(m)
    for drop in range(kp1):
        keep = [i for i in range(kp1) if i != drop]
        surf += unsigned_volume(coords[:, keep, :])
    return k * vol / surf


def orthonormal_frame(coords: np.ndarray) -> np.ndarray:
    """Orthonormal basis of each simplex plane, shape (m, k, n).

    Modified Gram-Schmidt on the edge vectors from vertex 0; the last vector
    is flipped if needed so the frame orientation matches the vertex order.
    """
    coords = np.asarray(coords, dtype=float)
    e = edge_matrix(coords).copy()
    m, k, n = e.shape
    q = np.zeros_like(e)
    for i in range(k):
        v = e[:, i, :]
        for j in range(i):
            v = v - np.einsum("md,md->m", q[:, j, :], v)[:, None] * q[:, j, :]
        nrm = np.linalg.norm(v, axis=1, keepdims=True)
        if np.any(nrm < 1e-300):
            raise DegenerateSimplexError("degenerate simplex in orthonormal_frame")
        q[:, i, :] = v / nrm
    if k == n:
        # Align frame orientation with the vertex-order orientation.
        sign = np.sign(np.linalg.det(e))
        qdet = np.sign(np.linalg.det(q))
        flip = sign * qdet < 0
        q[flip, -1, :] *= -1.0
    return q

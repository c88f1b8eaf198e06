"""Planar geometry: distances, MST-based kernel range, knot selection, kernels.

Coordinates are plain float arrays of shape (N, 2). Duplicate sites are
tolerated everywhere; they simply produce kernel weight 1 off-diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import AllPointsCoincident, InvalidKnotCount, NonPositiveRange

_KMEANS_MAX_ITER = 100


def as_coords(points) -> np.ndarray:
    """Coerce to a float64 (N, 2) coordinate array and validate finiteness."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"coordinates must have shape (N, 2), got {pts.shape}")
    if not np.isfinite(pts).all():
        raise ValueError("coordinates contain non-finite values")
    return pts


def pairwise_distances(a, b) -> np.ndarray:
    """Euclidean distance matrix between two coordinate sets, shape (|a|, |b|)."""
    return cdist(as_coords(a), as_coords(b))


def mst_max_edge(coords, subsample: int | None = None, seed: int = 0) -> float:
    """Length of the longest edge of a Euclidean minimum spanning tree.

    Runs Prim's algorithm with an O(N) distance array, so memory stays linear
    while time is O(N^2). For very large N an optional uniform ``subsample``
    (recommended only above ~30,000 sites) bounds the cost; it preserves the
    order of magnitude of the maximum edge.

    Parameters
    ----------
    coords : (N, 2) array
    subsample : int, optional
        If given and N exceeds it, compute the tree on this many uniformly
        sampled sites (seeded).
    seed : int
        Seed for the subsample draw.

    Returns
    -------
    float
        Maximum MST edge length, > 0.

    Raises
    ------
    AllPointsCoincident
        If every pairwise distance is zero.
    """
    pts = as_coords(coords)
    n = pts.shape[0]
    if n < 2:
        raise ValueError("need at least two sites for a spanning tree")
    if subsample is not None and n > subsample:
        rng = np.random.default_rng(seed)
        pts = pts[rng.choice(n, size=subsample, replace=False)]
        n = subsample

    x, y = pts[:, 0], pts[:, 1]
    # squared distances avoid N^2 square roots; monotone, so argmins agree
    best = (x - x[0]) ** 2 + (y - y[0]) ** 2
    best[0] = np.inf
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    max_edge_sq = 0.0
    for _ in range(n - 1):
        j = int(np.argmin(best))
        max_edge_sq = max(max_edge_sq, best[j])
        in_tree[j] = True
        d2 = (x - x[j]) ** 2 + (y - y[j]) ** 2
        np.minimum(best, d2, out=best)
        best[in_tree] = np.inf
    if max_edge_sq <= 0.0:
        raise AllPointsCoincident("all sites coincide; kernel range would be zero")
    return float(np.sqrt(max_edge_sq))


@dataclass(frozen=True)
class KnotSet:
    """K-means cluster centers plus the nearest-center assignment."""

    centers: np.ndarray     # (L, 2)
    assignment: np.ndarray  # (N,) int, index into centers

    @property
    def count(self) -> int:
        return self.centers.shape[0]


def _chunked_argmin_dist(pts: np.ndarray, centers: np.ndarray,
                         chunk: int = 16384) -> np.ndarray:
    out = np.empty(pts.shape[0], dtype=np.int64)
    for lo in range(0, pts.shape[0], chunk):
        hi = min(lo + chunk, pts.shape[0])
        out[lo:hi] = np.argmin(cdist(pts[lo:hi], centers), axis=1)
    return out


def _plusplus_seed(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = pts.shape[0]
    centers = np.empty((k, 2))
    centers[0] = pts[rng.integers(n)]
    d2 = np.sum((pts - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total > 0.0:
            probs = d2 / total
            idx = rng.choice(n, p=probs)
        else:
            # all remaining mass at chosen points (duplicates): fall back to uniform
            idx = rng.integers(n)
        centers[i] = pts[idx]
        np.minimum(d2, np.sum((pts - centers[i]) ** 2, axis=1), out=d2)
    return centers


def kmeans_knots(coords, n_knots: int, seed: int = 0) -> KnotSet:
    """Deterministic Lloyd k-means with ++ seeding, used to place basis knots.

    Iterates to an assignment fixed point or 100 iterations. Empty clusters
    are re-seeded from the point farthest from its current center.
    """
    pts = as_coords(coords)
    n = pts.shape[0]
    if n_knots < 1 or n_knots > n:
        raise InvalidKnotCount(f"n_knots={n_knots} outside [1, {n}]")
    rng = np.random.default_rng(seed)
    centers = _plusplus_seed(pts, n_knots, rng)

    assignment = np.full(n, -1, dtype=np.int64)
    for _ in range(_KMEANS_MAX_ITER):
        new_assignment = _chunked_argmin_dist(pts, centers)
        counts = np.bincount(new_assignment, minlength=n_knots)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            d_own = np.sum((pts - centers[new_assignment]) ** 2, axis=1)
            for c in empty:
                far = int(np.argmax(d_own))
                centers[c] = pts[far]
                new_assignment[far] = c
                d_own[far] = 0.0
            counts = np.bincount(new_assignment, minlength=n_knots)
        sums = np.zeros((n_knots, 2))
        np.add.at(sums, new_assignment, pts)
        centers = sums / counts[:, None]
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
    return KnotSet(centers=centers, assignment=assignment)


def proximity(a, b, range_r: float, zero_diagonal: bool = False,
              chunk: int | None = None) -> np.ndarray:
    """Exponential distance-decay kernel exp(-d / range_r), shape (|a|, |b|).

    With ``zero_diagonal`` the main diagonal of a square result is forced to
    exactly 0 (the convention for the spatial dependence matrix).
    """
    if not range_r > 0.0:
        raise NonPositiveRange(f"kernel range must be > 0, got {range_r}")
    pa, pb = as_coords(a), as_coords(b)
    if chunk is None:
        out = np.exp(-cdist(pa, pb) / range_r)
    else:
        out = np.empty((pa.shape[0], pb.shape[0]))
        for lo in range(0, pa.shape[0], chunk):
            hi = min(lo + chunk, pa.shape[0])
            np.exp(-cdist(pa[lo:hi], pb) / range_r, out=out[lo:hi])
    if zero_diagonal and out.shape[0] == out.shape[1]:
        np.fill_diagonal(out, 0.0)
    return out

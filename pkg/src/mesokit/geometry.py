"""Centroid sampling and exact brute-force k-nearest-neighbor search."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .rng import sample_without_replacement
from .tensor import ShapeError

# Bound on the centroid-by-point distance block held at once (float64 cells).
_BLOCK_CELLS = 1 << 22


class CorruptNitError(ValueError):
    """A neighbor index table refers to points that do not exist."""


@dataclass(frozen=True)
class NeighborIndexTable:
    """``indices[c]`` holds the ``k`` neighbors found for ``centroids[c]``.

    ``centroids`` is ``None`` when the table was loaded from the hardware
    binary format, which stores neighbor indices only.
    """

    indices: np.ndarray
    centroids: np.ndarray | None = None

    def __post_init__(self):
        idx = np.ascontiguousarray(self.indices, dtype=np.int64)
        if idx.ndim != 2 or idx.shape[1] < 1:
            raise ShapeError(f"NIT must be n_out x k with k >= 1, got {idx.shape}")
        object.__setattr__(self, "indices", idx)
        if self.centroids is not None:
            cen = np.ascontiguousarray(self.centroids, dtype=np.int64)
            if cen.shape != (idx.shape[0],):
                raise ShapeError(
                    f"{cen.shape[0]} centroids for a NIT with {idx.shape[0]} rows"
                )
            object.__setattr__(self, "centroids", cen)

    @property
    def n_out(self) -> int:
        return self.indices.shape[0]

    @property
    def k(self) -> int:
        return self.indices.shape[1]

    def validate(self, n_points: int) -> None:
        """Raise :class:`CorruptNitError` unless every index is in range."""
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= n_points):
            raise CorruptNitError(f"neighbor index outside [0, {n_points})")
        if self.centroids is not None and self.centroids.size and (
            self.centroids.min() < 0 or self.centroids.max() >= n_points
        ):
            raise CorruptNitError(f"centroid index outside [0, {n_points})")

    def __eq__(self, other):
        if not isinstance(other, NeighborIndexTable):
            return NotImplemented
        if (self.centroids is None) != (other.centroids is None):
            return False
        same_cen = self.centroids is None or np.array_equal(self.centroids, other.centroids)
        return same_cen and np.array_equal(self.indices, other.indices)

    __hash__ = None


def check_cloud(cloud: np.ndarray, raw: bool = False) -> np.ndarray:
    if cloud.ndim != 2 or cloud.shape[0] < 1:
        raise ShapeError(f"a point cloud needs at least one row, got {cloud.shape}")
    if raw and cloud.shape[1] != 3:
        raise ShapeError(f"raw point clouds have 3 columns, got {cloud.shape[1]}")
    return cloud


def sample_centroids(cloud: np.ndarray, n_out: int, seed: int) -> np.ndarray:
    """Pick ``n_out`` distinct row indices with the portable PRNG in :mod:`mesokit.rng`."""
    n = check_cloud(cloud).shape[0]
    if not 1 <= n_out <= n:
        raise ValueError(f"n_out must be in [1, {n}], got {n_out}")
    return np.array(sample_without_replacement(n, n_out, seed), dtype=np.int64)


def squared_distances(points: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """``queries x points`` squared Euclidean distances in float64.

    Columns are accumulated strictly left to right so the values match a
    scalar loop bit for bit.
    """
    d = np.zeros((queries.shape[0], points.shape[0]), dtype=np.float64)
    p64 = points.astype(np.float64)
    q64 = queries.astype(np.float64)
    for j in range(points.shape[1]):
        diff = q64[:, j : j + 1] - p64[None, :, j]
        d += diff * diff
    return d


def _select_k(dist: np.ndarray, k: int) -> np.ndarray:
    # Partial selection finds the k-th distance; every point at or under it
    # is a candidate, then (distance, index) ordering settles ties.
    if k < dist.shape[0]:
        kth = np.partition(dist, k - 1)[k - 1]
        cand = np.flatnonzero(dist <= kth)
    else:
        cand = np.arange(dist.shape[0])
    order = np.argsort(dist[cand], kind="stable")
    return cand[order[:k]]


def knn_search(
    cloud: np.ndarray,
    centroid_indices: Sequence[int] | np.ndarray,
    k: int,
    include_self: bool = True,
) -> NeighborIndexTable:
    """Exact k nearest neighbors of each centroid, searched over all rows of ``cloud``.

    Rows of the result are sorted ascending by (squared distance, index).
    With ``include_self`` the centroid competes as its own neighbor at
    distance zero; otherwise its own row is excluded (duplicates of the
    centroid at other indices stay eligible).
    """
    check_cloud(cloud)
    n = cloud.shape[0]
    centroids = np.asarray(centroid_indices, dtype=np.int64).reshape(-1)
    if centroids.size == 0:
        raise ValueError("no centroids given")
    if centroids.min() < 0 or centroids.max() >= n:
        raise ValueError(f"centroid index outside [0, {n})")
    available = n if include_self else n - 1
    if not 1 <= k <= available:
        raise ValueError(f"k must be in [1, {available}], got {k}")

    out = np.empty((centroids.size, k), dtype=np.int64)
    block = max(1, _BLOCK_CELLS // n)
    for start in range(0, centroids.size, block):
        chunk = centroids[start : start + block]
        dist = squared_distances(cloud, cloud[chunk])
        if not include_self:
            dist[np.arange(chunk.size), chunk] = np.inf
        for r in range(chunk.size):
            out[start + r] = _select_k(dist[r], k)
    return NeighborIndexTable(out, centroids.copy())

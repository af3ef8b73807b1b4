"""Deterministic synthetic point clouds for runs without a dataset."""
from __future__ import annotations

import numpy as np

DISTRIBUTIONS = ("uniform-cube", "gaussian-clusters")


def gaussian_clusters(
    n: int, seed: int, n_clusters: int = 4, spread: float = 0.02
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Isotropic blobs around centers drawn in the unit cube.

    Returns ``(cloud, centers, labels)``; point ``i`` was drawn around
    ``centers[labels[i]]``. Labels cycle so every cluster gets points.
    """
    if n < 1:
        raise ValueError(f"need at least one point, got n={n}")
    if n_clusters < 1:
        raise ValueError(f"need at least one cluster, got {n_clusters}")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.1, 0.9, size=(n_clusters, 3))
    labels = np.arange(n) % n_clusters
    rng.shuffle(labels)
    cloud = centers[labels] + rng.normal(scale=spread, size=(n, 3))
    return cloud.astype(np.float32), centers.astype(np.float32), labels


def synth_cloud(n: int, seed: int = 42, distribution: str = "uniform-cube") -> np.ndarray:
    if n < 1:
        raise ValueError(f"need at least one point, got n={n}")
    if distribution == "uniform-cube":
        return np.random.default_rng(seed).random((n, 3)).astype(np.float32)
    if distribution == "gaussian-clusters":
        return gaussian_clusters(n, seed)[0]
    raise ValueError(f"unknown distribution {distribution!r}; choose from {DISTRIBUTIONS}")

"""Point-cloud module execution in two orders.

Baseline: search -> gather offsets -> MLP on every offset row -> column max.
Delayed: MLP on every input point (the point feature table, PFT) while the
search runs, then gather PFT rows, column max, and subtract the centroid's
own feature row. With an identity activation the two are equal; with a
rectifier the delayed order is an approximation.
"""
from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import (
    CorruptNitError,
    NeighborIndexTable,
    check_cloud,
    knn_search,
    sample_centroids,
)
from .tensor import Mlp, mlp_forward

# Rows pushed through the MLP per batch on the baseline path.
_BASELINE_BATCH_ROWS = 1 << 16


class ConfigError(ValueError):
    """A module or network configuration is inconsistent with its input."""


class SearchSpace(str, enum.Enum):
    COORDINATES = "coordinates"
    FEATURES = "features"


class Mode(str, enum.Enum):
    BASELINE = "baseline"
    DELAYED = "delayed"


@dataclass(frozen=True)
class ModuleConfig:
    n_out: int
    k: int
    mlp: Mlp
    search_space: SearchSpace = SearchSpace.COORDINATES
    seed: int = 42
    include_self: bool = True

    def __post_init__(self):
        object.__setattr__(self, "search_space", SearchSpace(self.search_space))
        if self.k < 1 or self.n_out < 1:
            raise ConfigError(f"k and n_out must be >= 1 (k={self.k}, n_out={self.n_out})")

    @property
    def m_in(self) -> int:
        return self.mlp.in_width

    @property
    def m_out(self) -> int:
        return self.mlp.out_width

    def validate(self, n_in: int, m_in: int) -> None:
        if m_in != self.m_in:
            raise ConfigError(f"MLP takes {self.m_in} features, module input has {m_in}")
        if self.n_out > n_in:
            raise ConfigError(f"n_out={self.n_out} exceeds the {n_in} input points")
        available = n_in if self.include_self else n_in - 1
        if self.k > available:
            raise ConfigError(f"k={self.k} exceeds the {available} candidate neighbors")


@dataclass(frozen=True)
class NetworkConfig:
    modules: tuple[ModuleConfig, ...]

    def __post_init__(self):
        mods = tuple(self.modules)
        if not mods:
            raise ConfigError("a network needs at least one module")
        for i, (prev, cur) in enumerate(zip(mods, mods[1:]), start=1):
            if cur.m_in != prev.m_out:
                raise ConfigError(
                    f"module {i} takes {cur.m_in} features but module {i - 1} emits {prev.m_out}"
                )
        object.__setattr__(self, "modules", mods)


@dataclass
class ModuleResult:
    """Everything one module produced; ``pft`` is ``None`` on the baseline path."""

    output: np.ndarray
    nit: NeighborIndexTable
    coords: np.ndarray
    pft: np.ndarray | None = None


def worker_threads() -> int:
    """Worker cap from ``MESOKIT_THREADS`` (0 or unset means automatic)."""
    raw = os.environ.get("MESOKIT_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"MESOKIT_THREADS must be an integer, got {raw!r}") from exc
    if n < 0:
        raise ConfigError("MESOKIT_THREADS must be >= 0")
    return n if n else min(2, os.cpu_count() or 1)


def _search(cloud, coords, cfg: ModuleConfig, centroids) -> NeighborIndexTable:
    space = coords if cfg.search_space is SearchSpace.COORDINATES else cloud
    if centroids is None:
        centroids = sample_centroids(cloud, cfg.n_out, cfg.seed)
    elif len(centroids) != cfg.n_out:
        raise ConfigError(f"{len(centroids)} explicit centroids for n_out={cfg.n_out}")
    return knn_search(space, centroids, cfg.k, include_self=cfg.include_self)


def _prepare(cloud, cfg, coords):
    check_cloud(cloud)
    cfg.validate(cloud.shape[0], cloud.shape[1])
    if coords is None:
        coords = cloud
    elif coords.shape[0] != cloud.shape[0]:
        raise ConfigError(f"{coords.shape[0]} coordinate rows for {cloud.shape[0]} points")
    return coords


def _gather(table: np.ndarray, nit: NeighborIndexTable) -> np.ndarray:
    nit.validate(table.shape[0])
    if nit.centroids is None:
        raise CorruptNitError("NIT carries no centroid indices")
    return table[nit.indices]


def aggregate_offsets(cloud: np.ndarray, nit: NeighborIndexTable) -> list[np.ndarray]:
    """One ``k x M`` neighbor feature matrix (neighbor minus centroid) per centroid."""
    offsets = _gather(cloud, nit) - cloud[nit.centroids][:, None, :]
    return list(offsets)


def aggregate_delayed(pft: np.ndarray, nit: NeighborIndexTable) -> np.ndarray:
    """Gather PFT rows, take the column max per neighborhood, subtract the centroid row."""
    return _gather(pft, nit).max(axis=1) - pft[nit.centroids]


def _baseline_features(cloud: np.ndarray, nit: NeighborIndexTable, mlp: Mlp) -> np.ndarray:
    n_out, k = nit.indices.shape
    out = np.empty((n_out, mlp.out_width), dtype=cloud.dtype)
    step = max(1, _BASELINE_BATCH_ROWS // k)
    for s in range(0, n_out, step):
        sub = NeighborIndexTable(nit.indices[s : s + step], nit.centroids[s : s + step])
        nfm = _gather(cloud, sub) - cloud[sub.centroids][:, None, :]
        # All NFMs share the MLP, so they go through it as one stacked batch.
        feats = mlp_forward(nfm.reshape(-1, cloud.shape[1]), mlp)
        out[s : s + step] = feats.reshape(-1, k, mlp.out_width).max(axis=1)
    return out


def run_module_baseline_full(
    cloud: np.ndarray,
    cfg: ModuleConfig,
    coords: np.ndarray | None = None,
    centroids: Sequence[int] | None = None,
) -> ModuleResult:
    coords = _prepare(cloud, cfg, coords)
    nit = _search(cloud, coords, cfg, centroids)
    out = _baseline_features(cloud, nit, cfg.mlp)
    return ModuleResult(out, nit, coords[nit.centroids])


def run_module_baseline(
    cloud: np.ndarray,
    cfg: ModuleConfig,
    coords: np.ndarray | None = None,
    centroids: Sequence[int] | None = None,
) -> np.ndarray:
    """Aggregate-then-compute. Output row ``c`` belongs to the ``c``-th sampled centroid.

    ``coords`` are the 3-D positions used for coordinate-space search; they
    default to ``cloud`` itself. ``centroids`` overrides random sampling.
    """
    return run_module_baseline_full(cloud, cfg, coords, centroids).output


def run_module_delayed_full(
    cloud: np.ndarray,
    cfg: ModuleConfig,
    coords: np.ndarray | None = None,
    centroids: Sequence[int] | None = None,
    threads: int | None = None,
) -> ModuleResult:
    coords = _prepare(cloud, cfg, coords)
    threads = worker_threads() if threads is None else threads
    if threads > 1:
        # Search and feature computation read only the immutable input.
        with ThreadPoolExecutor(max_workers=2) as pool:
            nit_job = pool.submit(_search, cloud, coords, cfg, centroids)
            pft_job = pool.submit(mlp_forward, cloud, cfg.mlp)
            nit, pft = nit_job.result(), pft_job.result()
    else:
        nit = _search(cloud, coords, cfg, centroids)
        pft = mlp_forward(cloud, cfg.mlp)
    out = aggregate_delayed(pft, nit)
    return ModuleResult(out, nit, coords[nit.centroids], pft)


def run_module_delayed(
    cloud: np.ndarray,
    cfg: ModuleConfig,
    coords: np.ndarray | None = None,
    centroids: Sequence[int] | None = None,
    threads: int | None = None,
) -> tuple[np.ndarray, np.ndarray, NeighborIndexTable]:
    """Compute-then-aggregate. Returns ``(output, pft, nit)``."""
    res = run_module_delayed_full(cloud, cfg, coords, centroids, threads)
    return res.output, res.pft, res.nit


def run_network_trace(
    cloud: np.ndarray,
    net: NetworkConfig,
    mode: Mode | str,
    coords: np.ndarray | None = None,
) -> list[ModuleResult]:
    """Run every module in order and keep each one's intermediate results."""
    mode = Mode(mode)
    check_cloud(cloud)
    if net.modules[0].m_in != cloud.shape[1]:
        raise ConfigError(
            f"first module takes {net.modules[0].m_in} features, cloud has {cloud.shape[1]}"
        )
    run = run_module_baseline_full if mode is Mode.BASELINE else run_module_delayed_full
    results = []
    x, pos = cloud, cloud if coords is None else coords
    for cfg in net.modules:
        res = run(x, cfg, pos)
        results.append(res)
        # Coordinate-space search keeps using the centroids' original positions.
        x, pos = res.output, res.coords
    return results


def run_network(
    cloud: np.ndarray,
    net: NetworkConfig,
    mode: Mode | str,
    coords: np.ndarray | None = None,
) -> np.ndarray:
    return run_network_trace(cloud, net, mode, coords)[-1].output


@dataclass(frozen=True)
class DivergenceReport:
    """Baseline vs delayed output differences.

    Relative figures divide by ``scale``: the largest magnitude among the
    baseline outputs and the PFT entries, i.e. the size of the terms whose
    rounding the comparison sees.
    """

    max_abs_diff: float
    mean_abs_diff: float
    max_rel_diff: float
    mean_rel_diff: float
    scale: float
    shape: tuple[int, int] = field(default=(0, 0))

    def to_dict(self) -> dict:
        return {
            "max_abs_diff": self.max_abs_diff,
            "mean_abs_diff": self.mean_abs_diff,
            "max_rel_diff": self.max_rel_diff,
            "mean_rel_diff": self.mean_rel_diff,
            "scale": self.scale,
            "shape": list(self.shape),
        }


def compare_outputs(baseline: np.ndarray, delayed: np.ndarray, feature_scale: float = 0.0) -> DivergenceReport:
    if baseline.shape != delayed.shape:
        raise ConfigError(f"output shapes differ: {baseline.shape} vs {delayed.shape}")
    diff = np.abs(baseline.astype(np.float64) - delayed.astype(np.float64))
    scale = max(float(np.abs(baseline).max(initial=0.0)), float(feature_scale))
    denom = scale if scale > 0 else 1.0
    max_abs = float(diff.max(initial=0.0))
    mean_abs = float(diff.mean()) if diff.size else 0.0
    return DivergenceReport(
        max_abs_diff=max_abs,
        mean_abs_diff=mean_abs,
        max_rel_diff=max_abs / denom,
        mean_rel_diff=mean_abs / denom,
        scale=scale,
        shape=tuple(baseline.shape),
    )


def divergence_report(
    cloud: np.ndarray,
    cfg: ModuleConfig | NetworkConfig,
    coords: np.ndarray | None = None,
) -> DivergenceReport:
    """Run both orders over the same input and measure how far they drift apart."""
    net = cfg if isinstance(cfg, NetworkConfig) else NetworkConfig((cfg,))
    base = run_network_trace(cloud, net, Mode.BASELINE, coords)
    dl = run_network_trace(cloud, net, Mode.DELAYED, coords)
    pft_scale = max(float(np.abs(r.pft).max(initial=0.0)) for r in dl)
    return compare_outputs(base[-1].output, dl[-1].output, pft_scale)

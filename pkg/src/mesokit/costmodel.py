"""Closed-form MAC, footprint and critical-path estimates for one module.

All byte counts assume 4-byte words. MACs count multiply-accumulates in
the MLP only; max comparisons and subtractions are free.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .pipeline import Mode
from .tensor import WORD_BYTES


@dataclass(frozen=True)
class ModuleShape:
    """The shape-only view of a module the cost model needs."""

    n_out: int
    k: int
    widths: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) < 2:
            raise ValueError("widths need an input and at least one layer output")

    @classmethod
    def of(cls, cfg) -> "ModuleShape":
        if isinstance(cfg, ModuleShape):
            return cfg
        return cls(cfg.n_out, cfg.k, tuple(cfg.mlp.widths))


@dataclass(frozen=True)
class CostReport:
    mode: Mode
    n_in: int
    macs_per_layer: tuple[int, ...]
    activation_bytes_per_layer: tuple[int, ...]
    aggregation_working_set_bytes: int
    nit_bytes: int
    pft_bytes: int

    @property
    def macs_total(self) -> int:
        return sum(self.macs_per_layer)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        d["macs_per_layer"] = list(self.macs_per_layer)
        d["activation_bytes_per_layer"] = list(self.activation_bytes_per_layer)
        d["macs_total"] = self.macs_total
        return d


def mlp_rows(shape: ModuleShape, n_in: int, mode: Mode | str) -> int:
    """Rows each MLP layer processes: every offset row, or every input point."""
    return shape.n_out * shape.k if Mode(mode) is Mode.BASELINE else n_in


def count_macs(cfg, n_in: int, mode: Mode | str) -> list[int]:
    shape = ModuleShape.of(cfg)
    rows = mlp_rows(shape, n_in, mode)
    return [rows * a * b for a, b in zip(shape.widths, shape.widths[1:])]


def activation_footprint(cfg, n_in: int, mode: Mode | str) -> dict[str, object]:
    shape = ModuleShape.of(cfg)
    mode = Mode(mode)
    rows = mlp_rows(shape, n_in, mode)
    m_in, m_out = shape.widths[0], shape.widths[-1]
    delayed = mode is Mode.DELAYED
    return {
        "activation_bytes_per_layer": [rows * w * WORD_BYTES for w in shape.widths[1:]],
        # Aggregation gathers from the input points, or from the PFT.
        "aggregation_working_set_bytes": n_in * (m_out if delayed else m_in) * WORD_BYTES,
        "nit_bytes": shape.n_out * shape.k * WORD_BYTES,
        "pft_bytes": n_in * m_out * WORD_BYTES if delayed else 0,
    }


def module_cost(cfg, n_in: int, mode: Mode | str) -> CostReport:
    mode = Mode(mode)
    fp = activation_footprint(cfg, n_in, mode)
    return CostReport(
        mode=mode,
        n_in=n_in,
        macs_per_layer=tuple(count_macs(cfg, n_in, mode)),
        activation_bytes_per_layer=tuple(fp["activation_bytes_per_layer"]),
        aggregation_working_set_bytes=fp["aggregation_working_set_bytes"],
        nit_bytes=fp["nit_bytes"],
        pft_bytes=fp["pft_bytes"],
    )


def mac_ratio(cfg, n_in: int) -> Fraction:
    """Delayed over baseline MACs, as an exact rational."""
    base = sum(count_macs(cfg, n_in, Mode.BASELINE))
    return Fraction(sum(count_macs(cfg, n_in, Mode.DELAYED)), base)


def network_cost(cfgs: Sequence, n_in: int, mode: Mode | str) -> list[CostReport]:
    """Per-module reports; each module's input count is the previous ``n_out``."""
    reports = []
    for cfg in cfgs:
        rep = module_cost(cfg, n_in, mode)
        reports.append(rep)
        n_in = ModuleShape.of(cfg).n_out
    return reports


def critical_path(stage_costs: Mapping[str, float], mode: Mode | str) -> float:
    """Latency of one module from its search (n), aggregation (a) and MLP (f) times.

    Baseline runs the three back to back; delayed overlaps search with the
    MLP and aggregates afterwards.
    """
    try:
        n, a, f = (float(stage_costs[key]) for key in ("n", "a", "f"))
    except KeyError as exc:
        raise ValueError(f"missing stage cost {exc.args[0]!r}") from None
    for name, v in (("n", n), ("a", a), ("f", f)):
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"stage cost {name}={v} must be finite and nonnegative")
    if Mode(mode) is Mode.BASELINE:
        return n + a + f
    return max(n, f) + a

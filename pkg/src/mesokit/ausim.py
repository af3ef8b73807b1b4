"""Cycle-level model of the aggregation unit.

The unit walks the neighbor index table (NIT) one entry at a time. For each
entry it reads the K neighbor rows of the point feature table (PFT) from a
B-bank buffer, folds them into a running column max, reads the centroid's
row, and subtracts. Rows are interleaved across banks by their low bits;
neighbors that collide on a bank are served in later rounds. When the PFT
does not fit the buffer it is split by columns and the NIT is replayed once
per column partition.

Cycle accounting, per partition of width P and per NIT entry with R rounds:

* neighbor reads: ``R * P`` cycles (each round streams P words per bank),
* centroid read: ``P`` cycles (a model assumption; the subtraction drains
  for free alongside it),
* NIT refills from DRAM are hidden behind the double buffer.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .formats import nit_file_bytes
from .geometry import CorruptNitError, NeighborIndexTable


class CapacityError(ValueError):
    """The PFT buffer cannot hold even one column of the table."""


@dataclass(frozen=True)
class AuConfig:
    banks: int = 32
    pft_buffer_bytes: int = 64 * 1024
    nit_entries_per_buffer: int = 128
    index_bits: int = 12
    word_bytes: int = 4

    def __post_init__(self):
        if self.banks < 1 or self.banks & (self.banks - 1):
            raise ValueError(f"banks must be a positive power of two, got {self.banks}")
        if self.pft_buffer_bytes < 1 or self.nit_entries_per_buffer < 1:
            raise ValueError("buffer sizes must be positive")
        if self.word_bytes < 1 or self.index_bits < 1:
            raise ValueError("word_bytes and index_bits must be positive")

    def partition_cols(self, n_in: int) -> int:
        """Widest column slab of an ``n_in``-row PFT that fits the buffer."""
        cols = self.pft_buffer_bytes // (n_in * self.word_bytes)
        if cols < 1:
            raise CapacityError(
                f"one PFT column of {n_in} rows needs {n_in * self.word_bytes} bytes, "
                f"buffer holds {self.pft_buffer_bytes}"
            )
        return cols

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AuStats:
    cycles: int = 0
    neighbor_read_cycles: int = 0
    centroid_read_cycles: int = 0
    rounds_total: int = 0
    pft_reads: int = 0
    conflict_service_reads: int = 0
    nit_entry_reads: int = 0
    nit_buffer_refills: int = 0
    partitions: int = 0
    dram_nit_bytes: int = 0

    @property
    def conflict_fraction(self) -> float:
        return self.conflict_service_reads / self.pft_reads if self.pft_reads else 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["conflict_fraction"] = self.conflict_fraction
        return d


def partition_pft(pft_dims: tuple[int, int], cfg: AuConfig) -> list[tuple[int, int]]:
    """Split ``m_out`` columns into maximal contiguous ``[start, stop)`` slabs."""
    n_in, m_out = pft_dims
    width = cfg.partition_cols(n_in)
    return [(c, min(c + width, m_out)) for c in range(0, m_out, width)]


def bank_of(row_index: int, cfg: AuConfig) -> int:
    return row_index & (cfg.banks - 1)


def schedule_rounds(neighbor_indices: Sequence[int], cfg: AuConfig) -> list[list[int]]:
    """Group row reads into bank-disjoint rounds.

    Each round scans the still-pending indices in order and issues every one
    whose bank is not yet taken in that round.
    """
    pending = [int(i) for i in neighbor_indices]
    rounds = []
    while pending:
        taken: set[int] = set()
        issued, deferred = [], []
        for idx in pending:
            bank = bank_of(idx, cfg)
            if bank in taken:
                deferred.append(idx)
            else:
                taken.add(bank)
                issued.append(idx)
        rounds.append(issued)
        pending = deferred
    return rounds


def _check_nit(nit: NeighborIndexTable, n_in: int) -> None:
    try:
        nit.validate(n_in)
    except CorruptNitError as exc:
        raise CorruptNitError(f"NIT does not fit a {n_in}-row PFT: {exc}") from None


def simulate(nit: NeighborIndexTable, pft_dims: tuple[int, int], cfg: AuConfig | None = None) -> AuStats:
    cfg = cfg or AuConfig()
    n_in, _ = pft_dims
    _check_nit(nit, n_in)
    plan = partition_pft(pft_dims, cfg)
    k = nit.k

    # The schedule depends only on the indices, so it is shared by all partitions.
    per_entry = []
    for row in nit.indices:
        rounds = schedule_rounds(row, cfg)
        per_entry.append((len(rounds), len(rounds[0])))

    stats = AuStats(partitions=len(plan))
    for start, stop in plan:
        width = stop - start
        for n_rounds, first_round in per_entry:
            stats.neighbor_read_cycles += n_rounds * width
            stats.centroid_read_cycles += width
            stats.rounds_total += n_rounds
            stats.pft_reads += (k + 1) * width
            stats.conflict_service_reads += (k - first_round) * width
        stats.nit_entry_reads += nit.n_out
        stats.nit_buffer_refills += math.ceil(nit.n_out / cfg.nit_entries_per_buffer)
    stats.cycles = stats.neighbor_read_cycles + stats.centroid_read_cycles
    stats.dram_nit_bytes = nit_file_bytes(nit.n_out) * len(plan)
    return stats


def functional_aggregate_via_sim(
    nit: NeighborIndexTable,
    pft: np.ndarray,
    cfg: AuConfig | None = None,
    bank_order_seed: int | None = None,
) -> np.ndarray:
    """Produce the aggregation output by replaying the unit's dataflow.

    Each partition is loaded on its own, every round's bank words are folded
    into the top register with max, and the centroid row is subtracted. With
    ``bank_order_seed`` the words inside a round reach the max unit in a
    shuffled order, which must not change the result.
    """
    cfg = cfg or AuConfig()
    if nit.centroids is None:
        raise CorruptNitError("functional aggregation needs the centroid indices")
    _check_nit(nit, pft.shape[0])
    shuffle = np.random.default_rng(bank_order_seed) if bank_order_seed is not None else None
    schedules = [schedule_rounds(row, cfg) for row in nit.indices]

    slabs = []
    for start, stop in partition_pft(pft.shape, cfg):
        buffer = pft[:, start:stop]
        out = np.empty((nit.n_out, stop - start), dtype=pft.dtype)
        for e, rounds in enumerate(schedules):
            top = np.full(stop - start, -np.inf, dtype=pft.dtype)
            for issued in rounds:
                words = buffer[issued]
                if shuffle is not None:
                    words = words[shuffle.permutation(len(issued))]
                top = np.maximum(top, words.max(axis=0))
            bottom = buffer[nit.centroids[e]]
            out[e] = top - bottom
        slabs.append(out)
    # Column maxima are independent, so partition results simply concatenate.
    return np.concatenate(slabs, axis=1)

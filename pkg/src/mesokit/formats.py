"""On-disk formats: point clouds, neighbor index tables, network configs, reports.

Point cloud, text: one ``x y z`` triple per line, whitespace separated.
Blank lines are ignored.

Point cloud, binary (also used for PFT dumps)::

    b"PCF1" | u32 N | u32 M | N*M float32, row-major      (little-endian)

Neighbor index table, binary::

    b"NIT1" | u32 n_out | u32 k | n_out entries of 98 bytes

Each entry is a u16 valid count (== k) followed by 96 bytes holding 64
12-bit slots. Slot ``j`` occupies bits ``[12j, 12j + 12)`` of the 768-bit
little-endian integer formed by those bytes; slots past ``k`` are zero.
Centroid indices are not part of the format.
"""
from __future__ import annotations

import csv
import io
import json
import struct
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .geometry import NeighborIndexTable
from .pipeline import ConfigError, ModuleConfig, NetworkConfig, SearchSpace
from .tensor import Activation, Mlp

CLOUD_MAGIC = b"PCF1"
NIT_MAGIC = b"NIT1"
NIT_HEADER_BYTES = 12
NIT_SLOTS = 64
NIT_INDEX_BITS = 12
NIT_ENTRY_BYTES = 2 + NIT_SLOTS * NIT_INDEX_BITS // 8

DEFAULT_SEED = 42

_HEADER = struct.Struct("<4sII")


class ParseError(ValueError):
    """Input bytes or text do not follow the expected format."""


class NitCapacityError(ValueError):
    """The NIT does not fit the hardware entry layout."""


def nit_file_bytes(n_out: int) -> int:
    return NIT_HEADER_BYTES + NIT_ENTRY_BYTES * n_out


# -- point clouds -----------------------------------------------------------


def parse_cloud_text(text: str, source: str = "<text>") -> np.ndarray:
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != 3:
            raise ParseError(f"{source}:{lineno}: expected 3 values, got {len(fields)}")
        try:
            rows.append([float(v) for v in fields])
        except ValueError:
            raise ParseError(f"{source}:{lineno}: not a number in {line.strip()!r}") from None
    if not rows:
        raise ParseError(f"{source}: no points")
    cloud = np.array(rows, dtype=np.float32)
    if not np.isfinite(cloud).all():
        raise ParseError(f"{source}: non-finite coordinate")
    return cloud


def format_cloud_text(cloud: np.ndarray) -> str:
    # repr of the widened value is the shortest string that reads back exactly.
    return "".join(" ".join(repr(float(v)) for v in row) + "\n" for row in cloud)


def encode_cloud(cloud: np.ndarray) -> bytes:
    cloud = np.ascontiguousarray(cloud, dtype="<f4")
    if cloud.ndim != 2:
        raise ValueError(f"cloud must be 2-D, got {cloud.shape}")
    return _HEADER.pack(CLOUD_MAGIC, *cloud.shape) + cloud.tobytes()


def decode_cloud(data: bytes, source: str = "<bytes>") -> np.ndarray:
    if len(data) < _HEADER.size:
        raise ParseError(f"{source}: truncated header ({len(data)} bytes)")
    magic, n, m = _HEADER.unpack_from(data)
    if magic != CLOUD_MAGIC:
        raise ParseError(f"{source}: bad magic {magic!r}")
    if n < 1 or m < 1:
        raise ParseError(f"{source}: empty cloud ({n} x {m})")
    need = _HEADER.size + 4 * n * m
    if len(data) != need:
        raise ParseError(f"{source}: expected {need} bytes, file ends at offset {len(data)}")
    cloud = np.frombuffer(data, dtype="<f4", offset=_HEADER.size).reshape(n, m)
    cloud = cloud.astype(np.float32)
    if not np.isfinite(cloud).all():
        raise ParseError(f"{source}: non-finite value")
    return cloud


def ingest_cloud(path: str | Path) -> np.ndarray:
    """Load a cloud from a text or ``PCF1`` binary file (detected by magic)."""
    path = Path(path)
    data = path.read_bytes()
    if data[:4] == CLOUD_MAGIC:
        return decode_cloud(data, str(path))
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: neither PCF1 binary nor UTF-8 text (offset {exc.start})") from None
    return parse_cloud_text(text, str(path))


def write_cloud(cloud: np.ndarray, path: str | Path, binary: bool = True) -> None:
    path = Path(path)
    if binary:
        path.write_bytes(encode_cloud(cloud))
    else:
        path.write_text(format_cloud_text(cloud))


# -- neighbor index tables --------------------------------------------------


def encode_nit(nit: NeighborIndexTable) -> bytes:
    n_out, k = nit.indices.shape
    if k > NIT_SLOTS:
        raise NitCapacityError(f"k={k} exceeds the {NIT_SLOTS} index slots per entry")
    limit = 1 << NIT_INDEX_BITS
    if nit.indices.size and (nit.indices.min() < 0 or nit.indices.max() >= limit):
        raise NitCapacityError(f"neighbor indices must lie in [0, {limit})")
    slots = np.zeros((n_out, NIT_SLOTS), dtype=np.uint32)
    slots[:, :k] = nit.indices
    lo, hi = slots[:, 0::2], slots[:, 1::2]
    packed = np.stack([lo & 0xFF, (lo >> 8) | ((hi & 0xF) << 4), hi >> 4], axis=-1)
    body = np.empty((n_out, NIT_ENTRY_BYTES), dtype=np.uint8)
    body[:, 0] = k & 0xFF
    body[:, 1] = k >> 8
    body[:, 2:] = packed.reshape(n_out, -1).astype(np.uint8)
    return _HEADER.pack(NIT_MAGIC, n_out, k) + body.tobytes()


def decode_nit(data: bytes, source: str = "<bytes>") -> NeighborIndexTable:
    if len(data) < _HEADER.size:
        raise ParseError(f"{source}: truncated header ({len(data)} bytes)")
    magic, n_out, k = _HEADER.unpack_from(data)
    if magic != NIT_MAGIC:
        raise ParseError(f"{source}: bad magic {magic!r}")
    if not 1 <= k <= NIT_SLOTS or n_out < 1:
        raise ParseError(f"{source}: bad header (n_out={n_out}, k={k})")
    if len(data) != nit_file_bytes(n_out):
        raise ParseError(
            f"{source}: expected {nit_file_bytes(n_out)} bytes, file ends at offset {len(data)}"
        )
    body = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size).reshape(n_out, NIT_ENTRY_BYTES)
    counts = body[:, 0].astype(np.int64) | (body[:, 1].astype(np.int64) << 8)
    bad = np.flatnonzero(counts != k)
    if bad.size:
        e = int(bad[0])
        raise ParseError(
            f"{source}: entry {e} at offset {_HEADER.size + e * NIT_ENTRY_BYTES} "
            f"has count {counts[e]}, header says {k}"
        )
    triples = body[:, 2:].astype(np.int64).reshape(n_out, NIT_SLOTS // 2, 3)
    lo = triples[..., 0] | ((triples[..., 1] & 0xF) << 8)
    hi = (triples[..., 1] >> 4) | (triples[..., 2] << 4)
    slots = np.empty((n_out, NIT_SLOTS), dtype=np.int64)
    slots[:, 0::2], slots[:, 1::2] = lo, hi
    if slots[:, k:].any():
        raise ParseError(f"{source}: nonzero data in unused index slots")
    return NeighborIndexTable(slots[:, :k].copy())


def write_nit_binary(nit: NeighborIndexTable, path: str | Path) -> None:
    Path(path).write_bytes(encode_nit(nit))


def read_nit_binary(path: str | Path, centroids: Iterable[int] | None = None) -> NeighborIndexTable:
    """Read a NIT file; pass ``centroids`` to reattach the centroid indices."""
    nit = decode_nit(Path(path).read_bytes(), str(path))
    if centroids is None:
        return nit
    return NeighborIndexTable(nit.indices, np.asarray(list(centroids), dtype=np.int64))


# -- network configs --------------------------------------------------------

_MODULE_KEYS = {"n_out", "k", "widths", "activation", "search_space", "include_self", "seed", "weights_seed"}


def _need(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing {key!r}")
    return d[key]


def _int(v, where: str, minimum: int = 1) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ConfigError(f"{where}: expected an integer >= {minimum}, got {v!r}")
    return v


def network_from_dict(doc: Any, seed: int | None = None) -> NetworkConfig:
    """Build a network from its declarative description.

    ``{"seed": 42, "modules": [{"n_out": 512, "k": 32, "widths": [3, 64, 64, 128],
    "activation": "rectifier", "search_space": "coordinates"}, ...]}``

    Optional per-module keys: ``include_self`` (default true), ``seed``
    (centroid sampling; default network seed + module position) and
    ``weights_seed`` (random MLP weights; default the module seed). A
    ``seed`` argument replaces the document's network seed, which itself
    defaults to 42.
    """
    if not isinstance(doc, dict):
        raise ConfigError("network config must be a JSON object")
    if seed is None:
        seed = doc.get("seed", DEFAULT_SEED)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    mods = _need(doc, "modules", "network")
    if not isinstance(mods, list) or not mods:
        raise ConfigError("network: 'modules' must be a non-empty list")
    built = []
    for i, m in enumerate(mods):
        where = f"modules[{i}]"
        if not isinstance(m, dict):
            raise ConfigError(f"{where}: expected an object")
        unknown = set(m) - _MODULE_KEYS
        if unknown:
            raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
        widths = _need(m, "widths", where)
        if not isinstance(widths, list) or len(widths) < 2:
            raise ConfigError(f"{where}: 'widths' needs the input width and at least one layer")
        widths = [_int(w, f"{where}.widths") for w in widths]
        mod_seed = m.get("seed", seed + i)
        try:
            activation = Activation(m.get("activation", "rectifier"))
            space = SearchSpace(m.get("search_space", "coordinates"))
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
        built.append(
            ModuleConfig(
                n_out=_int(_need(m, "n_out", where), f"{where}.n_out"),
                k=_int(_need(m, "k", where), f"{where}.k"),
                mlp=Mlp.random(widths, activation, seed=m.get("weights_seed", mod_seed)),
                search_space=space,
                seed=mod_seed,
                include_self=bool(m.get("include_self", True)),
            )
        )
    return NetworkConfig(tuple(built))


def load_network(path: str | Path, seed: int | None = None) -> NetworkConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from None
    return network_from_dict(doc, seed)


# -- reports ----------------------------------------------------------------


def dumps_report(report: dict) -> str:
    """Canonical JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def loads_report(text: str) -> dict:
    return json.loads(text)


def rows_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()

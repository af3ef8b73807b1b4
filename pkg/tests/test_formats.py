import json

import numpy as np
import pytest

from mesokit.formats import (
    NIT_ENTRY_BYTES,
    NitCapacityError,
    ParseError,
    decode_cloud,
    decode_nit,
    dumps_report,
    encode_cloud,
    encode_nit,
    ingest_cloud,
    load_network,
    loads_report,
    network_from_dict,
    parse_cloud_text,
    read_nit_binary,
    write_cloud,
    write_nit_binary,
)
from mesokit.geometry import NeighborIndexTable
from mesokit.pipeline import ConfigError, SearchSpace
from mesokit.synth import gaussian_clusters, synth_cloud

from conftest import random_cloud


def pack_entry_oracle(indices):
    """Reference packing through one big little-endian integer."""
    acc = 0
    for j, v in enumerate(indices):
        acc |= v << (12 * j)
    return len(indices).to_bytes(2, "little") + acc.to_bytes(96, "little")


# -- clouds -------------------------------------------------------------------


def test_text_cloud(tmp_path):
    p = tmp_path / "c.xyz"
    p.write_text("0 0 0\n1 0 0\n")
    cloud = ingest_cloud(p)
    assert cloud.shape == (2, 3) and cloud.dtype == np.float32
    assert cloud.tolist() == [[0, 0, 0], [1, 0, 0]]


def test_text_cloud_errors(tmp_path):
    p = tmp_path / "empty.xyz"
    p.write_text("")
    with pytest.raises(ParseError):
        ingest_cloud(p)
    with pytest.raises(ParseError, match=":2:"):
        parse_cloud_text("0 0 0\n1 2\n")
    with pytest.raises(ParseError, match=":1:"):
        parse_cloud_text("a b c\n")
    with pytest.raises(ParseError):
        parse_cloud_text("inf 0 0\n")


def test_binary_cloud_roundtrip(rng, tmp_path):
    cloud = random_cloud(rng, 100)
    p = tmp_path / "c.pcf"
    write_cloud(cloud, p)
    back = ingest_cloud(p)
    assert back.tobytes() == cloud.tobytes()
    assert p.stat().st_size == 12 + 100 * 3 * 4


def test_text_and_binary_agree(rng, tmp_path):
    cloud = rng.standard_normal((50, 3)).astype(np.float32)
    write_cloud(cloud, tmp_path / "a.xyz", binary=False)
    write_cloud(cloud, tmp_path / "a.pcf")
    assert ingest_cloud(tmp_path / "a.xyz").tobytes() == ingest_cloud(tmp_path / "a.pcf").tobytes()


def test_binary_cloud_truncated(rng):
    data = encode_cloud(random_cloud(rng, 4))
    with pytest.raises(ParseError, match="offset"):
        decode_cloud(data[:-1])
    with pytest.raises(ParseError):
        decode_cloud(data[:8])
    with pytest.raises(ParseError):
        decode_cloud(b"XXXX" + data[4:])


# -- NIT ----------------------------------------------------------------------


def test_nit_entry_decodes_back():
    data = encode_nit(NeighborIndexTable([[5, 17]]))
    assert data[12:] == pack_entry_oracle([5, 17])
    assert decode_nit(data).indices.tolist() == [[5, 17]]


def test_nit_packing_matches_integer_oracle(rng):
    idx = rng.integers(0, 4096, (5, 64))
    data = encode_nit(NeighborIndexTable(idx))
    for e in range(5):
        entry = data[12 + e * NIT_ENTRY_BYTES : 12 + (e + 1) * NIT_ENTRY_BYTES]
        assert entry == pack_entry_oracle(idx[e].tolist())


def test_nit_partial_entry_bytes():
    data = encode_nit(NeighborIndexTable([[5, 17]]))
    want = bytes([2, 0, 0x05, 0x10, 0x01]) + bytes(93)
    assert data == b"NIT1" + (1).to_bytes(4, "little") + (2).to_bytes(4, "little") + want


@pytest.mark.parametrize("n_out,k", [(1, 1), (7, 33), (512, 32), (3, 64)])
def test_nit_roundtrip(rng, tmp_path, n_out, k):
    nit = NeighborIndexTable(rng.integers(0, 4096, (n_out, k)))
    p = tmp_path / "n.bin"
    write_nit_binary(nit, p)
    assert p.stat().st_size == 12 + 98 * n_out
    assert read_nit_binary(p) == nit
    assert encode_nit(read_nit_binary(p)) == p.read_bytes()


def test_nit_reattach_centroids(tmp_path):
    p = tmp_path / "n.bin"
    write_nit_binary(NeighborIndexTable([[1, 2], [3, 4]], [1, 3]), p)
    assert read_nit_binary(p, centroids=[1, 3]) == NeighborIndexTable([[1, 2], [3, 4]], [1, 3])


def test_nit_index_boundary():
    assert decode_nit(encode_nit(NeighborIndexTable([[4095, 0]]))).indices.tolist() == [[4095, 0]]
    with pytest.raises(NitCapacityError):
        encode_nit(NeighborIndexTable([[4096]]))


def test_nit_too_many_neighbors():
    with pytest.raises(NitCapacityError):
        encode_nit(NeighborIndexTable(np.zeros((1, 65), int)))


def test_nit_corrupt_files():
    good = encode_nit(NeighborIndexTable([[1, 2, 3]]))
    with pytest.raises(ParseError):
        decode_nit(good[:-1])
    with pytest.raises(ParseError):
        decode_nit(b"NIT2" + good[4:])
    bad_count = good[:12] + b"\x05\x00" + good[14:]
    with pytest.raises(ParseError, match="count"):
        decode_nit(bad_count)
    dirty_slot = good[:-1] + b"\x01"
    with pytest.raises(ParseError, match="unused"):
        decode_nit(dirty_slot)


# -- network configs and reports ------------------------------------------------


def test_network_from_dict_defaults():
    net = network_from_dict({"modules": [{"n_out": 8, "k": 4, "widths": [3, 16, 32]}]})
    (m,) = net.modules
    assert (m.n_out, m.k, m.mlp.widths, m.seed) == (8, 4, [3, 16, 32], 42)
    assert m.search_space is SearchSpace.COORDINATES and m.include_self


def test_network_seed_override():
    doc = {"seed": 1, "modules": [{"n_out": 8, "k": 4, "widths": [3, 4]}, {"n_out": 4, "k": 2, "widths": [4, 4]}]}
    assert [m.seed for m in network_from_dict(doc).modules] == [1, 2]
    assert [m.seed for m in network_from_dict(doc, seed=10).modules] == [10, 11]


@pytest.mark.parametrize(
    "doc",
    [
        [],
        {"modules": []},
        {"modules": [{"n_out": 8, "k": 4}]},
        {"modules": [{"n_out": 8, "k": 0, "widths": [3, 4]}]},
        {"modules": [{"n_out": 8, "k": 4, "widths": [3, 4], "activation": "tanh"}]},
        {"modules": [{"n_out": 8, "k": 4, "widths": [3, 4], "bias": True}]},
        {"modules": [{"n_out": 8, "k": 4, "widths": [3, 4]}, {"n_out": 8, "k": 4, "widths": [5, 4]}]},
    ],
)
def test_network_config_errors(doc):
    with pytest.raises(ConfigError):
        network_from_dict(doc)


def test_load_network_parse_error(tmp_path):
    p = tmp_path / "net.json"
    p.write_text("{not json")
    with pytest.raises(ParseError):
        load_network(p)


def test_shipped_configs_load():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    for p in sorted(root.glob("*.json")):
        assert load_network(p).modules


def test_report_roundtrip():
    report = {"b": [1, 2.5, 1e-7], "a": {"z": "x", "y": None}}
    text = dumps_report(report)
    assert loads_report(text) == report
    assert dumps_report(loads_report(text)) == text
    assert text.index('"a"') < text.index('"b"')


# -- synthetic clouds -----------------------------------------------------------


def test_synth_deterministic_uniform():
    a = synth_cloud(500, 3)
    assert a.tobytes() == synth_cloud(500, 3).tobytes()
    assert a.min() >= 0 and a.max() <= 1


def test_synth_errors():
    with pytest.raises(ValueError):
        synth_cloud(0)
    with pytest.raises(ValueError):
        synth_cloud(4, distribution="torus")


def test_gaussian_clusters_recoverable():
    cloud, centers, labels = gaussian_clusters(400, seed=42)
    sep = min(np.linalg.norm(a - b) for i, a in enumerate(centers) for b in centers[i + 1 :])
    assert sep > 0.2
    nearest = np.argmin(((cloud[:, None, :] - centers[None]) ** 2).sum(-1), axis=1)
    assert len(set(nearest.tolist())) == 4
    assert (nearest == labels).all()
    assert synth_cloud(400, 42, "gaussian-clusters").tobytes() == cloud.tobytes()

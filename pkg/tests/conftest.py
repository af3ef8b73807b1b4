import numpy as np
import pytest

from mesokit import Mlp, ModuleConfig

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_cloud(rng, n, m=3):
    return rng.random((n, m)).astype(np.float32)


def random_module(rng, n_in, m_in=3, activation="rectifier", max_k=64, max_out=None, max_width=64):
    k = int(rng.integers(1, min(max_k, n_in) + 1))
    n_out = int(rng.integers(1, (max_out or n_in) + 1))
    n_out = min(n_out, n_in)
    depth = int(rng.integers(1, 4))
    widths = [m_in] + [int(w) for w in rng.integers(2, max_width + 1, size=depth)]
    mlp = Mlp.random(widths, activation, seed=int(rng.integers(1 << 31)))
    return ModuleConfig(n_out, k, mlp, seed=int(rng.integers(1 << 31)))


def pointnet2_module1(activation="rectifier"):
    """First set-abstraction module: 1024 -> 512 points, K=32, 3 -> 64 -> 64 -> 128."""
    return ModuleConfig(512, 32, Mlp.random([3, 64, 64, 128], activation, seed=7))

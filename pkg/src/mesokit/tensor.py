"""Dense float32 matrices and the handful of kernels a point-cloud module needs.

Matrices are plain 2-D ``numpy.float32`` arrays in C (row-major) order. All
functions are pure: they never mutate their inputs.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

DTYPE = np.float32
WORD_BYTES = 4


class ShapeError(ValueError):
    """Operand shapes do not conform."""


class Activation(str, enum.Enum):
    IDENTITY = "identity"
    RECTIFIER = "rectifier"


def as_mat(x) -> np.ndarray:
    """Coerce ``x`` to a contiguous 2-D float32 matrix.

    Non-finite entries are rejected so downstream kernels can rely on
    finite-in/finite-out.
    """
    m = np.array(x, dtype=DTYPE, order="C", ndmin=2)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError("matrix contains NaN or Inf")
    return m


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with a fixed accumulation order.

    The inner dimension is walked left to right and partial sums are kept
    in float64, then rounded once to float32. BLAS is deliberately avoided
    because its blocking (and thread count) changes the summation order.
    """
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    acc = np.zeros((a.shape[0], b.shape[1]), dtype=np.float64)
    a64 = a.astype(np.float64)
    b64 = b.astype(np.float64)
    for k in range(a.shape[1]):
        acc += a64[:, k : k + 1] * b64[k : k + 1, :]
    return acc.astype(DTYPE)


def activate(x: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.IDENTITY:
        return x
    return np.maximum(x, DTYPE(0))


@dataclass(frozen=True)
class Mlp:
    """Shared bias-free MLP: ``y = act(... act(x @ W1) @ W2 ...)``."""

    layers: tuple[np.ndarray, ...]
    activation: Activation = Activation.RECTIFIER

    def __post_init__(self):
        if not self.layers:
            raise ShapeError("an MLP needs at least one layer")
        layers = tuple(as_mat(w) for w in self.layers)
        for prev, cur in zip(layers, layers[1:]):
            if cur.shape[0] != prev.shape[1]:
                raise ShapeError(
                    f"layer widths do not chain: {prev.shape} then {cur.shape}"
                )
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "activation", Activation(self.activation))

    @property
    def widths(self) -> list[int]:
        return [self.layers[0].shape[0]] + [w.shape[1] for w in self.layers]

    @property
    def in_width(self) -> int:
        return self.layers[0].shape[0]

    @property
    def out_width(self) -> int:
        return self.layers[-1].shape[1]

    @classmethod
    def random(
        cls,
        widths: Sequence[int],
        activation: Activation | str = Activation.RECTIFIER,
        seed: int = 0,
    ) -> "Mlp":
        """He-scaled Gaussian weights; stands in for trained weights."""
        if len(widths) < 2:
            raise ShapeError("need at least an input and an output width")
        rng = np.random.default_rng(seed)
        layers = tuple(
            (rng.standard_normal((m, n)) * np.sqrt(2.0 / m)).astype(DTYPE)
            for m, n in zip(widths, widths[1:])
        )
        return cls(layers, Activation(activation))


def mlp_forward(x: np.ndarray, mlp: Mlp) -> np.ndarray:
    """Apply ``mlp`` to every row of ``x``."""
    if x.ndim != 2 or x.shape[1] != mlp.in_width:
        raise ShapeError(
            f"MLP expects {mlp.in_width} input columns, got shape {x.shape}"
        )
    y = x
    for w in mlp.layers:
        y = activate(matmul(y, w), mlp.activation)
    return y


def reduce_max_rows(x: np.ndarray) -> np.ndarray:
    """Column-wise max, returned as a ``1 x cols`` matrix."""
    if x.ndim != 2 or x.shape[0] < 1:
        raise ShapeError(f"cannot reduce an empty matrix of shape {x.shape}")
    return x.max(axis=0, keepdims=True)


def sub_rowwise(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Subtract the ``1 x cols`` row ``v`` from every row of ``x``."""
    if x.ndim != 2 or v.shape != (1, x.shape[1]):
        raise ShapeError(f"cannot subtract {v.shape} row from matrix {x.shape}")
    return x - v

"""Dense float64 matrix primitives and deterministic random generation.

Matrices are plain 2-D ``numpy.float64`` arrays in row-major layout. All
operations here are pure functions that validate shapes up front; finite
inputs yield finite outputs. Randomness comes from numpy's PCG64 bit
generator, which emits the same stream for the same seed on every platform,
so anything seeded through :func:`make_rng` is reproducible bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, ShapeError

__all__ = [
    "make_rng",
    "spawn_rng",
    "as_matrix",
    "matmul",
    "softmax_columns",
    "elementwise_tanh",
    "xavier_init",
]


def make_rng(seed: int) -> np.random.Generator:
    """Return a deterministic PCG64 generator for ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def spawn_rng(seed: int, index: int) -> np.random.Generator:
    """Independent child generator for item ``index`` of a run seeded with ``seed``.

    Children with distinct indices have statistically independent streams, and
    the mapping (seed, index) -> stream is fixed, so per-item work can run in
    any order (or in parallel) without changing results.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(index,))))


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce ``x`` to a 2-D float64 array, raising ShapeError otherwise."""
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got {m.ndim}-D with shape {m.shape}")
    return m


def matmul(a, b) -> np.ndarray:
    """Matrix product ``a @ b`` with explicit shape checking."""
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}: "
            f"inner dimensions {a.shape[1]} and {b.shape[0]} differ"
        )
    out = a @ b
    if not np.isfinite(out).all():
        raise DomainError("matrix product produced non-finite values")
    return out


def softmax_columns(z, temperature: float = 1.0) -> np.ndarray:
    """Column-wise softmax of ``z / temperature``.

    Each column of the result is a probability vector (sums to 1). The
    per-column maximum is subtracted before exponentiation, so arbitrarily
    large logits cannot overflow and adding a constant to a column leaves
    that column's output bit-identical.
    """
    z = as_matrix(z, "softmax input")
    if temperature <= 0.0:
        raise DomainError(f"softmax temperature must be positive, got {temperature}")
    shifted = (z - z.max(axis=0, keepdims=True)) / temperature
    e = np.exp(shifted)
    return e / e.sum(axis=0, keepdims=True)


def elementwise_tanh(m) -> np.ndarray:
    """Entrywise hyperbolic tangent."""
    return np.tanh(as_matrix(m, "tanh input"))


def xavier_init(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Glorot-uniform matrix: i.i.d. uniform on [-b, b] with b = sqrt(6 / (rows + cols))."""
    if rows < 1 or cols < 1:
        raise ShapeError(f"xavier_init needs positive dimensions, got {rows}x{cols}")
    bound = math.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=(rows, cols))

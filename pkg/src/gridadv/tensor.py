"""Numeric substrate: float64 arrays, elementary kernels, seeded randomness.

Tensors are plain numpy float64 arrays in row-major (C) order. The PRNG is
PCG64 (numpy's default bit generator), fixed by name so that identical seeds
reproduce identical streams across runs and platforms. Child sources derive
their seed by hashing (parent seed, label) with SHA-256, so independent
streams can be split off deterministically.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import ShapeError


def as_tensor(values) -> np.ndarray:
    """Coerce to a C-contiguous float64 array."""
    return np.ascontiguousarray(values, dtype=np.float64)


class RandomSource:
    """Seedable random stream. Algorithm: PCG64, 64-bit seed.

    A source is single-owner; to use randomness from several places, split
    children with distinct labels instead of sharing one stream.
    """

    ALGORITHM = "pcg64"

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def child(self, label: str) -> "RandomSource":
        """Independent source with seed = SHA-256(parent seed, label) mod 2^64."""
        digest = hashlib.sha256(f"{self.seed}:{label}".encode()).digest()
        return RandomSource(int.from_bytes(digest[:8], "big"))

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, loc: float = 0.0, scale: float = 1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def integers(self, low: int, high: int) -> int:
        """One integer in [low, high)."""
        return int(self._gen.integers(low, high))

    def choice_sign(self, size=None):
        """Random +/-1 values."""
        return np.where(self._gen.uniform(size=size) < 0.5, -1.0, 1.0)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with 64-bit accumulation."""
    a = as_tensor(a)
    b = as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} x {b.shape}")
    return a @ b


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(as_tensor(x), 0.0)


def relu_backward(x: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """Pass upstream gradient where x > 0, zero where x <= 0."""
    x = as_tensor(x)
    upstream = as_tensor(upstream)
    if x.shape != upstream.shape:
        raise ShapeError(
            f"relu_backward: x shape {x.shape} != upstream shape {upstream.shape}"
        )
    return np.where(x > 0.0, upstream, 0.0)


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-subtraction for overflow stability."""
    logits = as_tensor(logits)
    if logits.ndim != 2:
        raise ShapeError(f"softmax_rows expects a 2-D array, got shape {logits.shape}")
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def top_k_indices(v: np.ndarray, k: int, signed: bool = False) -> list[int]:
    """Indices of the k largest-|v| entries, ties to the lowest index, sorted.

    Absolute-value ranking maximizes first-order loss increase per selected
    entry; pass signed=True to rank by raw value instead.
    """
    v = as_tensor(v).ravel()
    n = v.size
    if k < 0 or k > n:
        raise ShapeError(f"top_k_indices: k={k} out of bounds for length {n}")
    if k == 0:
        return []
    key = v if signed else np.abs(v)
    # lexsort: last key is primary. Stable tie-break on ascending index.
    order = np.lexsort((np.arange(n), -key))
    return sorted(int(i) for i in order[:k])


def seeded_shuffle(n: int, rng: RandomSource) -> np.ndarray:
    """Fisher-Yates permutation of 0..n-1 driven solely by rng."""
    perm = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = rng.integers(0, i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm

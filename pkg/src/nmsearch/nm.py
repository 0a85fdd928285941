"""N:M group masking over weight matrices.

A sparsity level N:M keeps exactly N weights in every aligned group of M
consecutive weights. Groups are taken along the input (reduction) dimension
of a weight matrix, row-major within each output row, which is the order an
N:M matmul accelerator consumes weights. Masks are recomputed from the
current weights on every call; nothing is cached.

Tie handling: the mask keeps the N highest-scoring positions of each group,
and among equal scores the lowest index wins. This makes every group an
exactly-N-hot vector, which is what the hardware format requires.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InvalidInputError, ShapeError

SALIENCY_METRICS = ("magnitude",)


@dataclass(frozen=True, order=True)
class SparsityLevel:
    """An N:M sparsity mode: keep ``n`` of every ``m`` consecutive weights."""

    n: int
    m: int

    def __post_init__(self):
        if not (isinstance(self.n, int) and isinstance(self.m, int)):
            raise ConfigurationError(f"N and M must be integers, got {self.n!r}:{self.m!r}")
        if not (1 <= self.n <= self.m):
            raise ConfigurationError(f"need 1 <= N <= M, got {self.n}:{self.m}")
        if self.m & (self.m - 1) != 0:
            raise ConfigurationError(f"M must be a power of two, got M={self.m}")

    @property
    def density(self) -> float:
        return self.n / self.m

    @property
    def zero_fraction(self) -> float:
        return 1.0 - self.n / self.m

    @property
    def is_dense(self) -> bool:
        return self.n == self.m

    @property
    def index_bits(self) -> int:
        """Bits needed to address a position within one group."""
        return self.m.bit_length() - 1

    @classmethod
    def parse(cls, text: str) -> "SparsityLevel":
        parts = text.strip().split(":")
        if len(parts) != 2:
            raise ConfigurationError(f"expected 'N:M', got {text!r}")
        try:
            n, m = int(parts[0]), int(parts[1])
        except ValueError:
            raise ConfigurationError(f"expected 'N:M' with integers, got {text!r}") from None
        return cls(n, m)

    def __str__(self) -> str:
        return f"{self.n}:{self.m}"


def saliency(weights: np.ndarray, metric: str = "magnitude") -> np.ndarray:
    """Per-weight importance scores; ``magnitude`` returns |w| elementwise.

    ``metric`` is an extension point; magnitude is the only shipped scorer.
    """
    if metric not in SALIENCY_METRICS:
        raise ConfigurationError(f"unknown saliency metric {metric!r}; supported: {SALIENCY_METRICS}")
    arr = np.asarray(weights, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("saliency requires finite weights")
    return np.abs(arr)


def group_mask(scores: np.ndarray, level: SparsityLevel) -> np.ndarray:
    """Exactly-N-hot mask for one group of M scores.

    Keeps the N largest scores; equal scores resolve to the lowest index.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1 or scores.shape[0] != level.m:
        raise ShapeError(f"expected {level.m} scores for level {level}, got shape {scores.shape}")
    mask = np.zeros(level.m, dtype=np.uint8)
    # Stable sort on negated scores: ties keep ascending index order.
    keep = np.argsort(-scores, kind="stable")[: level.n]
    mask[keep] = 1
    return mask


def layer_mask(weights: np.ndarray, level: SparsityLevel, metric: str = "magnitude") -> np.ndarray:
    """N:M mask for a whole (rows, cols) weight matrix.

    Groups run along the last axis; cols must divide evenly into M-groups.
    """
    arr = np.asarray(weights)
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2-d weight matrix, got shape {arr.shape}")
    rows, cols = arr.shape
    if cols % level.m != 0:
        raise ConfigurationError(
            f"reduction axis of length {cols} is not divisible by M={level.m}; "
            "layer is ineligible for this level"
        )
    scores = saliency(arr, metric).reshape(rows, cols // level.m, level.m)
    order = np.argsort(-scores, axis=-1, kind="stable")
    mask = np.zeros_like(scores, dtype=np.uint8)
    np.put_along_axis(mask, order[..., : level.n], 1, axis=-1)
    return mask.reshape(rows, cols)


def apply_mask(weights: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Elementwise product of weights and a binary mask."""
    arr = np.asarray(weights)
    m = np.asarray(mask)
    if arr.shape != m.shape:
        raise ShapeError(f"weights {arr.shape} vs mask {m.shape}")
    return arr * m.astype(arr.dtype)


def is_subset(mask_sparser: np.ndarray, mask_denser: np.ndarray) -> bool:
    """True iff every kept position of the sparser mask is kept in the denser one."""
    a = np.asarray(mask_sparser)
    b = np.asarray(mask_denser)
    if a.shape != b.shape:
        raise ShapeError(f"mask shapes differ: {a.shape} vs {b.shape}")
    return bool(np.all((a == 0) | (b != 0)))

"""Accelerator-style sparse storage for N:M masked matrices.

The format mirrors how mixed-sparsity matmul hardware stores a compressed
weight matrix: the retained values in group order, plus one position index
per retained value. Each index addresses a slot inside its M-group, so it
fits in exactly log2(M) bits.

Binary blob layout (all little-endian):

    u32 rows | u32 cols | u32 N | u32 M
    float32 values, num_groups * N of them, group order
    packed indices, log2(M) bits each, LSB-first within each byte

A 4:4 (dense) encoding still stores every index; a 1:1 level has zero-width
indices and an empty index section.
"""

from __future__ import annotations

from dataclasses import dataclass
import struct

import numpy as np

from .errors import DecodeError, ShapeError
from .nm import SparsityLevel, apply_mask, layer_mask

_HEADER = struct.Struct("<IIII")


def pack_bits(ints: np.ndarray, width: int) -> bytes:
    """Pack unsigned integers of ``width`` bits into bytes, LSB-first."""
    if width == 0:
        return b""
    ints = np.asarray(ints, dtype=np.uint64)
    out = bytearray((len(ints) * width + 7) // 8)
    pos = 0
    for value in ints:
        v = int(value)
        for b in range(width):
            if (v >> b) & 1:
                out[(pos + b) >> 3] |= 1 << ((pos + b) & 7)
        pos += width
    return bytes(out)


def unpack_bits(data: bytes, width: int, count: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`; reads ``count`` integers."""
    if width == 0:
        return np.zeros(count, dtype=np.uint32)
    needed = (count * width + 7) // 8
    if len(data) < needed:
        raise DecodeError(f"index section truncated: need {needed} bytes, have {len(data)}")
    out = np.empty(count, dtype=np.uint32)
    pos = 0
    for i in range(count):
        v = 0
        for b in range(width):
            if data[(pos + b) >> 3] & (1 << ((pos + b) & 7)):
                v |= 1 << b
        out[i] = v
        pos += width
    return out


@dataclass(frozen=True)
class SparseEncoding:
    """Compressed N:M representation of one weight matrix."""

    values: np.ndarray    # float32, (num_groups * N,), group order
    indices: np.ndarray   # uint32, position of each value within its group
    level: SparsityLevel
    shape: tuple[int, int]

    @property
    def num_groups(self) -> int:
        return (self.shape[0] * self.shape[1]) // self.level.m

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(self.shape[0], self.shape[1], self.level.n, self.level.m)
        values = np.ascontiguousarray(self.values, dtype="<f4").tobytes()
        return header + values + pack_bits(self.indices, self.level.index_bits)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "SparseEncoding":
        if len(blob) < _HEADER.size:
            raise DecodeError("blob shorter than header")
        rows, cols, n, m = _HEADER.unpack_from(blob)
        try:
            level = SparsityLevel(n, m)
        except Exception as exc:
            raise DecodeError(f"invalid level in header: {exc}") from None
        if cols == 0 or rows == 0 or cols % m != 0:
            raise DecodeError(f"invalid shape ({rows}, {cols}) for M={m}")
        count = (rows * cols // m) * n
        values_end = _HEADER.size + 4 * count
        index_bytes = (count * level.index_bits + 7) // 8
        if len(blob) != values_end + index_bytes:
            raise DecodeError(
                f"blob length {len(blob)} != expected {values_end + index_bytes}"
            )
        values = np.frombuffer(blob, dtype="<f4", count=count, offset=_HEADER.size).copy()
        indices = unpack_bits(blob[values_end:], level.index_bits, count)
        if np.any(indices >= m):
            raise DecodeError(f"corrupted index >= M={m}")
        return cls(values=values, indices=indices, level=level, shape=(rows, cols))


def encode_sparse(
    weights: np.ndarray, level: SparsityLevel, metric: str = "magnitude"
) -> SparseEncoding:
    """Compress a weight matrix at the given level.

    Stores, per group, the N retained weights in ascending-index order.
    """
    arr = np.asarray(weights, dtype=np.float32)
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2-d weight matrix, got shape {arr.shape}")
    mask = layer_mask(arr, level, metric)
    rows, cols = arr.shape
    grouped_w = arr.reshape(rows, cols // level.m, level.m)
    grouped_m = mask.reshape(rows, cols // level.m, level.m)
    # Kept positions per group, ascending; exactly N per group by construction.
    kept = np.nonzero(grouped_m)
    indices = kept[2].astype(np.uint32)
    values = grouped_w[kept].astype(np.float32)
    return SparseEncoding(values=values, indices=indices, level=level, shape=(rows, cols))


def decode_sparse(enc: SparseEncoding) -> np.ndarray:
    """Reconstruct the masked dense matrix from an encoding, bit-exactly."""
    rows, cols = enc.shape
    level = enc.level
    count = (rows * cols // level.m) * level.n
    if enc.values.shape != (count,) or enc.indices.shape != (count,):
        raise DecodeError(
            f"encoding for shape {enc.shape} at {level} must carry {count} entries"
        )
    if np.any(enc.indices >= level.m):
        raise DecodeError(f"corrupted index >= M={level.m}")
    groups = rows * cols // level.m
    out = np.zeros((groups, level.m), dtype=np.float32)
    group_ids = np.repeat(np.arange(groups), level.n)
    out[group_ids, enc.indices] = enc.values
    return out.reshape(rows, cols)


def masked_dense(weights: np.ndarray, level: SparsityLevel, metric: str = "magnitude") -> np.ndarray:
    """apply_mask(W, layer_mask(W, level)) — the matrix an encoding must reproduce."""
    arr = np.asarray(weights, dtype=np.float32)
    return apply_mask(arr, layer_mask(arr, level, metric))

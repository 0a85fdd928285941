import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nmsearch.encoding import (
    SparseEncoding,
    decode_sparse,
    encode_sparse,
    masked_dense,
    pack_bits,
    unpack_bits,
)
from nmsearch.errors import DecodeError
from nmsearch.nm import SparsityLevel

LEVELS_4 = [SparsityLevel(n, 4) for n in (1, 2, 3, 4)]
LEVELS_8 = [SparsityLevel(n, 8) for n in (1, 2, 3, 4, 5, 6, 7, 8)]


class TestBitPacking:
    @pytest.mark.parametrize("width", [1, 2, 3, 5])
    def test_roundtrip(self, width):
        rng = np.random.default_rng(width)
        ints = rng.integers(0, 2**width, size=37)
        packed = pack_bits(ints, width)
        assert len(packed) == (37 * width + 7) // 8
        assert (unpack_bits(packed, width, 37) == ints).all()

    def test_zero_width(self):
        assert pack_bits(np.zeros(5, dtype=int), 0) == b""
        assert (unpack_bits(b"", 0, 5) == 0).all()

    def test_lsb_first_layout(self):
        # Two-bit indices 1,3,0,2 -> bits 01 11 00 10 LSB-first -> 0b10001101.
        assert pack_bits(np.array([1, 3, 0, 2]), 2) == bytes([0b10001101])

    def test_truncated(self):
        with pytest.raises(DecodeError):
            unpack_bits(b"\x00", 3, 37)


class TestEncodeDecode:
    def test_spec_example_2_4(self):
        enc = encode_sparse(np.array([[1.0, -3.0, 0.5, 2.0]]), SparsityLevel(2, 4))
        assert enc.values.tolist() == [-3.0, 2.0]
        assert enc.indices.tolist() == [1, 3]
        assert enc.level.index_bits == 2

    def test_dense_encoding_keeps_everything(self):
        w = np.arange(8, dtype=np.float32).reshape(2, 4)
        enc = encode_sparse(w, SparsityLevel(4, 4))
        assert enc.values.tolist() == list(range(8))
        assert enc.indices.tolist() == [0, 1, 2, 3, 0, 1, 2, 3]
        assert (decode_sparse(enc) == w).all()

    def test_counts(self):
        rng = np.random.default_rng(5)
        w = rng.normal(size=(8, 16)).astype(np.float32)
        enc = encode_sparse(w, SparsityLevel(3, 8))
        assert enc.values.shape == enc.indices.shape == (8 * 2 * 3,)

    @pytest.mark.parametrize("level", LEVELS_4 + LEVELS_8)
    def test_roundtrip_exact(self, level):
        rng = np.random.default_rng(level.n * 31 + level.m)
        for _ in range(25):
            w = rng.normal(size=(8, 16)).astype(np.float32)
            enc = encode_sparse(w, level)
            assert (decode_sparse(enc) == masked_dense(w, level)).all()

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_roundtrip_property(self, seed):
        rng = np.random.default_rng(seed)
        level = LEVELS_4[seed % 4] if seed % 2 else LEVELS_8[seed % 8]
        w = rng.normal(size=(4, 16)).astype(np.float32)
        blob = encode_sparse(w, level).to_bytes()
        restored = decode_sparse(SparseEncoding.from_bytes(blob))
        assert (restored == masked_dense(w, level)).all()


class TestSerialization:
    def test_blob_layout(self):
        w = np.array([[1.0, -3.0, 0.5, 2.0]], dtype=np.float32)
        blob = encode_sparse(w, SparsityLevel(2, 4)).to_bytes()
        rows, cols, n, m = struct.unpack_from("<IIII", blob)
        assert (rows, cols, n, m) == (1, 4, 2, 4)
        values = np.frombuffer(blob, dtype="<f4", count=2, offset=16)
        assert values.tolist() == [-3.0, 2.0]
        # Index section is exactly ceil(2 values * 2 bits / 8) = 1 byte.
        assert len(blob) == 16 + 8 + 1
        assert blob[24] == 0b1101  # indices 1,3 packed LSB-first

    @pytest.mark.parametrize(
        "level,shape",
        [(SparsityLevel(2, 4), (8, 16)), (SparsityLevel(3, 8), (8, 16)), (SparsityLevel(1, 1), (3, 4))],
    )
    def test_index_width_is_log2m(self, level, shape):
        w = np.random.default_rng(9).normal(size=shape).astype(np.float32)
        blob = encode_sparse(w, level).to_bytes()
        count = (shape[0] * shape[1] // level.m) * level.n
        expected_index_bytes = (count * level.index_bits + 7) // 8
        assert len(blob) == 16 + 4 * count + expected_index_bytes

    def test_corrupted_index_rejected(self):
        w = np.array([[1.0, -3.0, 0.5, 2.0]], dtype=np.float32)
        enc = encode_sparse(w, SparsityLevel(2, 4))
        bad = SparseEncoding(
            values=enc.values, indices=np.array([1, 7], dtype=np.uint32),
            level=enc.level, shape=enc.shape,
        )
        with pytest.raises(DecodeError):
            decode_sparse(bad)

    def test_truncated_blob_rejected(self):
        blob = encode_sparse(np.ones((2, 4), dtype=np.float32), SparsityLevel(2, 4)).to_bytes()
        with pytest.raises(DecodeError):
            SparseEncoding.from_bytes(blob[:-1])
        with pytest.raises(DecodeError):
            SparseEncoding.from_bytes(blob + b"\x00")

    def test_bad_header_level(self):
        blob = struct.pack("<IIII", 1, 4, 5, 4)
        with pytest.raises(DecodeError):
            SparseEncoding.from_bytes(blob)

"""64-bit FNV-1a hashing, plus an order-independent multiset hash over records."""

import numba
import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK = (1 << 64) - 1


@numba.njit(cache=True, nogil=True)
def _fnv1a(buf, h):
    prime = np.uint64(FNV_PRIME)
    for i in range(buf.shape[0]):
        h = (h ^ np.uint64(buf[i])) * prime
    return h


@numba.njit(cache=True, nogil=True)
def _row_hashes(rows):
    prime = np.uint64(FNV_PRIME)
    out = np.empty(rows.shape[0], dtype=np.uint64)
    for r in range(rows.shape[0]):
        h = np.uint64(FNV_OFFSET)
        for c in range(rows.shape[1]):
            h = (h ^ np.uint64(rows[r, c])) * prime
        out[r] = h
    return out


def _as_u8(data):
    if isinstance(data, np.ndarray):
        return np.ascontiguousarray(data).reshape(-1).view(np.uint8)
    return np.frombuffer(data, dtype=np.uint8)


def fnv1a64(data, state=FNV_OFFSET):
    """FNV-1a over ``data``; pass a previous result as ``state`` to continue a stream."""
    buf = _as_u8(data)
    if buf.size == 0:
        return int(state)
    return int(_fnv1a(buf, np.uint64(state)))


def record_hashes(records):
    """Per-row FNV-1a of a ``(n, width)`` uint8 array."""
    if records.shape[0] == 0:
        return np.empty(0, dtype=np.uint64)
    return _row_hashes(np.ascontiguousarray(records))


def multiset_checksum(records):
    """Sum of per-record hashes modulo 2**64. Independent of record order."""
    return int(record_hashes(records).sum(dtype=np.uint64))


def combine(a, b):
    return (a + b) & _MASK

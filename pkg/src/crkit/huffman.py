"""Canonical Huffman codes over arbitrary int64 symbol alphabets.

Code lengths come from the classic two-smallest-merge construction with a
deterministic tie-break (insertion order), then codes are assigned
canonically: symbols sorted by (length, value), codes increase from zero,
shifted left whenever the length grows. Only lengths and the sorted symbol
list need to be serialized; both encoder and decoder rebuild identical
tables from them.

Tables are serialized compactly because high-entropy residual streams can
carry tens of thousands of distinct symbols: the sorted symbol values are
delta-encoded as unsigned LEB128 varints (zigzag for the first), followed
by one length byte per symbol.

Code lengths are capped at MAX_CODE_LEN so the bit-packing kernels can run
on a 64-bit accumulator; frequency profiles that would exceed the cap do
not occur for realistic inputs (a depth-57 Huffman tree needs Fibonacci-
scale counts) and raise if they ever do.
"""
from __future__ import annotations

import heapq

import numpy as np

from .errors import CorruptStream, DataError

MAX_CODE_LEN = 56


def zigzag_encode(v: int) -> int:
    return (v << 1) ^ (v >> 63) if v < 0 else (v << 1)


def zigzag_decode(u: int) -> int:
    return (u >> 1) ^ -(u & 1)


def write_uvarint(out: bytearray, value: int) -> None:
    if value < 0:
        raise DataError("uvarint cannot encode negative values")
    while True:
        b = value & 0x7F
        value >>= 7
        if value:
            out.append(b | 0x80)
        else:
            out.append(b)
            return


def read_uvarint(buf: bytes, offset: int) -> tuple[int, int]:
    value = 0
    shift = 0
    while True:
        if offset >= len(buf):
            raise CorruptStream("truncated varint")
        b = buf[offset]
        offset += 1
        value |= (b & 0x7F) << shift
        if not b & 0x80:
            return value, offset
        shift += 7
        if shift > 70:
            raise CorruptStream("varint too long")


def code_lengths(counts: np.ndarray) -> np.ndarray:
    """Huffman code length per symbol, from positive frequency counts.

    Deterministic: ties in the merge queue resolve by insertion order, so
    the same counts always give the same lengths on every backend.
    """
    counts = np.asarray(counts, dtype=np.int64)
    n = counts.size
    if n == 0:
        raise DataError("no symbols")
    if np.any(counts <= 0):
        raise DataError("all symbol counts must be positive")
    if n == 1:
        return np.zeros(1, dtype=np.uint8)
    # heap items: (frequency, tiebreak, node). Leaves are ints, internal
    # nodes are [left, right] pairs.
    heap = [(int(c), i, i) for i, c in enumerate(counts)]
    heapq.heapify(heap)
    tiebreak = n
    while len(heap) > 1:
        f1, _, n1 = heapq.heappop(heap)
        f2, _, n2 = heapq.heappop(heap)
        heapq.heappush(heap, (f1 + f2, tiebreak, [n1, n2]))
        tiebreak += 1
    lengths = np.zeros(n, dtype=np.uint8)
    stack = [(heap[0][2], 0)]
    while stack:
        node, depth = stack.pop()
        if isinstance(node, list):
            stack.append((node[0], depth + 1))
            stack.append((node[1], depth + 1))
        else:
            lengths[node] = depth
    if int(lengths.max()) > MAX_CODE_LEN:
        raise DataError(f"Huffman depth exceeds {MAX_CODE_LEN}")
    return lengths


def canonical_codes(lengths: np.ndarray) -> np.ndarray:
    """Canonical code per symbol, symbols implicitly ordered by value.

    Symbol rank within equal lengths follows the (already sorted) symbol
    order of the caller, which makes assignment reproducible from the
    serialized table alone.
    """
    lengths = np.asarray(lengths, dtype=np.uint8)
    order = np.argsort(lengths, kind="stable")
    codes = np.zeros(lengths.size, dtype=np.uint64)
    code = 0
    prev_len = int(lengths[order[0]])
    for idx in order:
        l = int(lengths[idx])
        code <<= l - prev_len
        prev_len = l
        codes[idx] = code
        code += 1
    return codes


def decoder_tables(lengths: np.ndarray):
    """Per-length (count, first_code, first_index) arrays for canonical decode.

    first_index points into the canonical symbol ordering (length-major,
    then symbol order). Arrays are indexed by code length 1..max_len.
    """
    lengths = np.asarray(lengths, dtype=np.uint8)
    order = np.argsort(lengths, kind="stable")
    max_len = int(lengths.max())
    count = np.zeros(max_len + 1, dtype=np.uint32)
    for l in lengths:
        count[int(l)] += 1
    first_code = np.zeros(max_len + 1, dtype=np.uint64)
    first_index = np.zeros(max_len + 1, dtype=np.uint32)
    code = 0
    idx = 0
    for l in range(1, max_len + 1):
        code <<= 1
        first_code[l] = code
        first_index[l] = idx
        code += int(count[l])
        idx += int(count[l])
    return max_len, count, first_code, first_index, order.astype(np.uint32)


def encode_table(symbols: np.ndarray, lengths: np.ndarray) -> bytes:
    """Serialize (sorted symbol values, lengths) as the stream header."""
    symbols = np.asarray(symbols, dtype=np.int64)
    out = bytearray()
    write_uvarint(out, symbols.size)
    write_uvarint(out, zigzag_encode(int(symbols[0])))
    for i in range(1, symbols.size):
        delta = int(symbols[i]) - int(symbols[i - 1])
        write_uvarint(out, delta)  # symbols strictly increasing, delta >= 1
    if symbols.size > 1:
        out.extend(np.asarray(lengths, dtype=np.uint8).tobytes())
    return bytes(out)


def decode_table(buf: bytes, offset: int) -> tuple[np.ndarray, np.ndarray, int]:
    n, offset = read_uvarint(buf, offset)
    if n == 0:
        raise CorruptStream("empty symbol table")
    first, offset = read_uvarint(buf, offset)
    symbols = np.empty(n, dtype=np.int64)
    symbols[0] = zigzag_decode(first)
    for i in range(1, n):
        delta, offset = read_uvarint(buf, offset)
        if delta < 1:
            raise CorruptStream("symbol table not strictly increasing")
        symbols[i] = symbols[i - 1] + delta
    if n == 1:
        return symbols, np.zeros(1, dtype=np.uint8), offset
    if offset + n > len(buf):
        raise CorruptStream("truncated length table")
    lengths = np.frombuffer(buf[offset:offset + n], dtype=np.uint8).copy()
    offset += n
    if np.any(lengths == 0) or int(lengths.max()) > MAX_CODE_LEN:
        raise CorruptStream("invalid code length")
    return symbols, lengths, offset

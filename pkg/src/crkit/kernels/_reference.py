"""Pure-Python kernel reference implementations.

Slow but dependency-free; the semantics oracle for the compiled backend.
Rounding uses round-half-to-even everywhere (Python's ``round`` and C's
``rint`` agree exactly on doubles), which keeps the two backends
bit-identical.
"""
from __future__ import annotations

import numpy as np


def lorenzo_encode_2d(values: np.ndarray, eps: float) -> np.ndarray:
    m, n = values.shape
    twoeps = 2.0 * eps
    bins = np.empty((m, n), dtype=np.int64)
    rows = values.tolist()
    prev = None  # reconstructed previous row
    for i in range(m):
        row = rows[i]
        brow = [0] * n
        rrow = [0.0] * n
        for j in range(n):
            left = rrow[j - 1] if j > 0 else 0.0
            above = prev[j] if prev is not None else 0.0
            diag = prev[j - 1] if (prev is not None and j > 0) else 0.0
            pred = left + above - diag
            b = round((row[j] - pred) / twoeps)
            brow[j] = b
            rrow[j] = pred + b * twoeps
        bins[i] = brow
        prev = rrow
    return bins


def lorenzo_decode_2d(bins: np.ndarray, eps: float) -> np.ndarray:
    m, n = bins.shape
    twoeps = 2.0 * eps
    out = np.empty((m, n), dtype=np.float64)
    rows = bins.tolist()
    prev = None
    for i in range(m):
        brow = rows[i]
        rrow = [0.0] * n
        for j in range(n):
            left = rrow[j - 1] if j > 0 else 0.0
            above = prev[j] if prev is not None else 0.0
            diag = prev[j - 1] if (prev is not None and j > 0) else 0.0
            rrow[j] = (left + above - diag) + brow[j] * twoeps
        out[i] = rrow
        prev = rrow
    return out


def _lorenzo_pred_3d(rec, i, j, k):
    p = 0.0
    if i > 0:
        p += rec[i - 1][j][k]
    if j > 0:
        p += rec[i][j - 1][k]
    if k > 0:
        p += rec[i][j][k - 1]
    if i > 0 and j > 0:
        p -= rec[i - 1][j - 1][k]
    if i > 0 and k > 0:
        p -= rec[i - 1][j][k - 1]
    if j > 0 and k > 0:
        p -= rec[i][j - 1][k - 1]
    if i > 0 and j > 0 and k > 0:
        p += rec[i - 1][j - 1][k - 1]
    return p


def lorenzo_encode_3d(values: np.ndarray, eps: float) -> np.ndarray:
    d0, d1, d2 = values.shape
    twoeps = 2.0 * eps
    bins = np.empty((d0, d1, d2), dtype=np.int64)
    v = values.tolist()
    rec = [[[0.0] * d2 for _ in range(d1)] for _ in range(d0)]
    for i in range(d0):
        for j in range(d1):
            for k in range(d2):
                pred = _lorenzo_pred_3d(rec, i, j, k)
                b = round((v[i][j][k] - pred) / twoeps)
                bins[i, j, k] = b
                rec[i][j][k] = pred + b * twoeps
    return bins


def lorenzo_decode_3d(bins: np.ndarray, eps: float) -> np.ndarray:
    d0, d1, d2 = bins.shape
    twoeps = 2.0 * eps
    b = bins.tolist()
    rec = [[[0.0] * d2 for _ in range(d1)] for _ in range(d0)]
    for i in range(d0):
        for j in range(d1):
            for k in range(d2):
                rec[i][j][k] = _lorenzo_pred_3d(rec, i, j, k) + b[i][j][k] * twoeps
    return np.asarray(rec, dtype=np.float64)


def pack_bits(codes: np.ndarray, lengths: np.ndarray) -> tuple[bytes, int]:
    """MSB-first concatenation of per-value codes; returns (bytes, bit count)."""
    total_bits = int(np.asarray(lengths, dtype=np.int64).sum())
    out = bytearray()
    acc = 0
    nacc = 0
    for c, l in zip(codes.tolist(), lengths.tolist()):
        acc = (acc << l) | c
        nacc += l
        while nacc >= 8:
            nacc -= 8
            out.append((acc >> nacc) & 0xFF)
        acc &= (1 << nacc) - 1
    if nacc:
        out.append((acc << (8 - nacc)) & 0xFF)
    return bytes(out), total_bits


def decode_canonical(payload, n_values, max_len, count, first_code, first_index):
    """Decode ``n_values`` canonical codes; returns (canonical indices, bits used)."""
    out = np.empty(n_values, dtype=np.uint32)
    counts = count.tolist()
    firsts = first_code.tolist()
    bases = first_index.tolist()
    total_bits = len(payload) * 8
    bitpos = 0
    for i in range(n_values):
        code = 0
        l = 0
        while True:
            if bitpos >= total_bits:
                raise ValueError("bitstream exhausted mid-code")
            code = (code << 1) | ((payload[bitpos >> 3] >> (7 - (bitpos & 7))) & 1)
            bitpos += 1
            l += 1
            if l > max_len:
                raise ValueError("code longer than table maximum")
            if counts[l] and firsts[l] <= code < firsts[l] + counts[l]:
                out[i] = bases[l] + (code - firsts[l])
                break
    return out, bitpos

# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled codec kernels: Lorenzo transform loops and Huffman bit IO.

Semantics match kernels._reference exactly (round-half-to-even via rint,
MSB-first bit packing); the parity tests assert byte equality.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, rint

cnp.import_array()

# rint results must fit int64; anything larger is a caller bug (eps far too
# small for the value range).
cdef double _BIN_LIMIT = 9.0e18


def lorenzo_encode_2d(const double[:, ::1] values, double eps):
    cdef Py_ssize_t m = values.shape[0], n = values.shape[1]
    cdef double twoeps = 2.0 * eps
    bins_arr = np.empty((m, n), dtype=np.int64)
    recon_arr = np.empty((m, n), dtype=np.float64)
    cdef long long[:, ::1] bins = bins_arr
    cdef double[:, ::1] recon = recon_arr
    cdef Py_ssize_t i, j
    cdef double left, above, diag, pred, q
    cdef long long b
    for i in range(m):
        for j in range(n):
            left = recon[i, j - 1] if j > 0 else 0.0
            above = recon[i - 1, j] if i > 0 else 0.0
            diag = recon[i - 1, j - 1] if (i > 0 and j > 0) else 0.0
            pred = left + above - diag
            q = rint((values[i, j] - pred) / twoeps)
            if fabs(q) > _BIN_LIMIT:
                raise ValueError("quantization bin overflows int64")
            b = <long long> q
            bins[i, j] = b
            recon[i, j] = pred + b * twoeps
    return bins_arr


def lorenzo_decode_2d(const long long[:, ::1] bins, double eps):
    cdef Py_ssize_t m = bins.shape[0], n = bins.shape[1]
    cdef double twoeps = 2.0 * eps
    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double left, above, diag
    for i in range(m):
        for j in range(n):
            left = out[i, j - 1] if j > 0 else 0.0
            above = out[i - 1, j] if i > 0 else 0.0
            diag = out[i - 1, j - 1] if (i > 0 and j > 0) else 0.0
            out[i, j] = (left + above - diag) + bins[i, j] * twoeps
    return out_arr


cdef inline double _pred3d(double[:, :, ::1] rec, Py_ssize_t i, Py_ssize_t j,
                           Py_ssize_t k) noexcept nogil:
    cdef double p = 0.0
    if i > 0:
        p += rec[i - 1, j, k]
    if j > 0:
        p += rec[i, j - 1, k]
    if k > 0:
        p += rec[i, j, k - 1]
    if i > 0 and j > 0:
        p -= rec[i - 1, j - 1, k]
    if i > 0 and k > 0:
        p -= rec[i - 1, j, k - 1]
    if j > 0 and k > 0:
        p -= rec[i, j - 1, k - 1]
    if i > 0 and j > 0 and k > 0:
        p += rec[i - 1, j - 1, k - 1]
    return p


def lorenzo_encode_3d(const double[:, :, ::1] values, double eps):
    cdef Py_ssize_t d0 = values.shape[0], d1 = values.shape[1], d2 = values.shape[2]
    cdef double twoeps = 2.0 * eps
    bins_arr = np.empty((d0, d1, d2), dtype=np.int64)
    rec_arr = np.empty((d0, d1, d2), dtype=np.float64)
    cdef long long[:, :, ::1] bins = bins_arr
    cdef double[:, :, ::1] rec = rec_arr
    cdef Py_ssize_t i, j, k
    cdef double pred, q
    cdef long long b
    for i in range(d0):
        for j in range(d1):
            for k in range(d2):
                pred = _pred3d(rec, i, j, k)
                q = rint((values[i, j, k] - pred) / twoeps)
                if fabs(q) > _BIN_LIMIT:
                    raise ValueError("quantization bin overflows int64")
                b = <long long> q
                bins[i, j, k] = b
                rec[i, j, k] = pred + b * twoeps
    return bins_arr


def lorenzo_decode_3d(const long long[:, :, ::1] bins, double eps):
    cdef Py_ssize_t d0 = bins.shape[0], d1 = bins.shape[1], d2 = bins.shape[2]
    cdef double twoeps = 2.0 * eps
    out_arr = np.empty((d0, d1, d2), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, k
    for i in range(d0):
        for j in range(d1):
            for k in range(d2):
                out[i, j, k] = _pred3d(out, i, j, k) + bins[i, j, k] * twoeps
    return out_arr


def pack_bits(const cnp.uint64_t[::1] codes, const cnp.uint8_t[::1] lengths):
    """MSB-first concatenation of per-value codes; returns (bytes, bit count)."""
    cdef Py_ssize_t n = codes.shape[0]
    cdef unsigned long long total_bits = 0
    cdef Py_ssize_t i
    for i in range(n):
        total_bits += lengths[i]
    cdef Py_ssize_t nbytes = <Py_ssize_t> ((total_bits + 7) // 8)
    out_arr = np.zeros(max(nbytes, 1), dtype=np.uint8)
    cdef cnp.uint8_t[::1] out = out_arr
    cdef unsigned long long acc = 0
    cdef int nacc = 0, l
    cdef Py_ssize_t pos = 0
    for i in range(n):
        l = lengths[i]
        acc = (acc << l) | codes[i]
        nacc += l
        while nacc >= 8:
            nacc -= 8
            out[pos] = <cnp.uint8_t> ((acc >> nacc) & 0xFF)
            pos += 1
        acc &= (<unsigned long long> 1 << nacc) - 1
    if nacc:
        out[pos] = <cnp.uint8_t> ((acc << (8 - nacc)) & 0xFF)
    return out_arr.tobytes()[:nbytes], int(total_bits)


def decode_canonical(const unsigned char[::1] payload, Py_ssize_t n_values,
                     int max_len, const cnp.uint32_t[::1] count,
                     const cnp.uint64_t[::1] first_code, const cnp.uint32_t[::1] first_index):
    """Decode ``n_values`` canonical codes; returns (canonical indices, bits used)."""
    out_arr = np.empty(n_values, dtype=np.uint32)
    cdef cnp.uint32_t[::1] out = out_arr
    cdef Py_ssize_t total_bits = payload.shape[0] * 8
    cdef Py_ssize_t bitpos = 0, i
    cdef unsigned long long code
    cdef int l
    cdef unsigned int bit
    for i in range(n_values):
        code = 0
        l = 0
        while True:
            if bitpos >= total_bits:
                raise ValueError("bitstream exhausted mid-code")
            bit = (payload[bitpos >> 3] >> (7 - (bitpos & 7))) & 1
            bitpos += 1
            code = (code << 1) | bit
            l += 1
            if l > max_len:
                raise ValueError("code longer than table maximum")
            if count[l] != 0 and code >= first_code[l] and \
                    code < first_code[l] + count[l]:
                out[i] = first_index[l] + <cnp.uint32_t> (code - first_code[l])
                break
    return out_arr, int(bitpos)

"""Error-bounded reference compressors and the external-tool adapter.

Two native codecs cover the two big behavioral families of scientific lossy
compressors:

``lorenzo`` (predictive family)
    Raster-order Lorenzo prediction from already-reconstructed neighbors,
    residual quantization to bins of width 2*eps (round to nearest, so the
    pointwise error never exceeds eps), canonical Huffman coding of the bin
    stream.

``rounding`` (rounding family)
    Each value rounded to the nearest multiple of 2*eps, the resulting grid
    indices zigzag-encoded and split into byte planes, each plane coded
    with its own canonical Huffman stream. No spatial decorrelation at all,
    mirroring mantissa-rounding tools.

Codestream layout (little-endian, versioned):

    magic "CRK1" | version u8 | codec u8 | flags u8 | width u8 |
    ndim u8 | shape u32*ndim | eps f64 | body

Body is raw float64 values in stored mode (inputs under 16 values), one
symbol stream for the predictive codec, or a plane count byte followed by
one symbol stream per plane for the rounding codec. A symbol stream is a
Huffman table (see huffman module), a uvarint payload bit count, and the
packed payload. Every header and table byte counts toward compressed size,
as real tools report it.
"""
from __future__ import annotations

import os
import shlex
import struct
import subprocess
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from . import huffman, kernels
from .errors import (
    CorruptStream,
    DataError,
    ExternalFailure,
    ExternalTimeout,
    NonPositiveEps,
)
from .fields import ELEMENT_WIDTHS, ScalarField, write_raw

MAGIC = b"CRK1"
FORMAT_VERSION = 1
CODEC_PREDICTIVE = 1
CODEC_ROUNDING = 2
FLAG_STORED = 0x01

STORED_MODE_MAX = 15  # inputs this small skip entropy coding entirely
CR_CAP = 100.0  # ratios above this are flagged and excluded from training

EXTERNAL_TIMEOUT_ENV = "CRKIT_EXTERNAL_TIMEOUT"
_DEFAULT_EXTERNAL_TIMEOUT = 300.0


@dataclass(frozen=True)
class CompressorId:
    name: str
    family: str  # predictive | rounding | external
    error_mode: str = "absolute"


@dataclass(frozen=True)
class CompressionResult:
    cr: float
    compressed_bytes: int
    eps_abs: float
    wall_time: float
    compressor: str = ""

    @property
    def capped(self) -> bool:
        return self.cr > CR_CAP


def _check_eps(eps_abs: float) -> float:
    eps = float(eps_abs)
    if not eps > 0.0:
        raise NonPositiveEps(f"error bound must be positive, got {eps_abs}")
    return eps


def _encode_symbol_stream(symbols: np.ndarray) -> bytes:
    values, inverse, counts = np.unique(
        np.ascontiguousarray(symbols, dtype=np.int64),
        return_inverse=True, return_counts=True,
    )
    out = bytearray()
    if values.size == 1:
        out += huffman.encode_table(values, np.zeros(1, dtype=np.uint8))
        huffman.write_uvarint(out, 0)
        return bytes(out)
    lengths = huffman.code_lengths(counts)
    codes = huffman.canonical_codes(lengths)
    inverse = inverse.ravel()
    payload, nbits = kernels.pack_bits(
        np.ascontiguousarray(codes[inverse], dtype=np.uint64),
        np.ascontiguousarray(lengths[inverse], dtype=np.uint8),
    )
    out += huffman.encode_table(values, lengths)
    huffman.write_uvarint(out, nbits)
    out += payload
    return bytes(out)


def _decode_symbol_stream(buf: bytes, offset: int, n_values: int):
    values, lengths, offset = huffman.decode_table(buf, offset)
    nbits, offset = huffman.read_uvarint(buf, offset)
    if values.size == 1:
        if nbits != 0:
            raise CorruptStream("single-symbol stream with a payload")
        return np.full(n_values, values[0], dtype=np.int64), offset
    nbytes = (nbits + 7) // 8
    payload = buf[offset:offset + nbytes]
    if len(payload) < nbytes:
        raise CorruptStream("truncated payload")
    max_len, count, first_code, first_index = huffman.decoder_tables(lengths)[:4]
    order = huffman.decoder_tables(lengths)[4]
    try:
        idx, used = kernels.decode_canonical(
            payload, n_values, max_len, count, first_code, first_index
        )
    except ValueError as exc:
        raise CorruptStream(str(exc)) from exc
    if used != nbits:
        raise CorruptStream(
            f"payload declares {nbits} bits but decoding used {used}"
        )
    return values[order[idx]], offset + nbytes


def _header(codec: int, flags: int, field: ScalarField, eps: float) -> bytes:
    return (
        MAGIC
        + struct.pack("<BBBB", FORMAT_VERSION, codec, flags,
                      ELEMENT_WIDTHS[field.element_type])
        + struct.pack("<B", field.ndim)
        + struct.pack(f"<{field.ndim}I", *field.shape)
        + struct.pack("<d", eps)
    )


def _parse_header(blob: bytes):
    if len(blob) < len(MAGIC) + 5:
        raise CorruptStream("stream shorter than header")
    if blob[:4] != MAGIC:
        raise CorruptStream("bad magic")
    version, codec, flags, width = struct.unpack_from("<BBBB", blob, 4)
    if version != FORMAT_VERSION:
        raise CorruptStream(f"unsupported format version {version}")
    if codec not in (CODEC_PREDICTIVE, CODEC_ROUNDING):
        raise CorruptStream(f"unknown codec id {codec}")
    if width not in (4, 8):
        raise CorruptStream(f"unknown element width {width}")
    (ndim,) = struct.unpack_from("<B", blob, 8)
    if not 2 <= ndim <= 4:
        raise CorruptStream(f"bad dimensionality {ndim}")
    off = 9
    if len(blob) < off + 4 * ndim + 8:
        raise CorruptStream("truncated header")
    shape = struct.unpack_from(f"<{ndim}I", blob, off)
    off += 4 * ndim
    (eps,) = struct.unpack_from("<d", blob, off)
    off += 8
    if any(s == 0 for s in shape):
        raise CorruptStream("zero extent in shape")
    return codec, flags, width, shape, eps, off


def _check_codec_field(field: ScalarField) -> None:
    if field.ndim not in (2, 3):
        raise DataError(f"native codecs support 2D/3D fields, got {field.ndim}D")


def compress_predictive(field: ScalarField, eps_abs: float):
    """Lorenzo + residual quantization + Huffman. Returns (codestream, result).

    Decompression reproduces every value to within eps_abs. Residual bins
    are 64-bit, so there is no unpredictable-value escape path.
    """
    eps = _check_eps(eps_abs)
    _check_codec_field(field)
    t0 = time.perf_counter()
    if field.n_values <= STORED_MODE_MAX:
        blob = _header(CODEC_PREDICTIVE, FLAG_STORED, field, eps) \
            + field.values.astype("<f8").tobytes()
    else:
        # Coding relative to the first value (stored in the body) makes the
        # implicit zero border act like a constant halo: constant fields
        # yield an all-zero bin stream, and mean offsets cost nothing.
        base = float(field.values.flat[0])
        shifted = np.ascontiguousarray(field.values - base)
        if field.ndim == 2:
            bins = kernels.lorenzo_encode_2d(shifted, eps)
        else:
            bins = kernels.lorenzo_encode_3d(shifted, eps)
        blob = _header(CODEC_PREDICTIVE, 0, field, eps) \
            + struct.pack("<d", base) + _encode_symbol_stream(bins.ravel())
    wall = time.perf_counter() - t0
    result = CompressionResult(
        cr=field.original_nbytes / len(blob),
        compressed_bytes=len(blob),
        eps_abs=eps,
        wall_time=wall,
        compressor="lorenzo",
    )
    return blob, result


def compress_rounding(field: ScalarField, eps_abs: float):
    """Round to the 2*eps grid, zigzag, byte-plane split, Huffman per plane."""
    eps = _check_eps(eps_abs)
    _check_codec_field(field)
    t0 = time.perf_counter()
    if field.n_values <= STORED_MODE_MAX:
        blob = _header(CODEC_ROUNDING, FLAG_STORED, field, eps) \
            + field.values.astype("<f8").tobytes()
    else:
        q = np.rint(field.values.ravel() / (2.0 * eps))
        if np.any(np.abs(q) > 2.0 ** 61):
            raise DataError("error bound too small for value range (grid "
                            "index overflows)")
        k = q.astype(np.int64)
        z = (k << 1) ^ (k >> 63)  # zigzag: small magnitudes stay small
        n_planes = 4 if int(z.max(initial=0)) < 2 ** 32 else 8
        body = bytearray(struct.pack("<B", n_planes))
        for p in range(n_planes):
            body += _encode_symbol_stream((z >> (8 * p)) & 0xFF)
        blob = _header(CODEC_ROUNDING, 0, field, eps) + bytes(body)
    wall = time.perf_counter() - t0
    result = CompressionResult(
        cr=field.original_nbytes / len(blob),
        compressed_bytes=len(blob),
        eps_abs=eps,
        wall_time=wall,
        compressor="rounding",
    )
    return blob, result


def decompress(blob: bytes) -> ScalarField:
    """Decode either native codestream back to a field.

    Values come back at analysis precision (float64): reconstruction points
    sit on the codec's quantization grid, not on the source float32 grid,
    and snapping them would touch the error bound.
    """
    if not isinstance(blob, (bytes, bytearray, memoryview)):
        raise CorruptStream("codestream must be bytes")
    blob = bytes(blob)
    codec, flags, width, shape, eps, off = _parse_header(blob)
    n = int(np.prod(shape))
    if flags & FLAG_STORED:
        end = off + 8 * n
        if len(blob) < end:
            raise CorruptStream("truncated stored payload")
        values = np.frombuffer(blob[off:end], dtype="<f8").reshape(shape)
        return ScalarField(values, origin_tag="decompressed", element_type="f64")
    if codec == CODEC_PREDICTIVE:
        if len(blob) < off + 8:
            raise CorruptStream("missing base value")
        (base,) = struct.unpack_from("<d", blob, off)
        off += 8
        bins, off = _decode_symbol_stream(blob, off, n)
        bins = np.ascontiguousarray(bins.reshape(shape))
        if len(shape) == 2:
            values = kernels.lorenzo_decode_2d(bins, eps)
        elif len(shape) == 3:
            values = kernels.lorenzo_decode_3d(bins, eps)
        else:
            raise CorruptStream("predictive codec requires 2D/3D shape")
        return ScalarField(values + base, origin_tag="decompressed",
                           element_type="f64")
    # rounding codec
    if off >= len(blob):
        raise CorruptStream("missing plane count")
    n_planes = blob[off]
    off += 1
    if n_planes not in (4, 8):
        raise CorruptStream(f"bad plane count {n_planes}")
    z = np.zeros(n, dtype=np.int64)
    for p in range(n_planes):
        plane, off = _decode_symbol_stream(blob, off, n)
        z |= (plane & 0xFF) << (8 * p)
    k = (z >> 1) ^ -(z & 1)
    values = (k.astype(np.float64) * (2.0 * eps)).reshape(shape)
    return ScalarField(values, origin_tag="decompressed", element_type="f64")


def stream_stats(blob: bytes) -> list[dict]:
    """Per-symbol-stream accounting: values, payload bits, empirical entropy.

    One entry per Huffman stream in the codestream (the predictive codec
    has one, the rounding codec one per byte plane). Used to check coder
    efficiency against the entropy of what was actually coded.
    """
    codec, flags, width, shape, eps, off = _parse_header(blob)
    n = int(np.prod(shape))
    if flags & FLAG_STORED:
        return []
    streams = []

    def _one(off):
        table_start = off
        values, lengths, off = huffman.decode_table(blob, off)
        nbits, off = huffman.read_uvarint(blob, off)
        symbols, _ = _decode_symbol_stream(blob, table_start, n)
        _, counts = np.unique(symbols, return_counts=True)
        p = counts / counts.sum()
        entropy = float(-(p * np.log2(p)).sum())
        streams.append({
            "n_values": n,
            "payload_bits": int(nbits),
            "entropy_bits": entropy,
            "n_distinct": int(values.size),
        })
        return off + (nbits + 7) // 8 if values.size > 1 else off

    if codec == CODEC_PREDICTIVE:
        _one(off + 8)  # skip the stored base value
    else:
        n_planes = blob[off]
        off += 1
        for _ in range(n_planes):
            off = _one(off)
    return streams


# ---------------------------------------------------------------------------
# Registry


@dataclass(frozen=True)
class RegisteredCompressor:
    id: CompressorId
    run: object  # callable(field, eps_abs) -> CompressionResult


_REGISTRY: dict[str, RegisteredCompressor] = {}


def register_compressor(cid: CompressorId, run) -> None:
    if cid.name in _REGISTRY:
        raise DataError(f"compressor {cid.name!r} already registered")
    _REGISTRY[cid.name] = RegisteredCompressor(cid, run)


def unregister_compressor(name: str) -> None:
    _REGISTRY.pop(name, None)


def get_compressor(name: str) -> RegisteredCompressor:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise DataError(
            f"unknown compressor {name!r}; registered: {sorted(_REGISTRY)}"
        ) from None


def list_compressors() -> list[str]:
    return sorted(_REGISTRY)


def measure_cr(field: ScalarField, compressor, eps_abs: float) -> CompressionResult:
    """Run one compressor on one field and report the measured ratio."""
    if isinstance(compressor, CompressorId):
        name = compressor.name
    elif isinstance(compressor, RegisteredCompressor):
        name = compressor.id.name
    else:
        name = str(compressor)
    reg = get_compressor(name)
    return reg.run(field, eps_abs)


def external_compress(field: ScalarField, command_template: str,
                      eps_abs: float, timeout: float | None = None,
                      name: str = "external") -> CompressionResult:
    """Invoke an external compressor executable and measure its output size.

    The template must contain ``{input}``, ``{output}`` and ``{eps}``
    placeholders; ``{dims}`` expands to space-separated extents, slowest
    first. Compressed size is the byte length of the declared output file;
    quality is the tool's own responsibility.
    """
    eps = _check_eps(eps_abs)
    if timeout is None:
        timeout = float(os.environ.get(EXTERNAL_TIMEOUT_ENV,
                                       _DEFAULT_EXTERNAL_TIMEOUT))
    for placeholder in ("{input}", "{output}", "{eps}"):
        if placeholder not in command_template:
            raise DataError(f"command template missing {placeholder}")
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory(prefix="crkit-ext-") as tmp:
        in_path = os.path.join(tmp, "field.raw")
        out_path = os.path.join(tmp, "field.cmp")
        write_raw(field, in_path)
        cmd = command_template.format(
            input=shlex.quote(in_path),
            output=shlex.quote(out_path),
            eps=repr(eps),
            dims=" ".join(str(s) for s in field.shape),
        )
        try:
            proc = subprocess.run(
                cmd, shell=True, capture_output=True, timeout=timeout,
            )
        except subprocess.TimeoutExpired as exc:
            raise ExternalTimeout(
                f"{name}: command exceeded {timeout:.0f}s"
            ) from exc
        if proc.returncode != 0:
            raise ExternalFailure(
                f"{name}: exit {proc.returncode}",
                stderr=proc.stderr.decode("utf-8", "replace"),
                returncode=proc.returncode,
            )
        try:
            out_size = os.path.getsize(out_path)
        except OSError as exc:
            raise ExternalFailure(
                f"{name}: no output file produced",
                stderr=proc.stderr.decode("utf-8", "replace"),
            ) from exc
    if out_size < 1:
        raise ExternalFailure(f"{name}: empty output file")
    wall = time.perf_counter() - t0
    return CompressionResult(
        cr=field.original_nbytes / out_size,
        compressed_bytes=out_size,
        eps_abs=eps,
        wall_time=wall,
        compressor=name,
    )


def register_external(name: str, command_template: str,
                      timeout: float | None = None) -> CompressorId:
    cid = CompressorId(name=name, family="external")

    def _run(field, eps_abs):
        return external_compress(field, command_template, eps_abs,
                                 timeout=timeout, name=name)

    register_compressor(cid, _run)
    return cid


register_compressor(
    CompressorId("lorenzo", "predictive"),
    lambda field, eps: compress_predictive(field, eps)[1],
)
register_compressor(
    CompressorId("rounding", "rounding"),
    lambda field, eps: compress_rounding(field, eps)[1],
)

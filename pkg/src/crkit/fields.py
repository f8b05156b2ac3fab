"""Gridded scalar fields: raw binary IO, manifests, slicing, summary stats.

Raw files are IEEE-754 f32/f64, row-major with the last dimension varying
fastest, little-endian by default (the common layout of the public
scientific-data benchmark dumps this toolkit targets). A manifest lists one
field per line, tab-separated:

    path<TAB>dtype<TAB>shape<TAB>field_name[<TAB>byte_order]

where shape is comma-separated extents, e.g. ``100,500,500``, and byte_order
is ``little`` (default) or ``big``. Relative paths resolve against the
manifest's directory.

All analysis runs in float64 regardless of the on-disk element type; the
element type is kept on the field because it sets the uncompressed byte
count used in compression-ratio denominators.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import (
    AxisOutOfRange,
    DataError,
    EmptyField,
    NonFiniteValue,
    SizeMismatch,
    TooFewDims,
    UnreadableFile,
)

ELEMENT_WIDTHS = {"f32": 4, "f64": 8}
_NUMPY_DTYPES = {
    ("f32", "little"): "<f4",
    ("f32", "big"): ">f4",
    ("f64", "little"): "<f8",
    ("f64", "big"): ">f8",
}


@dataclass(frozen=True)
class ScalarField:
    """An n-D grid of real values (2 <= n <= 4), immutable after construction.

    ``values`` is a C-contiguous float64 array carrying the grid shape;
    ``element_type`` records the source precision (f32 values are snapped to
    their float32 representation so in-memory values equal on-disk values).
    """

    values: np.ndarray
    origin_tag: str = ""
    element_type: str = "f32"

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if self.element_type not in ELEMENT_WIDTHS:
            raise DataError(f"unknown element type {self.element_type!r}")
        if arr.ndim < 2 or arr.ndim > 4:
            raise DataError(f"field must be 2D..4D, got {arr.ndim}D")
        if arr.size == 0:
            raise EmptyField("field has no values")
        if self.element_type == "f32":
            arr = arr.astype(np.float32).astype(np.float64)
        arr = np.ascontiguousarray(arr)
        bad = np.flatnonzero(~np.isfinite(arr.ravel()))
        if bad.size:
            raise NonFiniteValue(
                f"non-finite value at flat index {bad[0]}", index=int(bad[0])
            )
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def n_values(self) -> int:
        return self.values.size

    @property
    def original_nbytes(self) -> int:
        """Uncompressed byte count at the source element width."""
        return self.n_values * ELEMENT_WIDTHS[self.element_type]

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(values, origin_tag=self.origin_tag,
                           element_type=self.element_type)


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    element_type: str
    shape: tuple[int, ...]
    field_name: str
    byte_order: str = "little"

    def __post_init__(self):
        if self.element_type not in ELEMENT_WIDTHS:
            raise DataError(f"unknown element type {self.element_type!r}")
        if self.byte_order not in ("little", "big"):
            raise DataError(f"unknown byte order {self.byte_order!r}")
        if len(self.shape) == 0 or any(s <= 0 for s in self.shape):
            raise DataError(f"shape extents must be positive, got {self.shape}")

    @property
    def nbytes(self) -> int:
        return math.prod(self.shape) * ELEMENT_WIDTHS[self.element_type]


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry] = dc_field(default_factory=list)
    base_dir: str = "."

    def resolve(self, entry: ManifestEntry) -> str:
        if os.path.isabs(entry.path):
            return entry.path
        return os.path.join(self.base_dir, entry.path)


def load_manifest(path: str) -> DatasetManifest:
    entries = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UnreadableFile(f"cannot read manifest {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) not in (4, 5):
            raise DataError(
                f"{path}:{lineno}: expected 4 or 5 tab-separated columns"
            )
        raw_path, dtype, shape_s, name = parts[:4]
        byte_order = parts[4] if len(parts) == 5 else "little"
        try:
            shape = tuple(int(s) for s in shape_s.split(","))
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: bad shape {shape_s!r}") from exc
        entries.append(ManifestEntry(raw_path, dtype, shape, name, byte_order))
    return DatasetManifest(entries, base_dir=os.path.dirname(path) or ".")


def save_manifest(manifest: DatasetManifest, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in manifest.entries:
            shape_s = ",".join(str(s) for s in e.shape)
            fh.write(f"{e.path}\t{e.element_type}\t{shape_s}\t{e.field_name}"
                     f"\t{e.byte_order}\n")


def load_raw(entry: ManifestEntry, base_dir: str = ".") -> ScalarField:
    """Read one manifest entry into a ScalarField.

    Validates file size against shape x element width before reading and
    rejects non-finite values (reporting the first offending flat index).
    """
    path = entry.path if os.path.isabs(entry.path) else os.path.join(base_dir, entry.path)
    try:
        actual = os.path.getsize(path)
    except OSError as exc:
        raise UnreadableFile(f"cannot stat {path}: {exc}") from exc
    if actual != entry.nbytes:
        raise SizeMismatch(
            f"{path}: file is {actual} bytes, manifest declares "
            f"{entry.nbytes} (shape {entry.shape}, {entry.element_type})"
        )
    try:
        raw = np.fromfile(path, dtype=_NUMPY_DTYPES[(entry.element_type, entry.byte_order)])
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc
    arr = raw.astype(np.float64).reshape(entry.shape)
    return ScalarField(arr, origin_tag=entry.field_name or path,
                       element_type=entry.element_type)


def write_raw(field: ScalarField, path: str, byte_order: str = "little") -> None:
    """Write a field in the raw binary layout at its source element width."""
    dt = _NUMPY_DTYPES[(field.element_type, byte_order)]
    field.values.astype(dt).tofile(path)


@dataclass(frozen=True)
class SliceStack:
    """Ordered same-shape slices cut from one field along one axis."""

    slices: tuple[ScalarField, ...]
    source_field: str
    slice_axis: int

    def __post_init__(self):
        if len(self.slices) < 1:
            raise DataError("slice stack needs at least one slice")
        shapes = {s.shape for s in self.slices}
        if len(shapes) != 1:
            raise DataError(f"slices disagree on shape: {sorted(shapes)}")

    def __len__(self) -> int:
        return len(self.slices)

    def __iter__(self):
        return iter(self.slices)


def slice_stack(field: ScalarField, axis: int = 0) -> SliceStack:
    """Cut a 3D/4D field into (dims-1)-D slices along ``axis``.

    Axis 0 is the slowest-incrementing dimension in the raw layout, which is
    the default cut: it yields the most training samples per field.
    """
    if field.ndim < 3:
        raise TooFewDims(f"need >= 3 dims to slice, got {field.ndim}")
    if not 0 <= axis < field.ndim:
        raise AxisOutOfRange(f"axis {axis} out of range for {field.ndim}D field")
    moved = np.moveaxis(field.values, axis, 0)
    slices = tuple(
        ScalarField(
            np.ascontiguousarray(moved[k]),
            origin_tag=f"{field.origin_tag}[{k}]",
            element_type=field.element_type,
        )
        for k in range(moved.shape[0])
    )
    return SliceStack(slices, source_field=field.origin_tag, slice_axis=axis)


def restack(stack: SliceStack, origin_tag: str | None = None) -> ScalarField:
    """Inverse of slice_stack: reassemble the original field bit-exactly."""
    arr = np.stack([s.values for s in stack.slices], axis=0)
    arr = np.moveaxis(arr, 0, stack.slice_axis)
    return ScalarField(
        np.ascontiguousarray(arr),
        origin_tag=origin_tag if origin_tag is not None else stack.source_field,
        element_type=stack.slices[0].element_type,
    )


@dataclass(frozen=True)
class FieldStats:
    mean: float
    stddev: float
    min: float
    max: float
    value_range: float


def field_stats(field: ScalarField) -> FieldStats:
    """Mean, population standard deviation, min, max, range of all values.

    The standard deviation divides by N (population form): downstream
    predictors are standardized again before regression, so only a fixed,
    documented convention matters.
    """
    v = field.values
    if v.size == 0:
        raise EmptyField("cannot compute stats of an empty field")
    mean = float(np.mean(v))
    stddev = float(np.std(v))
    vmin = float(np.min(v))
    vmax = float(np.max(v))
    return FieldStats(mean=mean, stddev=stddev, min=vmin, max=vmax,
                      value_range=vmax - vmin)

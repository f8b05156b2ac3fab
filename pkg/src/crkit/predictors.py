"""Compressor-agnostic statistical predictors of lossy compressibility.

For a slice at absolute error bound eps the predictor vector holds:

* quantized entropy: Shannon entropy (bits/symbol) of floor(value/eps),
  a cheap account of how much information survives the error bound;
* SVD truncation level: the fraction of singular values of the
  column-mean-corrected slice needed to capture 99% of total variance,
  small for strongly spatially correlated slices (3D slices use the
  per-mode HOSVD analog at 90% energy, aggregated by arithmetic mean);
* the slice standard deviation, an overall variability measure;
* their derived logs, log(q-ent) and log(svd-trunc / sigma), floored at
  1e-12 before the log so constant slices stay finite.

Note the two quantizers in this package differ on purpose: predictors use
floor(value/eps) as the information-loss proxy, while the reference codecs
quantize to nearest on a 2*eps grid to guarantee the bound.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DataError,
    DegenerateShape,
    EmptyInput,
    NonPositiveEps,
    NotThreeDimensional,
    NotTwoDimensional,
)
from .fields import ScalarField, field_stats

LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class QuantizedField:
    bins: np.ndarray  # int64, same shape as the source
    eps_abs: float


@dataclass(frozen=True)
class PredictorVector:
    q_entropy: float
    svd_trunc: float
    sigma: float
    log_qent: float
    log_ratio: float
    eps_abs: float

    def as_log_pair(self) -> tuple[float, float]:
        return (self.log_qent, self.log_ratio)


def quantize(field: ScalarField, eps_abs: float) -> QuantizedField:
    """Bin indices floor(value / eps), floor toward minus infinity."""
    eps = float(eps_abs)
    if not eps > 0.0:
        raise NonPositiveEps(f"error bound must be positive, got {eps_abs}")
    scaled = field.values / eps
    if np.any(np.abs(scaled) >= 2.0 ** 62):
        raise DataError("quantization bin overflows int64; eps too small")
    bins = np.floor(scaled).astype(np.int64)
    return QuantizedField(bins=bins, eps_abs=eps)


def shannon_entropy(symbols) -> float:
    """Empirical Shannon entropy in bits/symbol over any discrete sequence."""
    arr = np.asarray(symbols)
    if arr.size == 0:
        raise EmptyInput("entropy of an empty sequence is undefined")
    _, counts = np.unique(arr.ravel(), return_counts=True)
    p = counts / arr.size
    return float(-(p * np.log2(p)).sum())


def quantized_entropy(field: ScalarField, eps_abs: float) -> float:
    return shannon_entropy(quantize(field, eps_abs).bins)


def _energy_fraction_count(singular_values: np.ndarray, frac: float) -> int:
    """Smallest k with sum of the top-k squared singular values >= frac of total.

    Singular values at numerical-noise level (below s_max * max_dim * eps)
    are treated as zero, so frac=1.0 returns the numerical rank.
    """
    s = np.asarray(singular_values, dtype=np.float64)
    tol = s.max(initial=0.0) * max(s.size, 1) * np.finfo(np.float64).eps
    s = np.where(s > tol, s, 0.0)
    energy = s * s
    total = energy.sum()
    if total <= 0.0:
        return 1
    cum = np.cumsum(energy)
    target = frac * cum[-1]
    return int(np.searchsorted(cum, target - 1e-15 * cum[-1]) + 1)


def svd_trunc(field: ScalarField, variance_frac: float = 0.99) -> float:
    """Fraction of singular values needed for ``variance_frac`` of variance.

    Computed on the column-mean-corrected slice; a constant slice (all
    singular values zero) reports the minimum 1/min(m, n).
    """
    if field.ndim != 2:
        raise NotTwoDimensional(f"svd_trunc needs a 2D slice, got {field.ndim}D")
    m, n = field.shape
    if min(m, n) < 2:
        raise DegenerateShape(f"svd_trunc needs min extent >= 2, got {field.shape}")
    if not 0.0 < variance_frac <= 1.0:
        raise DataError(f"variance fraction must be in (0, 1], got {variance_frac}")
    centered = field.values - field.values.mean(axis=0, keepdims=True)
    s = np.linalg.svd(centered, compute_uv=False)
    k = _energy_fraction_count(s, variance_frac)
    return k / min(m, n)


@dataclass(frozen=True)
class HosvdTrunc:
    per_mode: tuple[float, float, float]
    aggregate: float


def hosvd_trunc(field: ScalarField, energy_frac: float = 0.90) -> HosvdTrunc:
    """Per-mode truncation fractions of the 3D tensor's unfoldings.

    Each mode's fibers are unfolded into columns and passed through the
    same energy-fraction selection at 90%; unfoldings are not
    mean-corrected. The scalar aggregate (arithmetic mean of the three
    fractions) is what enters the regression for 3D inputs.
    """
    if field.ndim != 3:
        raise NotThreeDimensional(f"hosvd_trunc needs a 3D field, got {field.ndim}D")
    if min(field.shape) < 2:
        raise DegenerateShape(f"hosvd_trunc needs extents >= 2, got {field.shape}")
    if not 0.0 < energy_frac <= 1.0:
        raise DataError(f"energy fraction must be in (0, 1], got {energy_frac}")
    fractions = []
    for mode in range(3):
        unfolding = np.moveaxis(field.values, mode, 0).reshape(field.shape[mode], -1)
        s = np.linalg.svd(unfolding, compute_uv=False)
        k = _energy_fraction_count(s, energy_frac)
        fractions.append(k / min(unfolding.shape))
    per_mode = tuple(fractions)
    return HosvdTrunc(per_mode=per_mode, aggregate=float(np.mean(fractions)))


def build_predictor_vectors(field: ScalarField, eps_list,
                            variance_frac: float = 0.99,
                            energy_frac: float = 0.90) -> list[PredictorVector]:
    """Predictor vectors for one slice at several error bounds.

    The SVD (or HOSVD) truncation and sigma do not depend on the bound, so
    they are computed once; only the quantized entropy is redone per eps.
    """
    if field.ndim == 2:
        trunc = svd_trunc(field, variance_frac)
    elif field.ndim == 3:
        trunc = hosvd_trunc(field, energy_frac).aggregate
    else:
        raise DataError(f"predictors need a 2D or 3D slice, got {field.ndim}D")
    sigma = field_stats(field).stddev
    log_ratio = math.log(max(trunc, LOG_FLOOR) / max(sigma, LOG_FLOOR))
    out = []
    for eps in eps_list:
        qent = quantized_entropy(field, eps)
        out.append(PredictorVector(
            q_entropy=qent,
            svd_trunc=trunc,
            sigma=sigma,
            log_qent=math.log(max(qent, LOG_FLOOR)),
            log_ratio=log_ratio,
            eps_abs=float(eps),
        ))
    return out


def build_predictor_vector(field: ScalarField, eps_abs: float,
                           variance_frac: float = 0.99,
                           energy_frac: float = 0.90) -> PredictorVector:
    """All predictors for one 2D or 3D slice at one error bound."""
    return build_predictor_vectors(field, [eps_abs], variance_frac,
                                   energy_frac)[0]


PREDICTOR_COLUMNS = (
    "slice_id", "eps_abs", "q_entropy", "svd_trunc", "sigma",
    "log_qent", "log_ratio",
)


def write_predictor_rows(path: str, rows) -> None:
    """Write (slice_id, PredictorVector) pairs as one CSV row each."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(PREDICTOR_COLUMNS)
        for slice_id, v in rows:
            w.writerow([slice_id, repr(v.eps_abs), repr(v.q_entropy),
                        repr(v.svd_trunc), repr(v.sigma), repr(v.log_qent),
                        repr(v.log_ratio)])


def read_predictor_rows(path: str) -> list[tuple[str, PredictorVector]]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or tuple(header) != PREDICTOR_COLUMNS:
            raise DataError(f"{path}: unexpected predictor CSV header {header}")
        for rec in r:
            slice_id, eps, qent, trunc, sigma, lq, lr = rec
            rows.append((slice_id, PredictorVector(
                q_entropy=float(qent), svd_trunc=float(trunc),
                sigma=float(sigma), log_qent=float(lq), log_ratio=float(lr),
                eps_abs=float(eps),
            )))
    return rows

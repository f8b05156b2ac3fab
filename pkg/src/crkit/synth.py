"""Synthetic 2D Gaussian random fields with controllable correlation.

Samples are zero-mean Gaussian fields on a regular (m, n) grid with the
squared-exponential covariance

    cov(p, q) = variance * exp(-|p - q|^2 / a^2)

where a is the correlation range in grid units. Four sample types of
increasing spatial complexity are built from these:

1. a single correlation range;
2. a weighted sum of three ranges with fixed scalar weights;
3. three ranges mixed by spatial Gaussian-bump weight fields, which makes
   different areas of the grid carry different correlation strengths;
4. like 3 but with the three ranges drawn at random from short, medium,
   and long bands.

Sampling is exact for desk-scale grids: the separable kernel factors the
covariance as a Kronecker product of per-axis matrices, and each axis
factor comes from a symmetric eigendecomposition square root (Cholesky
fails on these numerically rank-deficient matrices; the eigh square root
factors the same covariance to machine precision). Larger grids switch to
circulant-embedding FFT sampling. Everything is deterministic given the
spec's seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import DataError, GridTooLargeForExactMethod, NonPositiveOmega
from .fields import ScalarField

# auto method switches to spectral above this per-axis extent; an explicit
# exact request is honored up to the hard limit
EXACT_AUTO_LIMIT = 128
EXACT_HARD_LIMIT = 256

SCALAR_WEIGHT_RANGE = (0.6, 1.2)
RANGE_BANDS = {"short": (2.0, 8.0), "medium": (8.0, 32.0), "long": (32.0, 128.0)}
DEFAULT_FIXED_RANGES = (4.0, 16.0, 64.0)
DEFAULT_SCALAR_WEIGHTS = (0.6, 0.9, 1.2)


@dataclass(frozen=True)
class GaussianSpec:
    grid: tuple[int, int]
    range_a: float
    variance: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if len(self.grid) != 2 or any(g < 2 for g in self.grid):
            raise DataError(f"grid extents must be >= 2, got {self.grid}")
        if not self.range_a > 0.0:
            raise DataError(f"correlation range must be positive, got {self.range_a}")
        if not self.variance > 0.0:
            raise DataError(f"variance must be positive, got {self.variance}")


@dataclass(frozen=True)
class SpatialWeightSpec:
    mu: tuple[float, float]
    omega: tuple[float, float]  # diagonal entries, grid units squared

    def __post_init__(self):
        if any(not w > 0.0 for w in self.omega):
            raise NonPositiveOmega(f"omega diagonal must be positive, got {self.omega}")


@dataclass(frozen=True)
class MultiscaleSpec:
    components: tuple[GaussianSpec, ...]
    weight_mode: str = "scalar"  # scalar | spatial
    scalar_weights: tuple[float, ...] | None = None
    spatial_params: tuple[SpatialWeightSpec, ...] | None = None
    range_mode: str = "fixed"  # fixed | random (bookkeeping for sidecars)
    seed: int = 0

    def __post_init__(self):
        L = len(self.components)
        if L < 1:
            raise DataError("need at least one component")
        if len({c.grid for c in self.components}) != 1:
            raise DataError("components must share the grid")
        if self.weight_mode == "scalar":
            if self.scalar_weights is None or len(self.scalar_weights) != L:
                raise DataError("scalar mode needs one weight per component")
            lo, hi = SCALAR_WEIGHT_RANGE
            if any(not lo <= w <= hi for w in self.scalar_weights):
                raise DataError(f"scalar weights must lie in [{lo}, {hi}]")
        elif self.weight_mode == "spatial":
            if self.spatial_params is None or len(self.spatial_params) != L:
                raise DataError("spatial mode needs one weight spec per component")
        else:
            raise DataError(f"unknown weight mode {self.weight_mode!r}")
        if self.range_mode not in ("fixed", "random"):
            raise DataError(f"unknown range mode {self.range_mode!r}")


def _axis_cov_sqrt(extent: int, range_a: float) -> np.ndarray:
    """B with B @ B.T equal to the 1D squared-exponential covariance."""
    x = np.arange(extent, dtype=np.float64)
    cov = np.exp(-((x[:, None] - x[None, :]) / range_a) ** 2)
    w, U = np.linalg.eigh(cov)
    return U * np.sqrt(np.clip(w, 0.0, None))


def _sample_exact(spec: GaussianSpec, rng: np.random.Generator) -> np.ndarray:
    m, n = spec.grid
    b_rows = _axis_cov_sqrt(m, spec.range_a)
    b_cols = _axis_cov_sqrt(n, spec.range_a)
    z = rng.standard_normal((m, n))
    return math.sqrt(spec.variance) * (b_rows @ z @ b_cols.T)


def _circulant_spectrum_1d(extent: int, range_a: float) -> np.ndarray:
    """Nonnegative DFT spectrum of the periodized 1D kernel, padding as needed."""
    period = 1 << max(1, int(math.ceil(math.log2(2 * extent))))
    while True:
        k = np.arange(period, dtype=np.float64)
        dist = np.minimum(k, period - k)
        spec = np.fft.fft(np.exp(-((dist / range_a) ** 2))).real
        if spec.min() >= -1e-9 * spec.max() or period >= 1 << 16:
            return np.clip(spec, 0.0, None)
        period *= 2


def _sample_spectral(spec: GaussianSpec, rng: np.random.Generator) -> np.ndarray:
    m, n = spec.grid
    s_rows = _circulant_spectrum_1d(m, spec.range_a)
    s_cols = _circulant_spectrum_1d(n, spec.range_a)
    m2, n2 = s_rows.size, s_cols.size
    lam = np.outer(s_rows, s_cols)
    noise = rng.standard_normal((m2, n2)) + 1j * rng.standard_normal((m2, n2))
    z = np.fft.fft2(np.sqrt(lam) * noise) / math.sqrt(m2 * n2)
    return math.sqrt(spec.variance) * z.real[:m, :n]


def sample_single_scale(spec: GaussianSpec, method: str = "auto") -> ScalarField:
    """One zero-mean field with the squared-exponential covariance.

    ``method`` is "exact" (covariance factorization), "spectral"
    (circulant embedding), or "auto" (exact for grids up to 128 per axis).
    The method is part of the sample identity: the two methods draw
    different noise for the same seed.
    """
    if method == "auto":
        method = "exact" if max(spec.grid) <= EXACT_AUTO_LIMIT else "spectral"
    rng = np.random.default_rng(spec.seed)
    if method == "exact":
        if max(spec.grid) > EXACT_HARD_LIMIT:
            raise GridTooLargeForExactMethod(
                f"exact factorization capped at {EXACT_HARD_LIMIT} per axis, "
                f"got {spec.grid}; use the spectral method"
            )
        values = _sample_exact(spec, rng)
    elif method == "spectral":
        values = _sample_spectral(spec, rng)
    else:
        raise DataError(f"unknown sampling method {method!r}")
    return ScalarField(values, origin_tag=f"gauss_a{spec.range_a:g}_s{spec.seed}",
                       element_type="f32")


def spatial_weight(grid: tuple[int, int], mu, omega) -> np.ndarray:
    """Unnormalized Gaussian bump on the grid; values in [0, 1], peak at mu."""
    m, n = grid
    mu0, mu1 = float(mu[0]), float(mu[1])
    om0, om1 = float(omega[0]), float(omega[1])
    if not (om0 > 0.0 and om1 > 0.0):
        raise NonPositiveOmega(f"omega diagonal must be positive, got {omega}")
    i = np.arange(m, dtype=np.float64)
    j = np.arange(n, dtype=np.float64)
    wi = np.exp(-0.5 * (i - mu0) ** 2 / om0)
    wj = np.exp(-0.5 * (j - mu1) ** 2 / om1)
    return np.outer(wi, wj)


def sample_multiscale(spec: MultiscaleSpec, method: str = "auto") -> ScalarField:
    """Pointwise weighted sum of independent single-scale samples."""
    grid = spec.components[0].grid
    total = np.zeros(grid, dtype=np.float64)
    for l, comp in enumerate(spec.components):
        sample = sample_single_scale(comp, method=method).values
        if spec.weight_mode == "scalar":
            total = total + spec.scalar_weights[l] * sample
        else:
            sw = spec.spatial_params[l]
            total = total + spatial_weight(grid, sw.mu, sw.omega) * sample
    tags = ",".join(f"{c.range_a:g}" for c in spec.components)
    return ScalarField(total, origin_tag=f"gauss_multi[{tags}]_s{spec.seed}",
                       element_type="f32")


def _component_seeds(seed: int, count: int) -> list[int]:
    state = np.random.SeedSequence(seed).generate_state(count, np.uint64)
    return [int(v) for v in state]


def draw_random_ranges(rng: np.random.Generator) -> tuple[float, float, float]:
    """One range per band (short, medium, long), log-uniform within the band."""
    out = []
    for band in ("short", "medium", "long"):
        lo, hi = RANGE_BANDS[band]
        out.append(float(np.exp(rng.uniform(np.log(lo), np.log(hi)))))
    return tuple(out)


def make_gaussian_sample(sample_type: int, grid=(128, 128), seed: int = 0,
                         range_a: float = 8.0,
                         fixed_ranges=DEFAULT_FIXED_RANGES,
                         scalar_weights=DEFAULT_SCALAR_WEIGHTS,
                         omega_frac: float = 4.0,
                         method: str = "auto"):
    """Build one benchmark sample of the given type; returns (field, sidecar).

    The sidecar dict records everything needed to regenerate the sample
    bit-for-bit (type, grid, ranges, weights, seeds).
    """
    grid = tuple(int(g) for g in grid)
    if sample_type == 1:
        comp_seed = _component_seeds(seed, 1)[0]
        gspec = GaussianSpec(grid=grid, range_a=float(range_a), seed=comp_seed)
        field = sample_single_scale(gspec, method=method)
        sidecar = {
            "sample_type": 1, "grid": list(grid), "seed": seed,
            "ranges": [float(range_a)], "weight_mode": "none",
            "range_mode": "fixed", "component_seeds": [comp_seed],
            "variance": 1.0, "element_type": field.element_type,
        }
        return field, sidecar
    if sample_type not in (2, 3, 4):
        raise DataError(f"sample type must be 1..4, got {sample_type}")

    seeds = _component_seeds(seed, 4)
    comp_seeds, aux_seed = seeds[:3], seeds[3]
    aux = np.random.default_rng(aux_seed)
    if sample_type == 4:
        ranges = draw_random_ranges(aux)
        range_mode = "random"
    else:
        ranges = tuple(float(r) for r in fixed_ranges)
        range_mode = "fixed"
    components = tuple(
        GaussianSpec(grid=grid, range_a=r, seed=s)
        for r, s in zip(ranges, comp_seeds)
    )
    sidecar = {
        "sample_type": sample_type, "grid": list(grid), "seed": seed,
        "ranges": list(ranges), "range_mode": range_mode,
        "component_seeds": comp_seeds, "variance": 1.0,
    }
    if sample_type == 2:
        mspec = MultiscaleSpec(components=components, weight_mode="scalar",
                               scalar_weights=tuple(scalar_weights),
                               range_mode=range_mode, seed=seed)
        sidecar["weight_mode"] = "scalar"
        sidecar["scalar_weights"] = list(mspec.scalar_weights)
    else:
        omega = ((grid[0] / omega_frac) ** 2, (grid[1] / omega_frac) ** 2)
        params = tuple(
            SpatialWeightSpec(
                mu=(float(aux.uniform(0, grid[0] - 1)),
                    float(aux.uniform(0, grid[1] - 1))),
                omega=omega,
            )
            for _ in range(3)
        )
        mspec = MultiscaleSpec(components=components, weight_mode="spatial",
                               spatial_params=params, range_mode=range_mode,
                               seed=seed)
        sidecar["weight_mode"] = "spatial"
        sidecar["spatial_params"] = [
            {"mu": list(p.mu), "omega": list(p.omega)} for p in params
        ]
    field = sample_multiscale(mspec, method=method)
    sidecar["element_type"] = field.element_type
    return field, sidecar

"""Model-guided drivers: error-bound search and compressor ranking.

Both replace repeated compressor executions with fitted-model inference.
The search driver builds a predicted CR(eps) curve from per-error-bound
models (log-log linear between the trained bounds), bisects it for the
target ratio, then spends real compressions only to confirm, re-anchoring
the curve at each measurement. The ranking driver extracts the field's
predictors once and runs one model inference per candidate compressor.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .codecs import measure_cr
from .errors import BudgetExhausted, ConfigError, DataError, TargetOutOfRange
from .fields import ScalarField
from .predictors import build_predictor_vectors
from .regression import FittedModel, predict_cr


@dataclass(frozen=True)
class TargetSpec:
    target_cr: float
    tolerance_pct: float = 5.0
    eps_bracket: tuple[float, float] = (1e-5, 1e-2)
    max_model_evals: int = 200
    max_real_evals: int = 4

    def __post_init__(self):
        if not self.target_cr > 1.0:
            raise DataError(f"target CR must exceed 1, got {self.target_cr}")
        if not 0.0 < self.tolerance_pct <= 50.0:
            raise DataError(f"tolerance must be in (0, 50]%, got {self.tolerance_pct}")
        lo, hi = self.eps_bracket
        if not 0.0 < lo < hi:
            raise DataError(f"need 0 < eps_lo < eps_hi, got {self.eps_bracket}")

    def within(self, cr: float) -> bool:
        return abs(cr - self.target_cr) <= self.tolerance_pct / 100.0 * self.target_cr


@dataclass(frozen=True)
class SearchResult:
    eps_star: float
    predicted_cr: float
    real_cr: float
    real_evals_used: int
    model_evals_used: int
    wall_time: float


class _PredictedCurve:
    """log CR as a piecewise-linear function of log eps through the knots."""

    def __init__(self, field: ScalarField, models: dict[float, FittedModel]):
        if len(models) < 2:
            raise ConfigError("need fitted models at >= 2 error bounds")
        self.knots = np.array(sorted(models))
        vectors = build_predictor_vectors(field, self.knots)
        self.log_knots = np.log(self.knots)
        self.log_cr = np.array([
            math.log(predict_cr(models[k], v))
            for k, v in zip(self.knots, vectors)
        ])
        self.model_evals = len(self.knots)

    def __call__(self, log_eps: float) -> float:
        self.model_evals += 1
        return float(np.interp(log_eps, self.log_knots, self.log_cr))


def _bisect_curve(curve, log_lo, log_hi, log_target, spec):
    """Bisect the (assumed monotone) predicted curve for the target log CR."""
    g_lo = curve(log_lo)
    g_hi = curve(log_hi)
    if not min(g_lo, g_hi) <= log_target <= max(g_lo, g_hi):
        raise TargetOutOfRange(
            f"target CR {math.exp(log_target):.4g} outside predicted range "
            f"[{math.exp(min(g_lo, g_hi)):.4g}, {math.exp(max(g_lo, g_hi)):.4g}]"
        )
    increasing = g_hi >= g_lo
    # aim for half the user tolerance so model bias has headroom
    tol_log = math.log1p(spec.tolerance_pct / 200.0)
    lo, hi = log_lo, log_hi
    mid = 0.5 * (lo + hi)
    while True:
        if curve.model_evals > spec.max_model_evals:
            raise BudgetExhausted(
                f"exceeded {spec.max_model_evals} model evaluations"
            )
        mid = 0.5 * (lo + hi)
        g = curve(mid)
        if abs(g - log_target) <= tol_log or hi - lo < 1e-12:
            return mid
        if (g < log_target) == increasing:
            lo = mid
        else:
            hi = mid


class _ShiftedCurve:
    """A predicted curve plus a log-space anchor correction."""

    def __init__(self, curve, shift):
        self._curve = curve
        self._shift = shift

    @property
    def model_evals(self):
        return self._curve.model_evals

    def __call__(self, log_eps):
        return self._curve(log_eps) + self._shift


def search_error_bound(field: ScalarField, compressor,
                       models: dict[float, FittedModel],
                       spec: TargetSpec) -> SearchResult:
    """Find an error bound whose measured CR hits the target within tolerance.

    Model inference does the navigation; real compressions only confirm.
    The first confirmation is always performed (the contract is a measured
    configuration, not an estimate). If it misses, the predicted curve is
    shifted in log space to pass through the measurement and re-inverted,
    up to ``spec.max_real_evals`` real compressions in total.
    """
    t0 = time.perf_counter()
    curve = _PredictedCurve(field, models)
    log_lo, log_hi = math.log(spec.eps_bracket[0]), math.log(spec.eps_bracket[1])
    if not (curve.log_knots[0] - 1e-12 <= log_lo
            and log_hi <= curve.log_knots[-1] + 1e-12):
        raise DataError("eps bracket extends beyond the trained error bounds")
    log_target = math.log(spec.target_cr)
    shift = 0.0
    real_evals = 0
    while True:
        log_eps = _bisect_curve(
            _ShiftedCurve(curve, shift), log_lo, log_hi, log_target, spec
        )
        eps_star = math.exp(log_eps)
        predicted = math.exp(curve(log_eps) + shift)
        result = measure_cr(field, compressor, eps_star)
        real_evals += 1
        if spec.within(result.cr):
            return SearchResult(
                eps_star=eps_star, predicted_cr=predicted, real_cr=result.cr,
                real_evals_used=real_evals, model_evals_used=curve.model_evals,
                wall_time=time.perf_counter() - t0,
            )
        if real_evals >= spec.max_real_evals:
            raise BudgetExhausted(
                f"no bound within {spec.tolerance_pct}% of CR "
                f"{spec.target_cr} after {real_evals} real compressions"
            )
        # re-anchor the curve at the measurement and invert again
        shift = math.log(result.cr) - curve(log_eps)


def baseline_compression_search(field: ScalarField, compressor,
                                target_cr: float, tolerance_pct: float,
                                eps_bracket=(1e-5, 1e-2),
                                max_evals: int = 64):
    """Plain bisection running the real compressor at every step.

    The reference procedure the model-guided search is benchmarked
    against: verify the bracket with two real compressions, then bisect in
    log eps until a measured CR lands within tolerance. Returns
    (eps, measured_cr, real_evals).
    """

    def within(cr):
        return abs(cr - target_cr) <= tolerance_pct / 100.0 * target_cr

    lo, hi = math.log(eps_bracket[0]), math.log(eps_bracket[1])
    cr_lo = measure_cr(field, compressor, eps_bracket[0]).cr
    evals = 1
    if within(cr_lo):
        return eps_bracket[0], cr_lo, evals
    cr_hi = measure_cr(field, compressor, eps_bracket[1]).cr
    evals += 1
    if within(cr_hi):
        return eps_bracket[1], cr_hi, evals
    if not min(cr_lo, cr_hi) <= target_cr <= max(cr_lo, cr_hi):
        raise TargetOutOfRange(
            f"target {target_cr:.4g} outside measured range "
            f"[{min(cr_lo, cr_hi):.4g}, {max(cr_lo, cr_hi):.4g}]"
        )
    increasing = cr_hi >= cr_lo
    while evals < max_evals:
        mid = 0.5 * (lo + hi)
        cr_mid = measure_cr(field, compressor, math.exp(mid)).cr
        evals += 1
        if within(cr_mid):
            return math.exp(mid), cr_mid, evals
        if (cr_mid < target_cr) == increasing:
            lo = mid
        else:
            hi = mid
    raise BudgetExhausted(f"bisection exceeded {max_evals} compressions")


@dataclass(frozen=True)
class RankEntry:
    compressor: str
    predicted_cr: float


@dataclass(frozen=True)
class RankingReport:
    entries: tuple[RankEntry, ...]
    chosen: str
    verified_cr: float | None
    wall_time: float


def rank_compressors(field: ScalarField, eps_abs: float,
                     models: dict[str, FittedModel],
                     verify: bool = False) -> RankingReport:
    """Order compressors by predicted CR at one bound; predictors run once.

    Ties break by compressor name ascending so reports are deterministic.
    With ``verify`` the top choice (only) is really run and its measured
    CR reported.
    """
    if len(models) < 2:
        raise ConfigError(f"need >= 2 compressors to rank, got {len(models)}")
    t0 = time.perf_counter()
    vector = build_predictor_vectors(field, [eps_abs])[0]
    entries = sorted(
        (RankEntry(name, predict_cr(model, vector))
         for name, model in models.items()),
        key=lambda e: (-e.predicted_cr, e.compressor),
    )
    chosen = entries[0].compressor
    verified = measure_cr(field, chosen, eps_abs).cr if verify else None
    return RankingReport(
        entries=tuple(entries), chosen=chosen, verified_cr=verified,
        wall_time=time.perf_counter() - t0,
    )

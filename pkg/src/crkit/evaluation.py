"""Cross-validated prediction-error evaluation.

The procedure: drop capped ratios (CR > 100), split the remaining
(predictors, CR) rows into k random folds, train on k-1 folds, predict the
held-out fold, record that fold's median absolute percentage error, and
report the 10/50/90% quantiles of the per-fold MedAPEs plus the Pearson
correlation pooled over all out-of-sample (true, predicted) pairs. Nothing
from a test fold touches the scaler, knots, penalty, or coefficients of
the model that predicts it.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from .codecs import CR_CAP
from .errors import EmptyInput, InsufficientSamples, ZeroTrueCR, ZeroVariance
from .folds import FoldAssignment, kfold_split
from .regression import train_model

log = logging.getLogger(__name__)

__all__ = [
    "FoldAssignment", "kfold_split", "EvalReport", "ape", "pearson",
    "quantiles", "choose_k", "evaluate_cv", "write_report_rows",
    "REPORT_COLUMNS",
]


def ape(true_cr: float, pred_cr: float) -> float:
    """Absolute percentage error, 100 * |true - pred| / |true|."""
    if true_cr == 0.0:
        raise ZeroTrueCR("true CR of zero has no percentage error")
    return 100.0 * abs(true_cr - pred_cr) / abs(true_cr)


def pearson(xs, ys) -> float:
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.size != ys.size or xs.size < 2:
        raise EmptyInput("correlation needs two same-length sequences, n >= 2")
    xd = xs - xs.mean()
    yd = ys - ys.mean()
    denom = math.sqrt(float(xd @ xd) * float(yd @ yd))
    if denom == 0.0:
        raise ZeroVariance("correlation undefined for a constant sequence")
    return float((xd @ yd) / denom)


def quantiles(values, probs=(0.1, 0.5, 0.9)) -> tuple[float, ...]:
    """Linear-interpolation sample quantiles (numpy's default, type 7)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise EmptyInput("quantiles of an empty sequence are undefined")
    if np.any((np.asarray(probs) < 0) | (np.asarray(probs) > 1)):
        raise EmptyInput("quantile probabilities must lie in [0, 1]")
    return tuple(float(q) for q in np.quantile(arr, probs))


def choose_k(n: int) -> int:
    """Default fold count: 8 for small training sets, 10 for larger ones."""
    return 8 if n < 80 else 10


@dataclass(frozen=True)
class EvalReport:
    fold_medapes: tuple[float, ...]
    medape_q10: float
    medape_q50: float
    medape_q90: float
    pearson_corr: float
    n_samples: int
    compressor: str = ""
    eps_abs: float = float("nan")
    model_kind: str = ""


def evaluate_cv(X, cr, model_kind: str = "spline", k: int | None = None,
                seed: int = 0, compressor: str = "",
                eps_abs: float = float("nan")) -> EvalReport:
    """Run the k-fold procedure over joined (predictor, ratio) rows.

    ``X`` is the (n, 2) raw log-predictor matrix (or PredictorVector list)
    and ``cr`` the matching measured compression ratios. Rows with capped
    ratios are excluded before fold assignment so folds stay balanced.
    """
    cr = np.asarray(cr, dtype=np.float64)
    X = np.asarray([v.as_log_pair() for v in X] if len(X) and hasattr(X[0], "as_log_pair") else X,
                   dtype=np.float64)
    keep = cr <= CR_CAP
    if not keep.all():
        log.info("excluding %d capped rows (CR > %g)", int((~keep).sum()), CR_CAP)
    X = X[keep]
    cr = cr[keep]
    n = len(cr)
    if k is None:
        k = choose_k(n)
    if n < k or k < 2:
        raise InsufficientSamples(f"need n >= k >= 2, got n={n}, k={k}")
    y = np.log(cr)
    fa = kfold_split(n, k, seed)
    fold_medapes = []
    pooled_true = []
    pooled_pred = []
    for train, test in fa.iter_folds():
        model = train_model(model_kind, X[train], y[train], seed=seed)
        yhat, _ = model.predict_log(X[test])
        pred_cr = np.exp(yhat)
        apes = [ape(t, p) for t, p in zip(cr[test], pred_cr)]
        fold_medapes.append(float(np.median(apes)))
        pooled_true.extend(cr[test])
        pooled_pred.extend(pred_cr)
    q10, q50, q90 = quantiles(fold_medapes)
    return EvalReport(
        fold_medapes=tuple(fold_medapes),
        medape_q10=q10, medape_q50=q50, medape_q90=q90,
        pearson_corr=pearson(pooled_true, pooled_pred),
        n_samples=n, compressor=compressor, eps_abs=eps_abs,
        model_kind=model_kind,
    )


REPORT_COLUMNS = ("compressor", "eps_abs", "model_kind", "pearson_corr",
                  "medape_q50", "medape_q10", "medape_q90", "n_samples")


def write_report_rows(path: str, reports) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_COLUMNS)
        for r in reports:
            w.writerow([r.compressor, repr(r.eps_abs), r.model_kind,
                        f"{r.pearson_corr:.6f}", f"{r.medape_q50:.6f}",
                        f"{r.medape_q10:.6f}", f"{r.medape_q90:.6f}",
                        r.n_samples])

"""Compression-ratio regression models.

All models work on the log scale: inputs are the two log predictors
(log quantized entropy, log of svd-trunc over sigma) and the target is
log(CR); predictions are exponentiated back. Predictors are standardized
(mean removed, divided by the population standard deviation) inside every
fit and the scaler travels with the model, so coefficient magnitudes are
comparable across predictors.

Three model kinds:

linear
    log CR = a + b*z1 + c*z2 + d*z1*z2 fitted by least squares, where z are
    the standardized log predictors and d weights their interaction.

lasso
    The same design with an L1 penalty, glmnet-style objective
    (1/2n)*RSS + lambda*|beta|_1, solved by coordinate descent over a
    descending lambda grid with the lambda chosen by internal k-fold CV
    (plain minimum CV error, no one-standard-error rule). Exact zeros mark
    insignificant predictors.

spline
    An additive model: intercept + cubic B-spline in each predictor
    (3 interior knots at the training 25/50/75% quantiles) + their
    tensor-product interaction, ridge-penalized jointly with the penalty
    weight chosen by generalized cross-validation over a fixed grid.

Models serialize to a versioned plain-text (JSON) record so fits are
diffable and portable.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.interpolate import BSpline

from .errors import (
    DataError,
    SingularDesign,
    TooFewRows,
    UntrainedModel,
    WrongModelKind,
)
from .folds import kfold_split
from .predictors import PredictorVector

log = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
PREDICTOR_NAMES = ("log_qent", "log_ratio", "interaction")
GCV_GAMMA_GRID = (1e-6, 1e-4, 1e-2, 1.0, 1e2)
LASSO_GRID_POINTS = 25
LASSO_GRID_DECADES = 2.0
MIN_SPLINE_ROWS = 12
SPLINE_DEGREE = 3
INTERIOR_KNOT_QUANTILES = (0.25, 0.50, 0.75)
# GCV's dof cost is inflated by the usual ~1.4 factor; plain GCV is known
# to undersmooth, and with a 49-column basis on a few dozen rows it happily
# spends 30+ effective dof on noise.
GCV_DOF_INFLATION = 1.4


@dataclass(frozen=True)
class StandardScaler:
    mean: np.ndarray
    std: np.ndarray  # 1.0 placeholder where constant
    constant: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "StandardScaler":
        X = np.asarray(X, dtype=np.float64)
        mean = X.mean(axis=0)
        std = X.std(axis=0)  # population form
        constant = std == 0.0
        return cls(mean=mean, std=np.where(constant, 1.0, std), constant=constant)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Z = (X - self.mean) / self.std
        if self.constant.any():
            Z[:, self.constant] = 0.0
        return Z


def standardize(X) -> tuple[StandardScaler, np.ndarray]:
    """Fit-and-apply scaler; each non-constant column comes out mean 0, std 1."""
    X = _as_matrix(X)
    if X.shape[0] < 2:
        raise TooFewRows("standardization needs at least 2 rows")
    scaler = StandardScaler.fit(X)
    return scaler, scaler.transform(X)


def _as_matrix(X) -> np.ndarray:
    """Accept (n, 2) arrays or sequences of PredictorVector."""
    if len(X) and isinstance(X[0], PredictorVector):
        X = [v.as_log_pair() for v in X]
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != 2:
        raise DataError(f"predictor matrix must be (n, 2), got {X.shape}")
    return X


@dataclass(frozen=True)
class LinearCoeffs:
    a: float
    b: float
    c: float
    d: float
    sigma_eps: float


@dataclass(frozen=True)
class MarginalBasis:
    kind: str  # "spline" | "linear"
    knots: np.ndarray | None  # full knot vector when spline

    @property
    def n_columns(self) -> int:
        if self.kind == "linear":
            return 1
        # cubic basis has len(knots) - degree - 1 functions; first dropped
        return len(self.knots) - SPLINE_DEGREE - 2

    def design(self, z: np.ndarray) -> np.ndarray:
        if self.kind == "linear":
            return z[:, None]
        lo, hi = self.knots[0], self.knots[-1]
        zc = np.clip(z, lo, hi)
        B = BSpline.design_matrix(zc, self.knots, SPLINE_DEGREE).toarray()
        return B[:, 1:]


@dataclass(frozen=True)
class SplineBasis:
    marginals: tuple[MarginalBasis, MarginalBasis]
    coefs: np.ndarray
    gamma: float
    edof: float


@dataclass
class FittedModel:
    kind: str
    scaler: StandardScaler
    coeffs: object  # LinearCoeffs | SplineBasis
    train_min: np.ndarray  # raw log-predictor space, per predictor
    train_max: np.ndarray
    meta: dict = dc_field(default_factory=dict)

    def predict_log(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Log-CR predictions plus an extrapolation flag per row."""
        X = _as_matrix(X)
        extrapolated = np.any((X < self.train_min) | (X > self.train_max), axis=1)
        Z = self.scaler.transform(X)
        if self.kind in ("linear", "lasso"):
            c = self.coeffs
            yhat = c.a + c.b * Z[:, 0] + c.c * Z[:, 1] + c.d * Z[:, 0] * Z[:, 1]
        elif self.kind == "spline":
            D = _spline_design(Z, self.coeffs.marginals)
            yhat = D @ self.coeffs.coefs
        else:
            raise WrongModelKind(f"unknown model kind {self.kind!r}")
        return yhat, extrapolated


def _design_linear(Z: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(len(Z)), Z[:, 0], Z[:, 1], Z[:, 0] * Z[:, 1]])


def fit_linear(X, y) -> FittedModel:
    """Least-squares fit of the interaction model on standardized logs."""
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] < 5:
        raise TooFewRows(f"linear model needs >= 5 rows, got {X.shape[0]}")
    scaler, Z = standardize(X)
    D = _design_linear(Z)
    beta, _, rank, _ = np.linalg.lstsq(D, y, rcond=None)
    if rank < D.shape[1]:
        raise SingularDesign(
            f"design rank {rank} < {D.shape[1]}; predictors collinear or constant"
        )
    resid = y - D @ beta
    coeffs = LinearCoeffs(a=float(beta[0]), b=float(beta[1]), c=float(beta[2]),
                          d=float(beta[3]), sigma_eps=float(np.std(resid)))
    return FittedModel(kind="linear", scaler=scaler, coeffs=coeffs,
                       train_min=X.min(axis=0), train_max=X.max(axis=0))


def _soft(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


def _coordinate_descent(D, y, lam, beta=None, max_iter=100_000, tol=1e-12):
    """Minimize (1/2n)||y - D beta||^2 + lam * |beta|_1; D and y pre-centered."""
    n, p = D.shape
    col_sq = (D * D).sum(axis=0) / n
    beta = np.zeros(p) if beta is None else beta.copy()
    r = y - D @ beta
    for _ in range(max_iter):
        delta = 0.0
        for j in range(p):
            if col_sq[j] == 0.0:
                continue
            old = beta[j]
            rho = (D[:, j] @ r) / n + col_sq[j] * old
            new = _soft(rho, lam) / col_sq[j]
            if new != old:
                r += D[:, j] * (old - new)
                delta = max(delta, abs(new - old))
                beta[j] = new
        if delta <= tol:
            break
    return beta


def lasso_lambda_max(X, y) -> float:
    """Smallest penalty that zeroes every slope: max |D_c^T y_c| / n."""
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    _, Z = standardize(X)
    D = _design_linear(Z)[:, 1:]
    Dc = D - D.mean(axis=0)
    yc = y - y.mean()
    return float(np.abs(Dc.T @ yc).max() / len(y))


def default_lambda_grid(lam_max: float) -> np.ndarray:
    if lam_max <= 0.0:
        return np.array([0.0])
    return lam_max * np.logspace(0.0, -LASSO_GRID_DECADES, LASSO_GRID_POINTS)


@dataclass(frozen=True)
class ImportanceEntry:
    predictor: str
    magnitude: float
    significant: bool


def fit_lasso(X, y, lambda_grid=None, k: int = 8, seed: int = 0):
    """L1-penalized fit; returns (model, importance ranking).

    With more than one grid point the penalty is chosen by k-fold CV over
    the training rows (minimum mean squared error; descending grids break
    ties toward the stronger penalty). Coefficients exactly at zero are
    reported insignificant.
    """
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    if n < 5:
        raise TooFewRows(f"lasso needs >= 5 rows, got {n}")
    if lambda_grid is None:
        lambda_grid = default_lambda_grid(lasso_lambda_max(X, y))
    lambda_grid = np.atleast_1d(np.asarray(lambda_grid, dtype=np.float64))
    if np.any(lambda_grid < 0.0):
        raise DataError("lambda grid must be non-negative")

    def _fit_at(Xf, yf, lam, warm=None):
        scaler, Z = standardize(Xf)
        D = _design_linear(Z)[:, 1:]
        col_mean = D.mean(axis=0)
        Dc = D - col_mean
        ybar = yf.mean()
        beta = _coordinate_descent(Dc, yf - ybar, lam, beta=warm)
        a = ybar - beta @ col_mean
        return scaler, a, beta

    if lambda_grid.size > 1:
        kk = max(2, min(k, n))
        fa = kfold_split(n, kk, seed)
        cv_mse = np.zeros(lambda_grid.size)
        for train, test in fa.iter_folds():
            warm = None
            for li, lam in enumerate(lambda_grid):
                scaler, a, beta = _fit_at(X[train], y[train], lam, warm)
                warm = beta
                Zt = scaler.transform(X[test])
                Dt = _design_linear(Zt)[:, 1:]
                pred = a + Dt @ beta
                cv_mse[li] += ((y[test] - pred) ** 2).sum()
        cv_mse /= n
        best = int(np.argmin(cv_mse))
        lam_star = float(lambda_grid[best])
        meta = {"lambda": lam_star, "cv_mse": float(cv_mse[best]),
                "lambda_grid": lambda_grid.tolist()}
    else:
        lam_star = float(lambda_grid[0])
        meta = {"lambda": lam_star}

    scaler, a, beta = _fit_at(X, y, lam_star)
    Z = scaler.transform(X)
    D = _design_linear(Z)
    resid = y - (D[:, 1:] @ beta + a)
    coeffs = LinearCoeffs(a=float(a), b=float(beta[0]), c=float(beta[1]),
                          d=float(beta[2]), sigma_eps=float(np.std(resid)))
    model = FittedModel(kind="lasso", scaler=scaler, coeffs=coeffs,
                        train_min=X.min(axis=0), train_max=X.max(axis=0),
                        meta=meta)
    return model, predictor_importance(model)


def predictor_importance(model: FittedModel) -> list[ImportanceEntry]:
    """Absolute standardized coefficients, descending; zeros are insignificant."""
    if model.kind != "lasso":
        raise WrongModelKind(f"importance needs a lasso model, got {model.kind!r}")
    c = model.coeffs
    mags = [abs(c.b), abs(c.c), abs(c.d)]
    order = sorted(range(3), key=lambda i: (-mags[i], i))
    return [ImportanceEntry(PREDICTOR_NAMES[i], mags[i], mags[i] != 0.0)
            for i in order]


def _make_marginal(z: np.ndarray) -> MarginalBasis:
    """Cubic basis with interior knots at quantiles; linear if degenerate.

    Knots sit on inverted-CDF quantiles (actual order statistics), so knot
    placement does not move when the dataset is replicated.
    """
    distinct = np.unique(z)
    if distinct.size <= 3:
        return MarginalBasis(kind="linear", knots=None)
    interior = np.quantile(z, INTERIOR_KNOT_QUANTILES, method="inverted_cdf")
    lo, hi = float(z.min()), float(z.max())
    seq = [lo, *interior.tolist(), hi]
    if any(b - a <= 0.0 for a, b in zip(seq, seq[1:])):
        return MarginalBasis(kind="linear", knots=None)
    knots = np.concatenate([[lo] * (SPLINE_DEGREE + 1), interior,
                            [hi] * (SPLINE_DEGREE + 1)])
    return MarginalBasis(kind="spline", knots=knots)


def _spline_design(Z: np.ndarray, marginals) -> np.ndarray:
    B1 = marginals[0].design(Z[:, 0])
    B2 = marginals[1].design(Z[:, 1])
    tensor = (B1[:, :, None] * B2[:, None, :]).reshape(len(Z), -1)
    return np.column_stack([np.ones(len(Z)), B1, B2, tensor])


def fit_spline_gam(X, y, gamma_grid=GCV_GAMMA_GRID) -> FittedModel:
    """Ridge-penalized additive spline fit with GCV-chosen penalty.

    The penalty multiplies the identity over every coefficient except the
    intercept, in the per-row objective RSS/n + gamma * |beta_s|^2. GCV
    counts distinct (x, y) rows as its sample size: exact duplicates carry
    no information for smoothness selection, and this keeps the whole fit
    (penalty choice included) invariant to replicating the dataset. On
    duplicate-free data it is ordinary GCV.
    """
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    if n < MIN_SPLINE_ROWS:
        raise TooFewRows(f"spline model needs >= {MIN_SPLINE_ROWS} rows, got {n}")
    scaler, Z = standardize(X)
    marginals = (_make_marginal(Z[:, 0]), _make_marginal(Z[:, 1]))
    D = _spline_design(Z, marginals)
    p = D.shape[1]
    penalty = np.ones(p)
    penalty[0] = 0.0
    A = D.T @ D / n
    b = D.T @ y / n
    n_eff = np.unique(np.column_stack([X, y]), axis=0).shape[0]
    best = None
    for gamma in gamma_grid:
        M = A + gamma * np.diag(penalty)
        try:
            coefs = np.linalg.solve(M, b)
            edof = float(np.trace(np.linalg.solve(M, A)))
        except np.linalg.LinAlgError:
            continue
        msr = float(((y - D @ coefs) ** 2).mean())
        if n_eff - GCV_DOF_INFLATION * edof <= 0.5:
            continue
        gcv = msr / (1.0 - GCV_DOF_INFLATION * edof / n_eff) ** 2
        if best is None or gcv < best[0]:
            best = (gcv, gamma, coefs, edof)
    if best is None:
        raise SingularDesign("spline system unsolvable at every penalty")
    _, gamma, coefs, edof = best
    basis = SplineBasis(marginals=marginals, coefs=coefs, gamma=float(gamma),
                        edof=edof)
    return FittedModel(kind="spline", scaler=scaler, coeffs=basis,
                       train_min=X.min(axis=0), train_max=X.max(axis=0),
                       meta={"gamma": float(gamma), "edof": edof})


def train_model(kind: str, X, y, lambda_grid=None, seed: int = 0) -> FittedModel:
    """Fit by kind; sparse spline inputs degrade to the linear model."""
    if kind == "linear":
        return fit_linear(X, y)
    if kind == "lasso":
        return fit_lasso(X, y, lambda_grid=lambda_grid, seed=seed)[0]
    if kind == "spline":
        n = len(X)
        if n < MIN_SPLINE_ROWS:
            log.warning("only %d rows; spline model degraded to linear", n)
            return fit_linear(X, y)
        return fit_spline_gam(X, y)
    raise WrongModelKind(f"unknown model kind {kind!r}")


def predict_cr(model: FittedModel, v, return_flag: bool = False):
    """CR prediction (back on the original scale) for one predictor vector.

    With ``return_flag`` also reports whether the input lies outside the
    training range of either predictor (spline bases evaluate clamped to
    the training interval; the prediction is still returned).
    """
    if model is None or model.coeffs is None:
        raise UntrainedModel("model has no coefficients")
    if isinstance(v, PredictorVector):
        row = np.array([v.as_log_pair()])
    else:
        row = np.asarray(v, dtype=np.float64).reshape(1, 2)
    yhat, extra = model.predict_log(row)
    cr = float(np.exp(yhat[0]))
    if return_flag:
        return cr, bool(extra[0])
    return cr


def _scaler_to_json(s: StandardScaler) -> dict:
    return {"mean": s.mean.tolist(), "std": s.std.tolist(),
            "constant": s.constant.astype(bool).tolist()}


def _scaler_from_json(d: dict) -> StandardScaler:
    return StandardScaler(mean=np.asarray(d["mean"]), std=np.asarray(d["std"]),
                          constant=np.asarray(d["constant"], dtype=bool))


def save_model(model: FittedModel, path: str) -> None:
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "scaler": _scaler_to_json(model.scaler),
        "train_min": model.train_min.tolist(),
        "train_max": model.train_max.tolist(),
        "meta": model.meta,
    }
    if model.kind in ("linear", "lasso"):
        c = model.coeffs
        doc["coeffs"] = {"a": c.a, "b": c.b, "c": c.c, "d": c.d,
                         "sigma_eps": c.sigma_eps}
    else:
        basis = model.coeffs
        doc["coeffs"] = {
            "gamma": basis.gamma,
            "edof": basis.edof,
            "coefs": basis.coefs.tolist(),
            "marginals": [
                {"kind": mb.kind,
                 "knots": None if mb.knots is None else mb.knots.tolist()}
                for mb in basis.marginals
            ],
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path: str) -> FittedModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise DataError(f"{path}: unsupported model format "
                        f"{doc.get('format_version')!r}")
    kind = doc["kind"]
    if kind in ("linear", "lasso"):
        c = doc["coeffs"]
        coeffs = LinearCoeffs(a=c["a"], b=c["b"], c=c["c"], d=c["d"],
                              sigma_eps=c["sigma_eps"])
    elif kind == "spline":
        c = doc["coeffs"]
        marginals = tuple(
            MarginalBasis(kind=m["kind"],
                          knots=None if m["knots"] is None else np.asarray(m["knots"]))
            for m in c["marginals"]
        )
        coeffs = SplineBasis(marginals=marginals,
                             coefs=np.asarray(c["coefs"]),
                             gamma=c["gamma"], edof=c["edof"])
    else:
        raise DataError(f"{path}: unknown model kind {kind!r}")
    return FittedModel(
        kind=kind,
        scaler=_scaler_from_json(doc["scaler"]),
        coeffs=coeffs,
        train_min=np.asarray(doc["train_min"]),
        train_max=np.asarray(doc["train_max"]),
        meta=doc.get("meta", {}),
    )

"""Predicting fine-tuned accuracy and chain length from training-set features.

The regressor is Bayesian ridge regression fitted by evidence maximization on
standardized features and a centered target. Naming follows the usual
textbook convention: ``alpha`` is the precision of the weight prior and
``beta`` the precision of the observation noise.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .core import FEATURE_NAMES, TARGET_NAMES, CompressionTrajectory, FeatureRow
from .metrics import perplexity

_EPS = np.finfo(np.float64).eps


class EstimatorError(ValueError):
    pass


class SingularPrecisionError(EstimatorError):
    def __init__(self, condition: float):
        self.condition = condition
        super().__init__(f"posterior precision matrix is numerically singular (condition ~ {condition:.3e})")


# -- features ----------------------------------------------------------------


def extract_features(
    trajectories: Sequence[CompressionTrajectory],
    *,
    original_acc: float,
    compressor_acc: float,
    target_acc: Optional[float] = None,
    target_len: Optional[float] = None,
    ppls: Optional[Sequence[float]] = None,
    label: str = "",
) -> FeatureRow:
    """Assemble one feature row from a training set's compression trajectories.

    ``ppls`` gives the perplexity of each selected chain; when omitted it is
    computed from the selected traces' own log-probabilities.
    """
    sel = [t for t in trajectories if t.selected is not None]
    if not sel:
        raise EstimatorError("no trajectories with a selected chain")
    rates = [t.rates[t.selected_index] for t in sel]
    if ppls is None:
        if any(not t.selected.logprobs for t in sel):
            raise EstimatorError("compressed_ppl unavailable: selected chains carry no logprobs")
        ppls = [perplexity(t.selected.logprobs) for t in sel]
    elif len(ppls) != len(sel):
        raise EstimatorError(f"got {len(ppls)} perplexities for {len(sel)} selected chains")
    parts = {
        "compression_rate": math.fsum(rates) / len(rates),
        "compressed_ppl": math.fsum(ppls) / len(ppls),
        "original_len": math.fsum(t.rounds[0].token_count for t in sel) / len(sel),
        "original_acc": original_acc,
        "compressor_acc": compressor_acc,
        "target_acc": target_acc,
        "target_len": target_len,
    }
    for name, v in parts.items():
        if v is not None and not math.isfinite(v):
            raise EstimatorError(f"{name} is not finite ({v})")
    return FeatureRow(label=label, **parts)


def feature_matrix(rows: Sequence[FeatureRow]) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([r.features() for r in rows], dtype=float)
    Y = np.array([r.targets() for r in rows], dtype=float)
    return X, Y


def write_feature_csv(path, rows: Sequence[FeatureRow]) -> None:
    header = list(FEATURE_NAMES) + list(TARGET_NAMES) + ["label"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        w.writeheader()
        for r in rows:
            d = r.to_dict()
            w.writerow({k: ("" if d[k] is None else (repr(d[k]) if isinstance(d[k], float) else d[k])) for k in header})


def read_feature_csv(path) -> list[FeatureRow]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            missing = [n for n in FEATURE_NAMES if n not in rec]
            if missing:
                raise EstimatorError(f"{path}: missing feature columns {missing}")
            vals = {n: float(rec[n]) for n in FEATURE_NAMES}
            for n in TARGET_NAMES:
                vals[n] = float(rec[n]) if rec.get(n) not in (None, "") else None
            rows.append(FeatureRow(label=rec.get("label") or "", **vals))
    return rows


# -- standardization -----------------------------------------------------------


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.std

    def inverse(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=float) * self.std + self.mean


def standardize(X) -> tuple[np.ndarray, Standardizer]:
    """Zero-mean, unit-(population)-variance columns; constant columns map to zeros."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise EstimatorError("standardize needs a 2-d array with at least 2 rows")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    # summation error leaves constant columns with std ~ 1e-17, not 0
    const = std <= 1e-12 * np.maximum(np.abs(mean), 1.0)
    std = np.where(const, 1.0, std)
    st = Standardizer(mean, std)
    Z = st.transform(X)
    Z[:, const] = 0.0
    return Z, st


# -- Bayesian ridge -------------------------------------------------------------


@dataclass
class RidgeModel:
    weight_mean: np.ndarray  # in standardized feature units
    intercept: float
    precision: np.ndarray
    alpha: float
    beta: float
    standardizer: Standardizer
    converged: bool = True
    n_iter: int = 0
    feature_names: tuple = ()
    _cov: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def covariance(self) -> np.ndarray:
        if self._cov is None:
            self._cov = np.linalg.inv(self.precision)
        return self._cov

    @property
    def coef(self) -> np.ndarray:
        """Weights in original feature units."""
        return self.weight_mean / self.standardizer.std

    @property
    def original_intercept(self) -> float:
        return float(self.intercept - self.coef @ self.standardizer.mean)

    def weight_std(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))

    def predict(self, X) -> tuple[np.ndarray, np.ndarray]:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.weight_mean.shape[0]:
            raise EstimatorError(f"expected {self.weight_mean.shape[0]} features, got {X.shape[1]}")
        Z = self.standardizer.transform(X)
        mean = Z @ self.weight_mean + self.intercept
        var = 1.0 / self.beta + np.einsum("ij,jk,ik->i", Z, self.covariance, Z)
        if single:
            return mean[:1], var[:1]
        return mean, var

    def to_dict(self) -> dict:
        return {
            "weight_mean": self.weight_mean.tolist(),
            "intercept": self.intercept,
            "precision_matrix": self.precision.tolist(),
            "alpha": self.alpha,
            "beta": self.beta,
            "standardizer": {"mean": self.standardizer.mean.tolist(), "std": self.standardizer.std.tolist()},
            "converged": self.converged,
            "n_iter": self.n_iter,
            "feature_names": list(self.feature_names),
        }

    @classmethod
    def from_dict(cls, d: dict) -> RidgeModel:
        return cls(
            weight_mean=np.array(d["weight_mean"], dtype=float),
            intercept=float(d["intercept"]),
            precision=np.array(d["precision_matrix"], dtype=float),
            alpha=float(d["alpha"]),
            beta=float(d["beta"]),
            standardizer=Standardizer(
                np.array(d["standardizer"]["mean"], dtype=float), np.array(d["standardizer"]["std"], dtype=float)
            ),
            converged=bool(d.get("converged", True)),
            n_iter=int(d.get("n_iter", 0)),
            feature_names=tuple(d.get("feature_names", ())),
        )


def fit_bayes_ridge(
    X,
    y,
    a1: float = 1e-6,
    a2: float = 1e-6,
    l1: float = 1e-6,
    l2: float = 1e-6,
    max_iter: int = 300,
    tol: float = 1e-4,
    feature_names: Sequence[str] = (),
) -> RidgeModel:
    """Evidence-maximization fit.

    ``a1, a2`` are the Gamma hyperprior shape/rate on the weight precision,
    ``l1, l2`` those on the noise precision.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise EstimatorError(f"shape mismatch: X {X.shape}, y {y.shape}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise EstimatorError("inputs contain NaN or infinity")
    n = X.shape[0]
    Z, st = standardize(X)
    y_mean = float(y.mean())
    yc = y - y_mean

    eigval, V = np.linalg.eigh(Z.T @ Z)
    eigval = np.clip(eigval, 0.0, None)
    Vty = V.T @ (Z.T @ yc)

    alpha = 1.0
    beta = 1.0 / (float(np.var(y)) + _EPS)

    def posterior_mean(alpha, beta):
        return beta * (V @ (Vty / (alpha + beta * eigval)))

    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        m = posterior_mean(alpha, beta)
        gamma = float(np.sum(beta * eigval / (alpha + beta * eigval)))
        rss = float(np.sum((yc - Z @ m) ** 2))
        alpha_new = (gamma + 2.0 * a1) / (float(m @ m) + 2.0 * a2)
        beta_new = (n - gamma + 2.0 * l1) / (rss + 2.0 * l2)
        if not (0.0 < alpha_new < math.inf and 0.0 < beta_new < math.inf):
            # a precision that under- or overflows means the posterior has collapsed
            raise SingularPrecisionError(math.inf)
        done = abs(alpha_new - alpha) / alpha < tol and abs(beta_new - beta) / beta < tol
        alpha, beta = alpha_new, beta_new
        if done:
            converged = True
            break

    d = alpha + beta * eigval
    cond = float(d.max() / d.min()) if d.min() > 0 else math.inf
    if cond > 1.0 / _EPS:
        raise SingularPrecisionError(cond)
    m = posterior_mean(alpha, beta)
    precision = (V * d) @ V.T
    cov = (V / d) @ V.T
    return RidgeModel(
        weight_mean=m,
        intercept=y_mean,
        precision=precision,
        alpha=alpha,
        beta=beta,
        standardizer=st,
        converged=converged,
        n_iter=it,
        feature_names=tuple(feature_names),
        _cov=cov,
    )


# -- joint predictor -------------------------------------------------------------


@dataclass(frozen=True)
class JointPrediction:
    mu: tuple[float, float]
    sigma: tuple[float, float]
    rho: float

    def covariance(self) -> np.ndarray:
        s1, s2 = self.sigma
        c = self.rho * s1 * s2
        return np.array([[s1 * s1, c], [c, s2 * s2]])

    def to_dict(self) -> dict:
        return {"mu": list(self.mu), "sigma": list(self.sigma), "rho": self.rho}


@dataclass
class JointModel:
    acc: RidgeModel
    length: RidgeModel
    rho: float
    degenerate: bool = False

    def predict(self, x) -> JointPrediction:
        m1, v1 = self.acc.predict(np.asarray(x, dtype=float).ravel())
        m2, v2 = self.length.predict(np.asarray(x, dtype=float).ravel())
        return JointPrediction(
            mu=(float(m1[0]), float(m2[0])),
            sigma=(math.sqrt(v1[0]), math.sqrt(v2[0])),
            rho=self.rho,
        )

    def to_dict(self) -> dict:
        return {
            "acc": self.acc.to_dict(),
            "len": self.length.to_dict(),
            "rho": self.rho,
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> JointModel:
        return cls(RidgeModel.from_dict(d["acc"]), RidgeModel.from_dict(d["len"]), float(d["rho"]), bool(d["degenerate"]))


def fit_joint(X, Y, **fit_kwargs) -> JointModel:
    """Fit accuracy and length models independently; correlate their residuals."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[1] != 2:
        raise EstimatorError("Y must have exactly two target columns (acc, len)")
    if not np.all(np.isfinite(Y)):
        raise EstimatorError("targets contain NaN or infinity")
    models = [fit_bayes_ridge(X, Y[:, j], **fit_kwargs) for j in range(2)]
    residuals = [Y[:, j] - models[j].predict(X)[0] for j in range(2)]
    degenerate = False
    for j in range(2):
        spread = np.linalg.norm(Y[:, j] - Y[:, j].mean())
        res = residuals[j] - residuals[j].mean()
        if np.linalg.norm(res) <= 1e-8 * max(spread, 1e-300):
            degenerate = True
    if degenerate:
        rho = 0.0
    else:
        rho = float(np.clip(pearson(residuals[0], residuals[1])[0], -1.0, 1.0))
    return JointModel(models[0], models[1], rho, degenerate)


# -- statistics -----------------------------------------------------------------


def pearson(x, y) -> tuple[float, float]:
    """Pearson r with an exact two-sided p-value from the Student-t distribution."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[0]
    if n != y.shape[0]:
        raise EstimatorError("x and y have different lengths")
    if n < 3:
        raise EstimatorError("pearson needs at least 3 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise EstimatorError("zero variance input")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    return r, pearson_pvalue(r, n)


def pearson_pvalue(r: float, n: int) -> float:
    """Two-sided p for H0: rho = 0.

    With t = r*sqrt(df/(1-r^2)), P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2), and
    df/(df+t^2) simplifies to 1 - r^2, which avoids forming t near |r| = 1.
    """
    if abs(r) >= 1.0:
        return 0.0
    df = n - 2
    return float(special.betainc(df / 2.0, 0.5, 1.0 - r * r))


def r_squared(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape[0] < 2:
        raise EstimatorError("r_squared needs at least 2 points")
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0:
        raise EstimatorError("y_true has zero variance")
    return 1.0 - float(np.sum((y_true - y_pred) ** 2)) / ss_tot


@dataclass(frozen=True)
class CVResult:
    fold_r2: tuple[float, ...]
    folds: tuple[tuple[int, ...], ...]

    @property
    def mean_r2(self) -> float:
        return float(np.mean(self.fold_r2))


def kfold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    if n < k:
        raise EstimatorError(f"need at least k={k} rows, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, k)


def kfold_cv(X, y, k: int = 5, seed: int = 0, **fit_kwargs) -> CVResult:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    folds = kfold_indices(X.shape[0], k, seed)
    scores = []
    for test in folds:
        train = np.setdiff1d(np.arange(X.shape[0]), test)
        model = fit_bayes_ridge(X[train], y[train], **fit_kwargs)
        scores.append(r_squared(y[test], model.predict(X[test])[0]))
    return CVResult(tuple(scores), tuple(tuple(int(i) for i in f) for f in folds))

"""A self-contained treatment-effect simulation study.

The data generating process has ten covariates, a confounded binary
treatment and two outcomes::

    X1..X5 ~ U(0, 1),  X6..X8 ~ Bernoulli(0.5),  X9, X10 uniform on {0,..,4}
    P(Z = 1 | X) = X4
    mu1 = 300 + 110 sin(pi X1 X2) + 180 (X3 - 0.5)^2 + 100 X4 + 120 X6 + 10 X9
    tau1 = 20 X4 + 20 X5
    mu2 = 300 +  90 sin(pi X1 X2) + 220 (X3 - 0.5)^2 + 140 X4 +  80 X6 + 10 X9
    tau2 = 10 X4 + 30 X5
    Yk = muk + tauk Z + epsk,  eps ~ N(0, 50^2 I)

Two linear CATE estimators are fitted per outcome and scored with PEHE,
interval coverage and interval length, both per unit and for the ATE.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import LengthMismatch, SingularDesign

N_COVARIATES = 10
NOISE_SD = 50.0
_X4, _X5 = 3, 4


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    z: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    tau1: np.ndarray
    tau2: np.ndarray
    mu1: np.ndarray
    mu2: np.ndarray

    def __len__(self):
        return self.X.shape[0]

    def outcome(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """``(y, tau)`` for outcome 1 or 2."""
        if k == 1:
            return self.y1, self.tau1
        if k == 2:
            return self.y2, self.tau2
        raise ValueError(f"outcome must be 1 or 2, got {k}")


def generate_dgp1(n: int, seed=None) -> Dataset:
    """Draw ``n`` units from the two-outcome DGP described in the module docstring.

    ``seed`` may be an int, a ``numpy.random.Generator`` or None.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    rng = np.random.default_rng(seed)
    X = np.empty((n, N_COVARIATES))
    X[:, 0:5] = rng.uniform(0.0, 1.0, size=(n, 5))
    X[:, 5:8] = rng.binomial(1, 0.5, size=(n, 3))
    X[:, 8:10] = rng.integers(0, 5, size=(n, 2))
    z = (rng.uniform(size=n) < X[:, _X4]).astype(np.int64)

    x1, x2, x3, x4, x5, x6, x9 = (X[:, i] for i in (0, 1, 2, 3, 4, 5, 8))
    wave = np.sin(np.pi * x1 * x2)
    mu1 = 300 + 110 * wave + 180 * (x3 - 0.5) ** 2 + 100 * x4 + 120 * x6 + 10 * x9
    mu2 = 300 + 90 * wave + 220 * (x3 - 0.5) ** 2 + 140 * x4 + 80 * x6 + 10 * x9
    tau1 = 20 * x4 + 20 * x5
    tau2 = 10 * x4 + 30 * x5
    eps = rng.normal(0.0, NOISE_SD, size=(n, 2))
    y1 = mu1 + tau1 * z + eps[:, 0]
    y2 = mu2 + tau2 * z + eps[:, 1]
    return Dataset(X, z, y1, y2, tau1, tau2, mu1, mu2)


# -- estimators ---------------------------------------------------------------

@dataclass(frozen=True)
class EstimatorOutput:
    tau_hat: np.ndarray
    tau_lower: np.ndarray
    tau_upper: np.ndarray
    ate_hat: float
    ate_lower: float
    ate_upper: float


def _ols(design: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least squares coefficients and their estimated covariance."""
    n, p = design.shape
    if n <= p or np.linalg.matrix_rank(design) < p:
        raise SingularDesign(f"design with {n} rows and {p} columns is rank deficient")
    xtx_inv = np.linalg.inv(design.T @ design)
    beta = xtx_inv @ (design.T @ y)
    resid = y - design @ beta
    sigma2 = float(resid @ resid) / (n - p)
    return beta, sigma2 * xtx_inv


def _with_intercept(X: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(X.shape[0]), X])


def _quadratic_form(G: np.ndarray, cov: np.ndarray) -> np.ndarray:
    return np.einsum("ij,jk,ik->i", G, cov, G)


class _LinearCATE(BaseEstimator):
    """Shared interval and ATE logic for the linear learners.

    Subclasses define ``_effect_rows(X)``, the rows ``g`` with
    ``tau_hat = g @ coef_`` and ``var(tau_hat) = g @ cov_ @ g``.
    """

    def __init__(self, level: float = 0.95):
        self.level = level

    def _z(self) -> float:
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie in (0, 1)")
        return float(stats.norm.ppf(0.5 + self.level / 2.0))

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        return self._effect_rows(check_array(X)) @ self.coef_

    def predict_interval(self, X) -> tuple[np.ndarray, np.ndarray]:
        check_is_fitted(self, "coef_")
        G = self._effect_rows(check_array(X))
        tau = G @ self.coef_
        half = self._z() * np.sqrt(_quadratic_form(G, self.cov_))
        return tau - half, tau + half

    def effect(self, X) -> EstimatorOutput:
        """Per-unit CATE estimates with intervals, plus the ATE over ``X``."""
        check_is_fitted(self, "coef_")
        G = self._effect_rows(check_array(X))
        tau = G @ self.coef_
        half = self._z() * np.sqrt(_quadratic_form(G, self.cov_))
        g_bar = G.mean(axis=0)
        ate = float(g_bar @ self.coef_)
        ate_half = self._z() * math.sqrt(float(g_bar @ self.cov_ @ g_bar))
        return EstimatorOutput(tau, tau - half, tau + half, ate, ate - ate_half, ate + ate_half)


class TLearner(_LinearCATE):
    """Separate OLS fits on treated and control units; CATE is their difference."""

    def fit(self, X, y, z):
        X, y = check_X_y(X, y, y_numeric=True)
        z = np.asarray(z).ravel()
        if z.shape[0] != X.shape[0]:
            raise LengthMismatch("z must have one entry per row of X")
        treated = z == 1
        d = _with_intercept(X)
        beta1, cov1 = _ols(d[treated], y[treated])
        beta0, cov0 = _ols(d[~treated], y[~treated])
        p = d.shape[1]
        # stacked [beta1, beta0]; tau_hat = [g, -g] @ coef_
        self.coef_ = np.concatenate([beta1, beta0])
        self.cov_ = np.zeros((2 * p, 2 * p))
        self.cov_[:p, :p] = cov1
        self.cov_[p:, p:] = cov0
        self.n_features_in_ = X.shape[1]
        return self

    def _effect_rows(self, X):
        d = _with_intercept(X)
        return np.hstack([d, -d])


class SLearner(_LinearCATE):
    """One OLS fit of y on (X, Z, X4*Z, X5*Z); CATE comes from the Z block."""

    def fit(self, X, y, z):
        X, y = check_X_y(X, y, y_numeric=True)
        z = np.asarray(z, dtype=float).ravel()
        if z.shape[0] != X.shape[0]:
            raise LengthMismatch("z must have one entry per row of X")
        d = np.column_stack([_with_intercept(X), z, X[:, _X4] * z, X[:, _X5] * z])
        beta, cov = _ols(d, y)
        self.coef_ = beta[-3:]
        self.cov_ = cov[-3:, -3:]
        self.n_features_in_ = X.shape[1]
        return self

    def _effect_rows(self, X):
        return np.column_stack([np.ones(X.shape[0]), X[:, _X4], X[:, _X5]])


ESTIMATORS = {"tlearner": TLearner, "slearner": SLearner}


def fit_estimators(train: Dataset, test: Dataset, level: float = 0.95) -> dict:
    """Fit every built-in learner on each outcome of ``train``.

    Returns ``{(estimator_name, outcome): EstimatorOutput}`` evaluated on
    the units of ``test``.
    """
    out = {}
    for name, cls in ESTIMATORS.items():
        for k in (1, 2):
            y, _ = train.outcome(k)
            est = cls(level=level).fit(train.X, y, train.z)
            out[name, k] = est.effect(test.X)
    return out


# -- metrics ------------------------------------------------------------------

@dataclass(frozen=True)
class PerRunMetrics:
    pehe: float
    cate_coverage: float
    cate_cil: float
    ate_sq_err: float
    ate_cover: float
    ate_cil: float


def compute_metrics(est: EstimatorOutput, truth) -> PerRunMetrics:
    """Score one estimator on one replicate.

    ``truth`` is the vector of true per-unit effects on the evaluation units.
    The ATE quantities are per-replicate contributions: averaging
    ``ate_sq_err`` over replicates and taking the square root gives the
    RMSE of the ATE; averaging ``ate_cover`` gives its coverage.
    """
    tau = np.asarray(truth, dtype=float).ravel()
    n = tau.shape[0]
    for arr in (est.tau_hat, est.tau_lower, est.tau_upper):
        if np.shape(arr) != (n,):
            raise LengthMismatch(f"estimates have shape {np.shape(arr)}, truth has {n} units")
    err = est.tau_hat - tau
    covered = (est.tau_lower <= tau) & (tau <= est.tau_upper)
    true_ate = float(np.mean(tau))
    return PerRunMetrics(
        pehe=float(np.sqrt(np.mean(err * err))),
        cate_coverage=float(np.mean(covered)),
        cate_cil=float(np.mean(est.tau_upper - est.tau_lower)),
        ate_sq_err=(est.ate_hat - true_ate) ** 2,
        ate_cover=float(est.ate_lower <= true_ate <= est.ate_upper),
        ate_cil=est.ate_upper - est.ate_lower,
    )


# column stem for each PerRunMetrics field
METRIC_COLUMNS = {
    "pehe": "pehe",
    "cate_coverage": "cate_cov",
    "cate_cil": "cate_cil",
    "ate_sq_err": "ate_sqerr",
    "ate_cover": "ate_cover",
    "ate_cil": "ate_cil",
}


def demo_column_names() -> list[str]:
    return [
        f"{est}_{stem}{k}"
        for est in ESTIMATORS
        for stem in METRIC_COLUMNS.values()
        for k in (1, 2)
    ]


def run_replicate(seed: int, n_train: int = 500, n_test: int = 1000) -> dict:
    """Full detail of one replicate: ``{(est, k): (EstimatorOutput, true_ate, PerRunMetrics)}``."""
    rng = np.random.default_rng(seed)
    train = generate_dgp1(n_train, rng)
    test = generate_dgp1(n_test, rng)
    detail = {}
    for key, out in fit_estimators(train, test).items():
        _, tau = test.outcome(key[1])
        detail[key] = (out, float(np.mean(tau)), compute_metrics(out, tau))
    return detail


def demo_sim_func(seed: int, n_train: int = 500, n_test: int = 1000) -> dict[str, float]:
    """One replicate flattened to ``{column name: value}``."""
    detail = run_replicate(seed, n_train, n_test)
    record = {}
    for est in ESTIMATORS:
        for field_name, stem in METRIC_COLUMNS.items():
            for k in (1, 2):
                record[f"{est}_{stem}{k}"] = float(asdict(detail[est, k][2])[field_name])
    return record


class DGP1Demo:
    """Picklable seeded source wrapping :func:`demo_sim_func`."""

    def __init__(self, n_train: int = 500, n_test: int = 1000):
        if n_train < 1 or n_test < 1:
            raise ValueError("sample sizes must be positive")
        self.n_train = int(n_train)
        self.n_test = int(n_test)

    def __call__(self, seed: int) -> dict[str, float]:
        return demo_sim_func(seed, self.n_train, self.n_test)

    def __repr__(self):
        return f"DGP1Demo(n_train={self.n_train}, n_test={self.n_test})"


def ate_aggregates(sq_err, cover, cil) -> dict[str, float]:
    """Across-replicate ATE summaries from per-replicate columns."""
    sq_err = np.asarray(sq_err, dtype=float)
    return {
        "rmse_ate": float(np.sqrt(np.mean(sq_err))),
        "coverage_ate": float(np.mean(cover)),
        "cil_ate": float(np.mean(cil)),
    }


BUILTIN_SOURCES = {"dgp1-linear-demo": DGP1Demo}

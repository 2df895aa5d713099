"""Exactly tractable desk-scale models and synthetic dataset generators.

Conjugate Bayesian linear regression, GP regression, multiclass logistic
GLM with a Laplace/GGN posterior, consistent posterior sampling into
prediction cubes, bootstrap ensembles, and the synthetic pools used by the
experiment harness.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import expit, softmax
from scipy.stats import norm

__all__ = [
    "Dataset",
    "WeightPosterior",
    "ParameterSamples",
    "PredictionCube",
    "GaussianPredictive",
    "GpPosterior",
    "FitError",
    "make_feature_map",
    "fit_bayes_linear",
    "blr_predictive",
    "fit_gp_regression",
    "fit_logistic_glm_laplace",
    "sample_parameters",
    "predict_cube",
    "bootstrap_ensemble_means",
    "make_synthetic",
    "save_dataset_csv",
    "load_dataset_csv",
]

_JITTER_BASE = 1e-10
_JITTER_CAP = 1e-6


class FitError(RuntimeError):
    """Raised when a model fit fails; carries solver diagnostics when present."""

    def __init__(self, message: str, iterations: int | None = None,
                 grad_norm: float | None = None):
        if iterations is not None:
            message = f"{message} (iterations={iterations}, grad_norm={grad_norm:.3e})"
        super().__init__(message)
        self.iterations = iterations
        self.grad_norm = grad_norm


@dataclass(frozen=True)
class Dataset:
    """Pool/train/eval data at desk scale.

    Parameters
    ----------
    inputs : (n, d) array
    targets : (n,) array, class indices or reals depending on kind
    kind : "classification" or "regression"
    n_classes : class count for classification, None otherwise
    duplication_factor : replication count used by repeated-pool synthesis
    """

    inputs: np.ndarray
    targets: np.ndarray
    kind: str
    n_classes: int | None = None
    duplication_factor: int = 1

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        y = np.asarray(self.targets)
        object.__setattr__(self, "inputs", x)
        if self.kind not in ("classification", "regression"):
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        if x.shape[0] != y.shape[0]:
            raise ValueError("inputs and targets disagree on n")
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite inputs")
        if self.kind == "classification":
            y = y.astype(int)
            if self.n_classes is None:
                raise ValueError("classification datasets need n_classes")
            if y.size and (y.min() < 0 or y.max() >= self.n_classes):
                raise ValueError("class index out of range")
        else:
            y = y.astype(float)
            if not np.all(np.isfinite(y)):
                raise ValueError("non-finite targets")
        object.__setattr__(self, "targets", y)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.inputs[idx], self.targets[idx], self.kind,
                       self.n_classes, self.duplication_factor)


@dataclass(frozen=True)
class WeightPosterior:
    """Gaussian weight posterior N(mean, covariance)."""

    mean: np.ndarray
    covariance: np.ndarray
    prior_precision: float
    noise_variance: float | None = None

    def __post_init__(self):
        m = np.asarray(self.mean, dtype=float).reshape(-1)
        c = np.asarray(self.covariance, dtype=float)
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "covariance", c)
        if c.shape != (m.size, m.size):
            raise ValueError("covariance shape does not match mean")
        if np.abs(c - c.T).max(initial=0.0) > 1e-10:
            raise ValueError("covariance is not symmetric")
        if self.prior_precision <= 0:
            raise ValueError("prior_precision must be positive")
        if self.noise_variance is not None and self.noise_variance <= 0:
            raise ValueError("noise_variance must be positive")


@dataclass(frozen=True)
class ParameterSamples:
    """K consistent posterior draws; the same draws are reused for every pool point."""

    samples: np.ndarray
    seed: int
    consistent: bool = True

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.samples, dtype=float))
        object.__setattr__(self, "samples", s)
        if s.shape[0] < 1:
            raise ValueError("need at least one sample")

    @property
    def k(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class PredictionCube:
    """Per-point, per-member class probabilities, shape (n, K, C)."""

    values: np.ndarray
    consistent: bool = True
    member_seed: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 3:
            raise ValueError("cube must have shape (n, K, C)")
        if np.any(v < 0):
            raise ValueError("cube has negative probabilities")
        if v.size and np.abs(v.sum(axis=2) - 1.0).max() > 1e-9:
            raise ValueError("cube slices must sum to 1")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]

    @property
    def n_classes(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class GaussianPredictive:
    """Joint Gaussian prediction: noise-free mean covariance plus noise variance."""

    mean: np.ndarray
    cov: np.ndarray
    noise_variance: float

    def __post_init__(self):
        m = np.asarray(self.mean, dtype=float).reshape(-1)
        c = np.atleast_2d(np.asarray(self.cov, dtype=float))
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "cov", c)
        if c.shape != (m.size, m.size):
            raise ValueError("cov shape does not match mean")
        if self.noise_variance <= 0:
            raise ValueError("noise_variance must be positive")

    @property
    def m(self) -> int:
        return self.mean.size


def chol_with_jitter(mat: np.ndarray):
    """Cholesky with escalating trace-scaled jitter.

    Starts at 1e-10 * mean-diagonal and escalates tenfold up to 1e-6
    before giving up. Returns (lower factor, jitter actually applied).
    """
    mat = np.asarray(mat, dtype=float)
    p = mat.shape[0]
    if p == 0:
        return np.zeros((0, 0)), 0.0
    scale = float(np.trace(mat)) / p
    if scale <= 0:
        if np.allclose(mat, 0):
            return np.zeros_like(mat), 0.0
        scale = 1.0
    jitter = 0.0
    factor = _JITTER_BASE
    while True:
        try:
            return np.linalg.cholesky(mat + jitter * np.eye(p)), jitter
        except np.linalg.LinAlgError:
            if factor > _JITTER_CAP:
                raise np.linalg.LinAlgError(
                    f"cholesky failed even with jitter {jitter:.1e}") from None
            jitter = factor * scale
            factor *= 10


# ---------------------------------------------------------------------------
# feature maps


def make_feature_map(name: str, input_dim: int, *, rff_features: int = 128,
                     rff_lengthscale: float = 1.0, rff_seed: int = 12345):
    """Build a feature map by id: identity | affine | quadratic | rff.

    The rff map uses random Fourier features for an rbf kernel with a
    frequency matrix drawn once from a fixed seed, so refits see the same
    features.
    """
    if name == "identity":
        def phi(x):
            return np.atleast_2d(np.asarray(x, dtype=float))
        phi.dim = input_dim
    elif name == "affine":
        def phi(x):
            x = np.atleast_2d(np.asarray(x, dtype=float))
            return np.hstack([x, np.ones((x.shape[0], 1))])
        phi.dim = input_dim + 1
    elif name == "quadratic":
        def phi(x):
            x = np.atleast_2d(np.asarray(x, dtype=float))
            return np.hstack([x, x**2, np.ones((x.shape[0], 1))])
        phi.dim = 2 * input_dim + 1
    elif name == "rff":
        rng = np.random.default_rng(rff_seed)
        freqs = rng.normal(0.0, 1.0 / rff_lengthscale, size=(input_dim, rff_features))
        phases = rng.uniform(0.0, 2 * np.pi, size=rff_features)

        def phi(x):
            x = np.atleast_2d(np.asarray(x, dtype=float))
            return np.sqrt(2.0 / rff_features) * np.cos(x @ freqs + phases)
        phi.dim = rff_features
    else:
        raise ValueError(f"unknown feature map {name!r}")
    phi.name = name
    return phi


# ---------------------------------------------------------------------------
# Bayesian linear regression


def fit_bayes_linear(data: Dataset, features, prior_precision: float,
                     noise_variance: float) -> WeightPosterior:
    """Fit an exact conjugate Bayesian linear regression.

    Parameters
    ----------
    data : regression Dataset
    features : feature map from make_feature_map (or a feature-map id)
    prior_precision : weight prior precision lambda
    noise_variance : observation noise sigma_N^2

    Returns
    -------
    WeightPosterior with precision lambda*I + sigma^-2 Phi^T Phi and
    mean sigma^-2 Sigma Phi^T y.
    """
    if data.kind != "regression":
        raise ValueError("fit_bayes_linear expects regression targets")
    if prior_precision <= 0 or noise_variance <= 0:
        raise ValueError("prior_precision and noise_variance must be positive")
    if isinstance(features, str):
        features = make_feature_map(features, data.inputs.shape[1])
    phi = features(data.inputs) if data.n else np.zeros((0, features.dim))
    p = phi.shape[1]
    precision = prior_precision * np.eye(p) + phi.T @ phi / noise_variance
    chol = cho_factor(precision, lower=True)
    covariance = cho_solve(chol, np.eye(p))
    covariance = 0.5 * (covariance + covariance.T)
    mean = cho_solve(chol, phi.T @ data.targets) / noise_variance if data.n else np.zeros(p)
    return WeightPosterior(mean, covariance, prior_precision, noise_variance)


def blr_predictive(post: WeightPosterior, phi_queries: np.ndarray) -> GaussianPredictive:
    """Joint Gaussian predictive of a BLR posterior at featurized queries."""
    phi = np.atleast_2d(np.asarray(phi_queries, dtype=float))
    if post.noise_variance is None:
        raise ValueError("posterior has no noise model")
    mean = phi @ post.mean
    cov = phi @ post.covariance @ phi.T
    return GaussianPredictive(mean, 0.5 * (cov + cov.T), post.noise_variance)


# ---------------------------------------------------------------------------
# GP regression


@dataclass(frozen=True)
class GpPosterior:
    """Factory for joint Gaussian predictions from a fitted (or prior) GP."""

    train_inputs: np.ndarray
    train_targets: np.ndarray
    kernel: dict = field(default_factory=dict)
    noise_variance: float = 1.0

    def _gram(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        kind = self.kernel.get("kind", "rbf")
        amp = float(self.kernel.get("amplitude", 1.0))
        if kind == "rbf":
            ell = float(self.kernel["lengthscale"])
            d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
            return amp * np.exp(-d2 / (2 * ell**2))
        if kind == "linear":
            return amp * (a @ b.T)
        raise ValueError(f"unknown kernel kind {kind!r}")

    def predict(self, queries) -> GaussianPredictive:
        q = np.atleast_2d(np.asarray(queries, dtype=float))
        k_qq = self._gram(q, q)
        if self.train_inputs.shape[0] == 0:
            return GaussianPredictive(np.zeros(q.shape[0]), k_qq, self.noise_variance)
        k_tt = self._gram(self.train_inputs, self.train_inputs)
        k_qt = self._gram(q, self.train_inputs)
        gram = k_tt + self.noise_variance * np.eye(k_tt.shape[0])
        low, _ = chol_with_jitter(gram)
        solved = cho_solve((low, True), k_qt.T)
        mean = solved.T @ self.train_targets
        cov = k_qq - k_qt @ solved
        return GaussianPredictive(mean, 0.5 * (cov + cov.T), self.noise_variance)


def fit_gp_regression(data: Dataset, kernel: dict, noise_variance: float) -> GpPosterior:
    """Fit GP regression; returns a predictive factory over query sets.

    kernel: {"kind": "rbf"|"linear", "lengthscale": l, "amplitude": a}.
    With no training rows the factory returns the prior (cov = Gram).
    """
    if data.kind != "regression":
        raise ValueError("fit_gp_regression expects regression targets")
    if noise_variance <= 0:
        raise ValueError("noise_variance must be positive")
    if kernel.get("kind", "rbf") == "rbf" and kernel.get("lengthscale", 1.0) <= 0:
        raise ValueError("lengthscale must be positive")
    if kernel.get("amplitude", 1.0) <= 0:
        raise ValueError("amplitude must be positive")
    return GpPosterior(data.inputs.copy(), data.targets.copy(), dict(kernel), noise_variance)


# ---------------------------------------------------------------------------
# logistic GLM + Laplace/GGN

_GLM_TOL = 1e-6
_GLM_MAX_STEPS = 500


def _glm_neg_log_joint(w_flat, phi, y_onehot, lam):
    logits = phi @ w_flat.reshape(y_onehot.shape[1], -1).T
    lse = np.logaddexp.reduce(logits, axis=1)
    ll = (logits[np.arange(len(lse)), y_onehot.argmax(axis=1)] - lse).sum() if len(lse) else 0.0
    return -ll + 0.5 * lam * (w_flat @ w_flat)


def fit_logistic_glm_laplace(data: Dataset, features, prior_precision: float) -> WeightPosterior:
    """Fit a multiclass logistic GLM and a Laplace/GGN Gaussian posterior.

    Newton iterations on the penalized log joint; the posterior precision
    is prior_precision * I plus the per-point GGN blocks A(z_i) kron x_i x_i^T
    with A(z) = diag(s) - s s^T at the MAP softmax s.

    Raises
    ------
    FitError
        if the MAP gradient norm is not below 1e-6 within 500 steps.
    """
    if data.kind != "classification":
        raise ValueError("fit_logistic_glm_laplace expects classification targets")
    if prior_precision <= 0:
        raise ValueError("prior_precision must be positive")
    n_classes = int(data.n_classes)
    if n_classes < 2:
        raise ValueError("need at least two classes")
    if isinstance(features, str):
        features = make_feature_map(features, data.inputs.shape[1])
    phi = features(data.inputs) if data.n else np.zeros((0, features.dim))
    q = phi.shape[1]
    p_total = n_classes * q
    y_onehot = np.zeros((data.n, n_classes))
    if data.n:
        y_onehot[np.arange(data.n), data.targets] = 1.0

    w = np.zeros(p_total)
    grad_norm = np.inf
    for iteration in range(_GLM_MAX_STEPS):
        logits = phi @ w.reshape(n_classes, q).T
        s = softmax(logits, axis=1) if data.n else np.zeros((0, n_classes))
        grad = ((s - y_onehot).T @ phi).reshape(-1) + prior_precision * w
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm < _GLM_TOL:
            break
        hess = prior_precision * np.eye(p_total)
        for i in range(data.n):
            a_block = np.diag(s[i]) - np.outer(s[i], s[i])
            hess += np.kron(a_block, np.outer(phi[i], phi[i]))
        step = np.linalg.solve(hess, grad)
        # backtrack if the full Newton step overshoots
        obj = _glm_neg_log_joint(w, phi, y_onehot, prior_precision)
        scale = 1.0
        for _ in range(30):
            trial = w - scale * step
            if _glm_neg_log_joint(trial, phi, y_onehot, prior_precision) <= obj:
                break
            scale *= 0.5
        w = w - scale * step
    else:
        raise FitError("GLM MAP did not converge", _GLM_MAX_STEPS, grad_norm)

    logits = phi @ w.reshape(n_classes, q).T
    s = softmax(logits, axis=1) if data.n else np.zeros((0, n_classes))
    hess = prior_precision * np.eye(p_total)
    for i in range(data.n):
        a_block = np.diag(s[i]) - np.outer(s[i], s[i])
        hess += np.kron(a_block, np.outer(phi[i], phi[i]))
    chol = cho_factor(hess, lower=True)
    covariance = cho_solve(chol, np.eye(p_total))
    return WeightPosterior(w, 0.5 * (covariance + covariance.T), prior_precision)


# ---------------------------------------------------------------------------
# sampling and prediction cubes


def sample_parameters(post: WeightPosterior, k: int, seed: int) -> ParameterSamples:
    """Draw K exact Gaussian posterior samples, reproducible from the seed."""
    if k < 1:
        raise ValueError("need k >= 1")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((k, post.mean.size))
    low, _ = chol_with_jitter(post.covariance)
    return ParameterSamples(post.mean + z @ low.T, seed=seed, consistent=True)


def predict_cube(samples: ParameterSamples, pool: Dataset, link: str,
                 features=None) -> PredictionCube:
    """Predict class probabilities for every pool point under every member.

    Args:
        samples: consistent posterior draws, one weight vector per member.
        pool: inputs to predict at.
        link: "softmax" (multiclass weights, C blocks of feature dim) or
            "probit-free" (binary; a single weight block pushed through the
            standard normal CDF on the noise-free latent).
        features: feature map; identity when omitted.

    Returns:
        PredictionCube of shape (n, K, C).
    """
    if not samples.consistent:
        raise ValueError("prediction cubes need consistent samples")
    if features is None:
        features = make_feature_map("identity", pool.inputs.shape[1])
    elif isinstance(features, str):
        features = make_feature_map(features, pool.inputs.shape[1])
    phi = features(pool.inputs)
    q = phi.shape[1]
    k, p_total = samples.samples.shape
    if link == "softmax":
        if p_total % q:
            raise ValueError("sample dimension is not a multiple of the feature dim")
        n_classes = p_total // q
        weights = samples.samples.reshape(k, n_classes, q)
        logits = np.einsum("nq,kcq->nkc", phi, weights)
        values = softmax(logits, axis=2)
    elif link == "probit-free":
        if p_total != q:
            raise ValueError("probit-free link expects one weight block")
        latent = phi @ samples.samples.T
        p_one = norm.cdf(latent)
        values = np.stack([1.0 - p_one, p_one], axis=2)
    else:
        raise ValueError(f"unknown link {link!r}")
    return PredictionCube(values, consistent=True, member_seed=samples.seed)


def bootstrap_ensemble_means(data: Dataset, queries, features, prior_precision: float,
                             noise_variance: float, n_members: int, seed: int) -> np.ndarray:
    """Member predictive means from BLR fits on bootstrap resamples.

    Realizes a non-differentiable-style ensemble: member j is a conjugate
    refit on a resample drawn from seed (seed, j). Returns (n_queries, K).
    """
    if isinstance(features, str):
        features = make_feature_map(features, data.inputs.shape[1])
    phi_q = features(np.atleast_2d(np.asarray(queries, dtype=float)))
    out = np.empty((phi_q.shape[0], n_members))
    for j in range(n_members):
        rng = np.random.default_rng(np.random.SeedSequence((seed, j)))
        idx = rng.integers(0, data.n, size=data.n)
        post = fit_bayes_linear(data.subset(idx), features, prior_precision, noise_variance)
        out[:, j] = phi_q @ post.mean
    return out


# ---------------------------------------------------------------------------
# synthetic datasets


def _two_cluster(rng, n, sep=3.0, std=1.0):
    labels = rng.integers(0, 2, size=n)
    centers = np.where(labels[:, None] == 0, [-sep / 2, 0.0], [sep / 2, 0.0])
    x = centers + rng.normal(0.0, std, size=(n, 2))
    return x, labels


def make_synthetic(kind: str, params: dict, seed: int):
    """Generate a synthetic dataset; deterministic per (kind, params, seed).

    Kinds: repeated-pool, two-cluster-2d, heavy-tail-pool, ambiguous-label,
    two-arm-causal, gp-1d. Returns (Dataset, extras) where extras may carry
    target inputs, flip masks, treatments, or ground-truth curves.
    """
    params = dict(params or {})
    # crc32 keyed stream: stable across processes, unlike builtin str hash
    rng = np.random.default_rng(np.random.SeedSequence((zlib.crc32(kind.encode()), seed)))
    extras: dict = {}

    if kind == "two-cluster-2d":
        n = int(params.get("n", 200))
        x, labels = _two_cluster(rng, n, float(params.get("sep", 3.0)),
                                 float(params.get("std", 1.0)))
        data = Dataset(x, labels, "classification", n_classes=2)

    elif kind == "repeated-pool":
        n_base = int(params.get("n_base", 40))
        factor = int(params.get("duplication_factor", 1))
        x, labels = _two_cluster(rng, n_base, float(params.get("sep", 3.0)),
                                 float(params.get("std", 1.0)))
        reps_x = [x]
        reps_y = [labels]
        for _ in range(factor - 1):
            reps_x.append(x + rng.normal(0.0, 0.1, size=x.shape))
            reps_y.append(labels)
        data = Dataset(np.vstack(reps_x), np.concatenate(reps_y), "classification",
                       n_classes=2, duplication_factor=factor)
        extras["base_size"] = n_base

    elif kind == "heavy-tail-pool":
        n = int(params.get("n", 400))
        df = float(params.get("df", 5.0))
        scale = float(params.get("scale", 1.0))
        z = rng.standard_normal((n, 2))
        g = rng.chisquare(df, size=n)
        x = z * scale / np.sqrt(g / df)[:, None]
        w = np.array([1.2, -0.8])
        labels = (rng.uniform(size=n) < expit(x @ w)).astype(int)
        data = Dataset(x, labels, "classification", n_classes=2)
        n_target = int(params.get("n_target", 64))
        target_std = float(params.get("target_std", 0.5))
        extras["target_inputs"] = rng.normal(0.0, target_std, size=(n_target, 2))
        extras["true_w"] = w

    elif kind == "ambiguous-label":
        n = int(params.get("n", 200))
        flip_rate = float(params.get("flip_rate", 0.1))
        x, labels = _two_cluster(rng, n, float(params.get("sep", 3.0)),
                                 float(params.get("std", 1.0)))
        flip = rng.uniform(size=n) < flip_rate
        noisy = np.where(flip, 1 - labels, labels)
        data = Dataset(x, noisy, "classification", n_classes=2)
        extras["clean_targets"] = labels
        extras["flip_mask"] = flip

    elif kind == "two-arm-causal":
        n = int(params.get("n", 500))
        x = rng.standard_normal(n)
        t = (rng.uniform(size=n) < expit(2 * x + 0.5)).astype(int)
        sign = 2 * t - 1

        def outcome_mean(xv, sg):
            return sg * xv + sg - 2 * np.sin(2 * sg * xv) + 2 * (1 + 0.5 * xv)

        y = outcome_mean(x, sign) + rng.standard_normal(n)
        data = Dataset(np.column_stack([x, t.astype(float)]), y, "regression")
        extras["treatment"] = t
        extras["mu0"] = outcome_mean(x, -1)
        extras["mu1"] = outcome_mean(x, 1)
        extras["cate"] = extras["mu1"] - extras["mu0"]

    elif kind == "gp-1d":
        n = int(params.get("n", 80))
        ell = float(params.get("lengthscale", 0.5))
        amp = float(params.get("amplitude", 1.0))
        noise_std = float(params.get("noise_std", 0.1))
        lo, hi = float(params.get("xmin", -3.0)), float(params.get("xmax", 3.0))
        x = np.sort(rng.uniform(lo, hi, size=n))[:, None]
        d2 = (x - x.T) ** 2
        gram = amp * np.exp(-d2 / (2 * ell**2))
        low, _ = chol_with_jitter(gram)
        f = low @ rng.standard_normal(n)
        y = f + rng.normal(0.0, noise_std, size=n)
        data = Dataset(x, y, "regression")
        extras["f_true"] = f

    else:
        raise ValueError(f"unknown synthetic kind {kind!r}")

    return data, extras


# ---------------------------------------------------------------------------
# CSV + sidecar persistence


def save_dataset_csv(data: Dataset, path) -> None:
    """Write `x0..x{d-1},y` CSV plus a sidecar metadata JSON."""
    path = Path(path)
    d = data.inputs.shape[1]
    header = ",".join([f"x{i}" for i in range(d)] + ["y"])
    if data.kind == "classification":
        rows = np.column_stack([data.inputs, data.targets.astype(float)])
        fmt = ["%.17g"] * d + ["%d"]
    else:
        rows = np.column_stack([data.inputs, data.targets])
        fmt = ["%.17g"] * (d + 1)
    np.savetxt(path, rows, delimiter=",", header=header, comments="", fmt=fmt)
    meta = {"kind": data.kind, "classes": data.n_classes,
            "duplication_factor": data.duplication_factor}
    path.with_suffix(".json").write_text(json.dumps(meta, indent=0, sort_keys=True) + "\n")


def load_dataset_csv(path) -> Dataset:
    """Load a dataset CSV; kind and class count come from the sidecar JSON."""
    path = Path(path)
    sidecar = path.with_suffix(".json")
    if not sidecar.exists():
        raise FileNotFoundError(f"missing sidecar metadata {sidecar}")
    meta = json.loads(sidecar.read_text())
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    inputs, targets = raw[:, :-1], raw[:, -1]
    return Dataset(inputs, targets, meta["kind"], meta.get("classes"),
                   int(meta.get("duplication_factor", 1)))

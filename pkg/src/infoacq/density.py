"""Single-pass uncertainty from feature-space densities.

A Gaussian discriminant fit over fixed feature vectors (per-class or
shared covariance), the stable log marginal density it induces, and the
bias-variance split of the entropy gap between the mean prediction and
the member predictions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .models import FitError, PredictionCube

logger = logging.getLogger(__name__)

_JITTER_FRACTION = 1e-6

__all__ = [
    "GdaModel",
    "fit_gda",
    "log_marginal_density",
    "entropy_rmse_decomposition",
]


@dataclass(frozen=True)
class GdaModel:
    """Class-conditional Gaussian density model over feature vectors.

    Covariances are stored with their stabilizing jitter already added;
    Cholesky factors and log normalizers are cached at fit time. The fit
    counters record how much work the fit did: sample_touches is the
    number of samples accumulated (each exactly once) and accum_flops the
    n * D^2 cost of those accumulations.
    """

    classes: np.ndarray
    means: np.ndarray            # (C, D)
    covariances: np.ndarray      # (C, D, D), identical blocks in shared mode
    priors: np.ndarray           # (C,)
    mode: str
    jitter_applied: float
    sample_touches: int
    accum_flops: int
    chols: np.ndarray = field(repr=False, default=None)
    log_norms: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.mode not in ("per-class", "shared"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if abs(self.priors.sum() - 1.0) > 1e-9 or np.any(self.priors < 0):
            raise ValueError("priors must form a distribution")
        if self.chols is None:
            chols = np.array([np.linalg.cholesky(c) for c in self.covariances])
            d = self.means.shape[1]
            log_norms = np.array([
                -0.5 * (d * np.log(2.0 * np.pi)
                        + 2.0 * np.log(np.diag(c)).sum()) for c in chols])
            object.__setattr__(self, "chols", chols)
            object.__setattr__(self, "log_norms", log_norms)

    @property
    def n_classes(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


def fit_gda(features: np.ndarray, labels: np.ndarray,
            mode: str = "per-class") -> GdaModel:
    """Fit class-conditional Gaussians with empirical moments.

    Per-class mode estimates one covariance per class and needs at least
    D+1 samples in every class; when a class is too small the fit warns
    and falls back to one pooled within-class covariance ("shared", the
    linear-discriminant variant). Covariances get a jitter of 1e-6 times
    the mean diagonal before factorization.

    Raises:
        FitError: a covariance cannot be factorized even with jitter.
    """
    z = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(labels).reshape(-1)
    if z.shape[0] != y.size:
        raise ValueError("one label per feature row required")
    if z.shape[0] == 0:
        raise ValueError("cannot fit on an empty set")
    if mode not in ("per-class", "shared"):
        raise ValueError(f"unknown mode {mode!r}")
    n, d = z.shape
    classes, counts = np.unique(y, return_counts=True)

    if mode == "per-class" and counts.min() < d + 1:
        small = classes[counts < d + 1].tolist()
        logger.warning(
            "classes %s have fewer than %d samples; falling back to a shared covariance",
            small, d + 1)
        mode = "shared"

    means = np.empty((len(classes), d))
    covs = np.empty((len(classes), d, d))
    pooled = np.zeros((d, d))
    touches = 0
    for ci, c in enumerate(classes):
        zc = z[y == c]
        means[ci] = zc.mean(axis=0)
        centered = zc - means[ci]
        scatter = centered.T @ centered
        touches += zc.shape[0]
        covs[ci] = scatter / zc.shape[0]
        pooled += scatter
    if mode == "shared":
        covs[:] = pooled / n

    if not (np.all(np.isfinite(means)) and np.all(np.isfinite(covs))):
        raise FitError("non-finite class moments; check the feature matrix")
    scale = float(np.trace(covs.mean(axis=0))) / d
    jitter = _JITTER_FRACTION * scale if scale > 0 else _JITTER_FRACTION
    covs += jitter * np.eye(d)
    try:
        model = GdaModel(classes=classes, means=means, covariances=covs,
                         priors=counts / n, mode=mode, jitter_applied=jitter,
                         sample_touches=touches, accum_flops=touches * d * d)
    except np.linalg.LinAlgError as exc:
        raise FitError(f"degenerate class covariance: {exc}") from exc
    return model


def log_marginal_density(model: GdaModel, z) -> float | np.ndarray:
    """Log of the class-mixture density at a feature vector.

    Computed as a log-sum-exp over the class components, so it stays
    finite far from all means. A single D-vector gives a float; an
    (m, D) array gives an (m,) array.
    """
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    pts = np.atleast_2d(z)
    if pts.shape[1] != model.dim:
        raise ValueError("feature dimension mismatch")
    comps = np.empty((pts.shape[0], model.n_classes))
    for ci in range(model.n_classes):
        diff = pts - model.means[ci]
        white = solve_triangular(model.chols[ci], diff.T, lower=True)
        comps[:, ci] = (np.log(model.priors[ci]) + model.log_norms[ci]
                        - 0.5 * (white ** 2).sum(axis=0))
    out = logsumexp(comps, axis=1)
    return float(out[0]) if single else out


def entropy_rmse_decomposition(cube: PredictionCube, point: int):
    """Split the entropy error of the mean prediction at one pool point.

    Returns (rmse, bias, std): the root mean squared gap between the
    entropy of the mean prediction and the member entropies, the mean gap
    (which is exactly the member disagreement, the mutual information),
    and the standard deviation of the member entropies. The three satisfy
    rmse^2 = bias^2 + std^2.
    """
    if not cube.consistent:
        raise ValueError("decomposition needs consistent member samples")
    probs = cube.values[point]            # (K, C)
    mean_pred = probs.mean(axis=0)

    def h(p):
        return -np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0).sum(axis=-1)

    h_mean = float(h(mean_pred))
    h_members = h(probs)
    gaps = h_mean - h_members
    rmse = float(np.sqrt(np.mean(gaps ** 2)))
    bias = float(np.mean(gaps))
    std = float(np.std(h_members))
    return rmse, bias, std

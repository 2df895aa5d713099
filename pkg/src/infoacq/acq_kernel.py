"""Gaussian, kernel, and Fisher-space acquisition functions.

Closed-form Gaussian disagreement and transfer scores, predictive and
gradient covariance kernels for ensembles, greedy log-determinant batch
selection, Fisher-information bounds on expected information gain,
gradient-length scores, and variance-ratio scores for treatment-effect
models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .acq_classify import AcquisitionBatch, ScoreVector
from .models import GaussianPredictive, WeightPosterior, chol_with_jitter

_KRON_EXPAND_CAP = 512
CF_VARIANCE_FLOOR = 1e-8

__all__ = [
    "KernelMatrix",
    "FisherBundle",
    "glm_fisher_bundle",
    "gaussian_bald",
    "gaussian_joint_entropy",
    "gaussian_epig",
    "empirical_pred_kernel",
    "psi_gradient_kernel",
    "posterior_gradient_kernel",
    "logdet_batch_select",
    "fisher_eig_bounds",
    "similarity_logdet",
    "fisher_epig_trace",
    "egl_score",
    "grand_score",
    "causal_scores",
    "causal_score_vectors",
]


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric PSD gram matrix with the jitter that made it factorizable."""

    gram: np.ndarray
    jitter_applied: float = 0.0

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.gram, dtype=float))
        object.__setattr__(self, "gram", g)
        if g.shape[0] != g.shape[1]:
            raise ValueError("gram matrix must be square")
        if g.size and np.abs(g - g.T).max() > 1e-10:
            raise ValueError("gram matrix is not symmetric")

    @property
    def m(self) -> int:
        return self.gram.shape[0]


def _make_kernel(gram: np.ndarray) -> KernelMatrix:
    gram = 0.5 * (gram + gram.T)
    _, jitter = chol_with_jitter(gram)
    return KernelMatrix(gram, jitter)


@dataclass(frozen=True)
class FisherBundle:
    """Per-point Fisher blocks together with the training Hessian.

    Blocks are stored either dense, shape (n, p, p), or as Kronecker
    factors (a, outer(x, x)) for generalized linear models, in which case
    the dense block a_i kron x_i x_i^T is expanded lazily and only while
    p stays at or below 512.
    """

    hessian: np.ndarray
    dense: np.ndarray | None = None
    kron_a: np.ndarray | None = None
    kron_x: np.ndarray | None = None

    def __post_init__(self):
        h = np.atleast_2d(np.asarray(self.hessian, dtype=float))
        object.__setattr__(self, "hessian", h)
        if np.abs(h - h.T).max(initial=0.0) > 1e-8:
            raise ValueError("training Hessian is not symmetric")
        has_dense = self.dense is not None
        has_kron = self.kron_a is not None and self.kron_x is not None
        if has_dense == has_kron:
            raise ValueError("provide either dense blocks or Kronecker factors")
        if has_dense:
            d = np.asarray(self.dense, dtype=float)
            object.__setattr__(self, "dense", d)
            if d.ndim != 3 or d.shape[1:] != h.shape:
                raise ValueError("dense blocks must be (n, p, p) matching the Hessian")
        else:
            a = np.asarray(self.kron_a, dtype=float)
            x = np.atleast_2d(np.asarray(self.kron_x, dtype=float))
            object.__setattr__(self, "kron_a", a)
            object.__setattr__(self, "kron_x", x)
            if a.ndim != 3 or a.shape[0] != x.shape[0]:
                raise ValueError("Kronecker factors must align on the point axis")
            if a.shape[1] * x.shape[1] != h.shape[0]:
                raise ValueError("Kronecker block size does not match the Hessian")

    @property
    def n(self) -> int:
        return self.dense.shape[0] if self.dense is not None else self.kron_a.shape[0]

    @property
    def p(self) -> int:
        return self.hessian.shape[0]

    def fisher(self, i: int) -> np.ndarray:
        """Dense Fisher block of one point."""
        if self.dense is not None:
            return self.dense[i]
        if self.p > _KRON_EXPAND_CAP:
            raise ValueError(
                f"refusing to expand Kronecker block of size {self.p} > {_KRON_EXPAND_CAP}")
        x = self.kron_x[i]
        return np.kron(self.kron_a[i], np.outer(x, x))

    def batch_fisher(self, batch) -> np.ndarray:
        """Summed Fisher blocks of a batch; the empty batch gives zeros."""
        total = np.zeros((self.p, self.p))
        for i in batch:
            total += self.fisher(int(i))
        return total


def glm_fisher_bundle(probs: np.ndarray, inputs: np.ndarray,
                      hessian: np.ndarray) -> FisherBundle:
    """Kronecker-factored Fisher blocks for a softmax GLM.

    Per point the block is (diag(p) - p p^T) kron x x^T, which for the
    softmax likelihood is both the Fisher information and the exact
    Hessian of the expected loss.
    """
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    a = np.einsum("ni,ij->nij", probs, np.eye(probs.shape[1])) \
        - np.einsum("ni,nj->nij", probs, probs)
    return FisherBundle(hessian=hessian, kron_a=a, kron_x=inputs)


# ---------------------------------------------------------------------------
# Gaussian closed forms


def _chol_logdet(mat: np.ndarray) -> float:
    chol = np.linalg.cholesky(mat)
    return 2.0 * float(np.log(np.diag(chol)).sum())


def gaussian_bald(pred: GaussianPredictive) -> float:
    """Parameter information in one Gaussian observation.

    Half the log ratio of total to noise variance; zero exactly when the
    model-mean variance vanishes.
    """
    if pred.m != 1:
        raise ValueError("gaussian_bald expects a single-point predictive")
    v = max(float(pred.cov[0, 0]), 0.0)
    return 0.5 * float(np.log((v + pred.noise_variance) / pred.noise_variance))


def gaussian_joint_entropy(pred: GaussianPredictive) -> float:
    """Differential entropy of the noisy joint prediction, in nats."""
    m = pred.m
    cov = pred.cov + pred.noise_variance * np.eye(m)
    chol, _ = chol_with_jitter(cov)
    logdet = 2.0 * float(np.log(np.diag(chol)).sum())
    return 0.5 * (m * float(np.log(2.0 * np.pi * np.e)) + logdet)


def gaussian_epig(pred: GaussianPredictive) -> float:
    """Transfer information between a pair (candidate, target) of outputs.

    Uses the noise-inclusive 2x2 covariance: half the log ratio of the
    product of variances to the determinant.
    """
    if pred.m != 2:
        raise ValueError("gaussian_epig expects a pair predictive")
    c = pred.cov + pred.noise_variance * np.eye(2)
    det = c[0, 0] * c[1, 1] - c[0, 1] ** 2
    if det <= 0:
        raise np.linalg.LinAlgError("degenerate pair covariance")
    return 0.5 * float(np.log(c[0, 0] * c[1, 1] / det))


# ---------------------------------------------------------------------------
# prediction-space kernels


def empirical_pred_kernel(predictions: np.ndarray) -> KernelMatrix:
    """Empirical covariance kernel of member mean predictions.

    predictions is (n, K); the gram entry (i, j) is the inner product of
    the centered member predictions divided by K.
    """
    p = np.atleast_2d(np.asarray(predictions, dtype=float))
    k = p.shape[1]
    centered = p - p.mean(axis=1, keepdims=True)
    return _make_kernel(centered @ centered.T / k)


def psi_gradient_kernel(predictions: np.ndarray, q: np.ndarray | None = None,
                        family: str = "multinomial", alpha0: float = 1.0) -> KernelMatrix:
    """Gradient kernel of the latent member-selector variable.

    The member index is modeled as a latent draw: one-hot categorical
    ("multinomial") or a convex mixture weight ("dirichlet", total
    concentration alpha0). The kernel is M Cov[latent] M^T where M stacks
    the per-member predictions; with uniform weights the multinomial
    variant reproduces the empirical predictive covariance kernel and the
    dirichlet variant is smaller by the factor 1 + alpha0.
    """
    p = np.atleast_2d(np.asarray(predictions, dtype=float))
    k = p.shape[1]
    if q is None:
        q = np.full(k, 1.0 / k)
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.size != k or np.any(q < 0) or abs(q.sum() - 1.0) > 1e-9:
        raise ValueError("q must be a distribution over the members")
    cov = np.diag(q) - np.outer(q, q)
    if family == "dirichlet":
        if alpha0 <= 0:
            raise ValueError("alpha0 must be positive")
        cov = cov / (1.0 + alpha0)
    elif family != "multinomial":
        raise ValueError(f"unknown latent family {family!r}")
    return _make_kernel(p @ cov @ p.T)


def posterior_gradient_kernel(post: WeightPosterior, grads: np.ndarray) -> KernelMatrix:
    """Gradient kernel G Sigma G^T under a Gaussian weight posterior."""
    g = np.atleast_2d(np.asarray(grads, dtype=float))
    if g.shape[1] != post.mean.size:
        raise ValueError("gradient width does not match posterior dimension")
    return _make_kernel(g @ post.covariance @ g.T)


# ---------------------------------------------------------------------------
# greedy log-det selection


def logdet_batch_select(kernel: KernelMatrix, noise_variance: float,
                        b: int) -> AcquisitionBatch:
    """Greedy maximization of half the log determinant of K_S / noise + I.

    The marginal gain of a candidate is half the log of its posterior
    residual variance over the noise floor. An exact duplicate of a chosen
    row only offers a second noisy look at the same latent value, so its
    gain stays below half log 2 and rows with signal above the noise come
    first. Selection values are the cumulative objective after each round.
    """
    if noise_variance <= 0:
        raise ValueError("noise_variance must be positive")
    gram = kernel.gram + kernel.jitter_applied * np.eye(kernel.m)
    n = kernel.m
    if b > n:
        raise ValueError("batch size exceeds the number of rows")
    chosen: list[int] = []
    values: list[float] = []
    total = 0.0
    for _ in range(b):
        if chosen:
            sub = gram[np.ix_(chosen, chosen)] + noise_variance * np.eye(len(chosen))
            chol = cho_factor(sub, lower=True)
        gains = np.full(n, -np.inf)
        for i in range(n):
            if i in chosen:
                continue
            if chosen:
                cross = gram[chosen, i]
                residual = gram[i, i] + noise_variance - float(cross @ cho_solve(chol, cross))
            else:
                residual = gram[i, i] + noise_variance
            # a PSD kernel keeps the residual at or above the noise floor;
            # clamp roundoff so duplicates gain exactly zero
            gains[i] = 0.5 * np.log(max(residual, noise_variance) / noise_variance)
        order = np.lexsort((np.arange(n), -gains))
        best = int(order[0])
        if not np.isfinite(gains[best]):
            raise np.linalg.LinAlgError("no selectable candidate")
        total += float(gains[best])
        chosen.append(best)
        values.append(total)
    return AcquisitionBatch(tuple(chosen), tuple(values))


# ---------------------------------------------------------------------------
# Fisher bounds


def fisher_eig_bounds(bundle: FisherBundle, batch) -> tuple[float, float]:
    """Log-det and trace forms of the Fisher information gain of a batch.

    Returns (logdet, trace) with logdet = half the log det of
    (F_batch H^-1 + I) computed through Cholesky log determinants and
    trace = half the trace of F_batch H^-1. The trace always dominates
    the logdet because log(1 + x) <= x eigenvalue by eigenvalue.
    """
    f_sum = bundle.batch_fisher(batch)
    h = bundle.hessian
    logdet = 0.5 * (_chol_logdet(h + f_sum) - _chol_logdet(h))
    chol = cho_factor(h, lower=True)
    trace = 0.5 * float(np.trace(cho_solve(chol, f_sum)))
    return max(logdet, 0.0), max(trace, 0.0)


def similarity_logdet(bundle: FisherBundle, jacobians: np.ndarray, batch) -> float:
    """Batch information through the similarity matrix J H^-1 J^T.

    Equals the weight-space quantity half log det((J^T J + H) H^-1) but
    works in the batch dimension, so it stays cheap for small batches.
    """
    batch = [int(i) for i in batch]
    if not batch:
        return 0.0
    j = np.atleast_2d(np.asarray(jacobians, dtype=float))[batch]
    chol = cho_factor(bundle.hessian, lower=True)
    sim = j @ cho_solve(chol, j.T)
    return 0.5 * _chol_logdet(sim + np.eye(len(batch)))


def fisher_epig_trace(bundle: FisherBundle, fbar_star: np.ndarray, batch) -> float:
    """Remaining target-Fisher weight after acquiring a batch; lower is better.

    Half the trace of Fbar_star (F_batch + H)^-1, monotone nonincreasing
    as the batch grows.
    """
    fbar = np.atleast_2d(np.asarray(fbar_star, dtype=float))
    f_acq = bundle.batch_fisher(batch)
    chol = cho_factor(bundle.hessian + f_acq, lower=True)
    return max(0.5 * float(np.trace(cho_solve(chol, fbar))), 0.0)


# ---------------------------------------------------------------------------
# gradient-length scores


def egl_score(jacobians: np.ndarray, probs: np.ndarray) -> ScoreVector:
    """Expected gradient length: half the model-expected squared loss gradient.

    jacobians is (n, C, p), the per-class loss gradients; probs is (n, C).
    """
    j = np.asarray(jacobians, dtype=float)
    p = np.atleast_2d(np.asarray(probs, dtype=float))
    if j.shape[:2] != p.shape:
        raise ValueError("jacobians and probs disagree on (n, classes)")
    sq = (j ** 2).sum(axis=2)
    return ScoreVector(0.5 * (p * sq).sum(axis=1), "egl")


def grand_score(jacobians: np.ndarray, labels: np.ndarray) -> ScoreVector:
    """Half the squared loss gradient at the observed label.

    The curvature correction term that would subtract half the Hessian
    trace is dropped, which is the standard practice for this score; with
    one-hot predictions the score coincides with the expected gradient
    length at the predicted label.
    """
    j = np.asarray(jacobians, dtype=float)
    y = np.asarray(labels, dtype=int).reshape(-1)
    if y.size != j.shape[0]:
        raise ValueError("one label per point required")
    picked = j[np.arange(y.size), y]
    return ScoreVector(0.5 * (picked ** 2).sum(axis=1), "grand")


# ---------------------------------------------------------------------------
# treatment-effect variance ratios


def causal_scores(mu0_members, mu1_members, t_obs: int,
                  eps: float = CF_VARIANCE_FLOOR) -> tuple[float, float, float]:
    """Variance-based scores for one candidate under a two-arm outcome model.

    Returns (mu, rho, murho): the member variance of the observed-arm
    outcome, the ratio of effect variance to counterfactual-arm variance,
    and their product. When the counterfactual variance falls at or below
    eps the ratio is undefined and comes back NaN so downstream masking
    removes it; the product is still zero when mu is zero.
    """
    m0 = np.asarray(mu0_members, dtype=float).reshape(-1)
    m1 = np.asarray(mu1_members, dtype=float).reshape(-1)
    if m0.size != m1.size or m0.size < 2:
        raise ValueError("need matching member predictions for both arms, K >= 2")
    if t_obs not in (0, 1):
        raise ValueError("observed arm must be 0 or 1")
    var0 = float(m0.var())
    var1 = float(m1.var())
    tau_var = float((m1 - m0).var())
    var_t = var1 if t_obs == 1 else var0
    var_cf = var0 if t_obs == 1 else var1
    mu = var_t
    if var_cf <= eps:
        rho = float("nan")
        murho = 0.0 if mu == 0.0 else float("nan")
    else:
        rho = tau_var / var_cf
        murho = mu * rho
    return mu, rho, murho


def causal_score_vectors(arm_means: np.ndarray, t_obs: np.ndarray,
                         eps: float = CF_VARIANCE_FLOOR):
    """Pool-level mu / rho / murho score vectors.

    arm_means is (n, K, 2) member outcome predictions for arms 0 and 1;
    t_obs is the (n,) observed arm per point. Points whose counterfactual
    variance is at or below eps come back NaN in rho (and murho unless mu
    is zero) and are masked by the score vectors.
    """
    a = np.asarray(arm_means, dtype=float)
    t = np.asarray(t_obs, dtype=int).reshape(-1)
    if a.ndim != 3 or a.shape[2] != 2:
        raise ValueError("arm_means must be (n, K, 2)")
    if a.shape[1] < 2:
        raise ValueError("need K >= 2 members")
    if t.size != a.shape[0] or np.any((t != 0) & (t != 1)):
        raise ValueError("observed arms must be 0/1, one per point")
    var = a.var(axis=1)                      # (n, 2)
    tau_var = (a[:, :, 1] - a[:, :, 0]).var(axis=1)
    idx = np.arange(a.shape[0])
    mu = var[idx, t]
    var_cf = var[idx, 1 - t]
    ok = var_cf > eps
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.where(ok, tau_var / np.where(ok, var_cf, 1.0), np.nan)
    murho = np.where(mu == 0.0, 0.0, mu * rho)
    return (ScoreVector(mu, "mu-bald"),
            ScoreVector(rho, "rho-bald"),
            ScoreVector(murho, "murho-bald"))

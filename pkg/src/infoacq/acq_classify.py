"""Classification acquisition scores and batch selectors.

BALD and its cheap relatives, joint-entropy (BatchBALD-style) batch
selection with exact enumeration or importance sampling, Gumbel-perturbed
stochastic batch acquisition, EPIG / JEPIG, and reducible-holdout-loss
scores for active sampling.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .models import PredictionCube, WeightPosterior

logger = logging.getLogger(__name__)

PROB_FLOOR = 1e-300
NEG_CLAMP = 1e-9

__all__ = [
    "ScoreVector",
    "AcquisitionBatch",
    "ConfigSampler",
    "choose_sampler",
    "top_b_select",
    "bald_scores",
    "entropy_scores",
    "variation_ratio_scores",
    "mean_std_scores",
    "variance_sum_scores",
    "linearized_mutual_information",
    "batchbald_joint_entropy",
    "sampled_joint_entropy",
    "batchbald_select",
    "stochastic_select",
    "epig_scores",
    "epig_nested_mc",
    "target_resample_weights",
    "jepig_conjugate",
    "rho_loss_scores",
    "random_scores",
]


@dataclass(frozen=True)
class ScoreVector:
    """Per-point acquisition scores with an explicit finite mask."""

    scores: np.ndarray
    tag: str
    finite_mask: np.ndarray | None = None

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=float).reshape(-1)
        object.__setattr__(self, "scores", s)
        mask = self.finite_mask
        if mask is None:
            mask = np.isfinite(s)
        mask = np.asarray(mask, dtype=bool).reshape(-1)
        if mask.shape != s.shape:
            raise ValueError("finite_mask shape does not match scores")
        if not np.all(np.isfinite(s[mask])):
            raise ValueError("unmasked scores must be finite")
        object.__setattr__(self, "finite_mask", mask)

    @property
    def n(self) -> int:
        return self.scores.size


@dataclass(frozen=True)
class AcquisitionBatch:
    """Ordered selection with the per-step selection values."""

    indices: tuple[int, ...]
    scores_at_selection: tuple[float, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "scores_at_selection",
                           tuple(float(v) for v in self.scores_at_selection))
        if len(set(idx)) != len(idx):
            raise ValueError("batch indices must not repeat")
        if len(idx) != len(self.scores_at_selection):
            raise ValueError("one selection value per index")


@dataclass(frozen=True)
class ConfigSampler:
    """Joint-entropy estimation policy: enumerate or importance-sample.

    Exact enumeration is only allowed while C^b stays at or below cap;
    the sampled mode draws m label configurations. The seed feeds the
    per-round sample streams of greedy selection.
    """

    mode: str = "exact-enumeration"
    m: int = 10_000
    cap: int = 4096
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exact-enumeration", "importance-sampled"):
            raise ValueError(f"unknown sampler mode {self.mode!r}")
        if self.m < 1:
            raise ValueError("m must be positive")


def choose_sampler(n_classes: int, batch_size: int, m: int = 10_000,
                   cap: int = 4096, seed: int = 0) -> ConfigSampler:
    """Pick exact enumeration when C^B fits under the cap, sampling otherwise."""
    mode = "exact-enumeration" if n_classes**batch_size <= cap else "importance-sampled"
    return ConfigSampler(mode=mode, m=m, cap=cap, seed=seed)


def _selectable(scores: ScoreVector) -> np.ndarray:
    return scores.finite_mask.copy()


def top_b_select(scores: ScoreVector, b: int) -> AcquisitionBatch:
    """Deterministic top-B selection; ties break toward the lowest index."""
    s = np.where(scores.finite_mask, scores.scores, -np.inf)
    order = np.lexsort((np.arange(s.size), -s))
    picked = [int(i) for i in order if scores.finite_mask[i]][:b]
    return AcquisitionBatch(tuple(picked), tuple(scores.scores[i] for i in picked))


def _entropy_rows(p: np.ndarray) -> np.ndarray:
    # entropy along the last axis with 0 ln 0 := 0
    return -np.where(p > 0, p * np.log(np.maximum(p, PROB_FLOOR)), 0.0).sum(axis=-1)


def _clamped(raw: np.ndarray, tag: str) -> np.ndarray:
    worst = raw.min(initial=0.0)
    if worst < 0:
        level = logging.WARNING if worst < -NEG_CLAMP else logging.DEBUG
        logger.log(level, "%s produced negative value %.3e; clamping to 0", tag, worst)
    return np.maximum(raw, 0.0)


def bald_scores(cube: PredictionCube) -> ScoreVector:
    """Epistemic disagreement: H[mean prediction] - mean member entropy."""
    mean_pred = cube.values.mean(axis=1)
    raw = _entropy_rows(mean_pred) - _entropy_rows(cube.values).mean(axis=1)
    return ScoreVector(_clamped(raw, "bald"), "bald")


def entropy_scores(cube: PredictionCube) -> ScoreVector:
    """Total predictive uncertainty: entropy of the member-averaged prediction."""
    return ScoreVector(_entropy_rows(cube.values.mean(axis=1)), "entropy")


def variation_ratio_scores(cube: PredictionCube) -> ScoreVector:
    """One minus the confidence of the most likely class."""
    return ScoreVector(1.0 - cube.values.mean(axis=1).max(axis=1), "varratio")


def mean_std_scores(cube: PredictionCube) -> ScoreVector:
    """Sum over classes of the member standard deviation of p(y|x, member)."""
    return ScoreVector(np.sqrt(cube.values.var(axis=1)).sum(axis=1), "meanstd")


def variance_sum_scores(cube: PredictionCube) -> ScoreVector:
    """Sum over classes of the member variance of p(y|x, member)."""
    return ScoreVector(cube.values.var(axis=1).sum(axis=1), "variance-sum")


def linearized_mutual_information(cube: PredictionCube) -> ScoreVector:
    """Disagreement under the linearized information content 1 - p.

    With H~[p] = 1 - sum_y p_y^2, this is H~[mean prediction] minus the
    member average of H~, and equals variance_sum_scores exactly.
    """
    mean_pred = cube.values.mean(axis=1)
    h_mean = 1.0 - (mean_pred**2).sum(axis=1)
    h_members = 1.0 - (cube.values**2).sum(axis=2)
    return ScoreVector(h_mean - h_members.mean(axis=1), "linearized-mi")


# ---------------------------------------------------------------------------
# joint entropies and greedy batch selection


def _extend_prefix(prefix: np.ndarray, point_probs: np.ndarray, cap: int) -> np.ndarray:
    # prefix: (K, n_cfg) member likelihoods of enumerated configurations
    k, n_cfg = prefix.shape
    n_classes = point_probs.shape[1]
    if n_cfg * n_classes > cap:
        raise ValueError(
            f"exact enumeration needs {n_cfg * n_classes} configurations, cap is {cap}")
    return (prefix[:, :, None] * point_probs[:, None, :]).reshape(k, n_cfg * n_classes)


def _exact_joint_entropy_from_prefix(prefix: np.ndarray) -> float:
    joint = prefix.mean(axis=0)
    return float(_entropy_rows(joint[None, :])[0])


def _draw_prefix_configs(probs_batch: np.ndarray, m: int, rng) -> np.ndarray:
    """Sample m configurations of the batch from the member mixture.

    probs_batch: (b, K, C). Returns member likelihoods (m, K) of the drawn
    configurations, the P-hat matrix of the estimator.
    """
    b, k, n_classes = probs_batch.shape
    members = rng.integers(0, k, size=m)
    weights = np.ones((m, k))
    for i in range(b):
        p = probs_batch[i]  # (K, C)
        u = rng.uniform(size=m)
        cdf = np.cumsum(p[members], axis=1)
        labels = np.minimum((u[:, None] > cdf).sum(axis=1), n_classes - 1)
        weights *= p[:, labels].T
    return weights


def sampled_joint_entropy(cube: PredictionCube, batch, m: int, seed: int,
                          prefix_weights: np.ndarray | None = None):
    """Importance-sampled estimate of the joint label entropy of a batch.

    Draws configurations of all but the last batch point from the member
    mixture, then closes the sum over the last point's classes in a matrix
    product. Returns (estimate, standard error).
    """
    batch = list(batch)
    probs = cube.values
    k = cube.k
    if prefix_weights is None:
        rng = np.random.default_rng(np.random.SeedSequence((seed, len(batch))))
        if len(batch) == 1:
            prefix_weights = np.ones((1, k))
        else:
            prefix_weights = _draw_prefix_configs(probs[batch[:-1]], m, rng)
    last = probs[batch[-1]]  # (K, C)
    joint = prefix_weights @ last / k            # (m, C): p-hat(prefix, y)
    denom = prefix_weights.mean(axis=1)          # (m,): p-hat(prefix)
    log_joint = np.log(np.maximum(joint, PROB_FLOOR))
    vals = -np.where(joint > 0, joint * log_joint, 0.0).sum(axis=1) / denom
    stderr = float(vals.std() / np.sqrt(vals.size)) if vals.size > 1 else 0.0
    return float(vals.mean()), stderr


def batchbald_joint_entropy(cube: PredictionCube, batch, sampler: ConfigSampler) -> float:
    """Joint entropy H[y_batch] of the member-mixture over a candidate batch.

    Exact mode enumerates all C^b label configurations through an
    accumulated member-likelihood matrix; sampled mode importance-samples
    configurations of the first b-1 points.
    """
    batch = list(batch)
    if not batch:
        raise ValueError("batch must be nonempty")
    if not cube.consistent:
        raise ValueError("joint entropies need consistent member samples")
    probs = cube.values
    if sampler.mode == "exact-enumeration":
        if cube.n_classes ** len(batch) > sampler.cap:
            raise ValueError(
                f"C^b = {cube.n_classes ** len(batch)} exceeds cap {sampler.cap}")
        prefix = np.ones((cube.k, 1))
        for i in batch:
            prefix = _extend_prefix(prefix, probs[i], sampler.cap)
        return _exact_joint_entropy_from_prefix(prefix)
    if len(batch) == 1:
        return float(_entropy_rows(probs[batch[0]].mean(axis=0)[None, :])[0])
    value, _ = sampled_joint_entropy(cube, batch, sampler.m, sampler.seed)
    return value


def batchbald_select(cube: PredictionCube, b: int, sampler: ConfigSampler) -> AcquisitionBatch:
    """Greedy joint-disagreement batch selection.

    Each round adds the candidate maximizing H[y_batch + candidate] minus
    the summed member-averaged conditional entropies; ties break toward
    the lowest pool index. With b=1 this is exactly the top BALD point.
    """
    if b > cube.n:
        raise ValueError("batch size exceeds pool size")
    probs = cube.values
    k = cube.k
    cond = _entropy_rows(probs).mean(axis=1)  # (n,) member-averaged entropies
    chosen: list[int] = []
    values: list[float] = []
    exact = sampler.mode == "exact-enumeration"
    prefix = np.ones((k, 1)) if exact else None

    for round_idx in range(b):
        remaining = [i for i in range(cube.n) if i not in set(chosen)]
        cand_scores = np.full(cube.n, -np.inf)
        if exact:
            for i in remaining:
                ext = _extend_prefix(prefix, probs[i], sampler.cap)
                cand_scores[i] = _exact_joint_entropy_from_prefix(ext)
        else:
            if not chosen:
                mean_h = _entropy_rows(probs.mean(axis=1))
                cand_scores[remaining] = mean_h[remaining]
            else:
                rng = np.random.default_rng(np.random.SeedSequence((sampler.seed, round_idx)))
                weights = _draw_prefix_configs(probs[chosen], sampler.m, rng)
                for i in remaining:
                    cand_scores[i], _ = sampled_joint_entropy(
                        cube, chosen + [i], sampler.m, sampler.seed,
                        prefix_weights=weights)
        gain = cand_scores - cond
        best = int(np.argmax(np.where(np.isfinite(gain), gain, -np.inf)))
        chosen.append(best)
        values.append(float(cand_scores[best] - cond[list(chosen)].sum()))
        if exact:
            prefix = _extend_prefix(prefix, probs[best], sampler.cap)
    return AcquisitionBatch(tuple(chosen), tuple(values))


# ---------------------------------------------------------------------------
# stochastic batch acquisition


def stochastic_select(scores: ScoreVector, b: int, mode: str, beta: float,
                      seed: int) -> AcquisitionBatch:
    """Gumbel-perturbed top-B selection.

    Perturbs the score (softmax), its log (power), or the negative log
    rank (softrank) with Gumbel(0, 1/beta) noise and takes the top B.
    beta -> infinity recovers deterministic top-B; beta = 0 is uniform.

    Raises:
        ValueError: power mode with negative scores.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    s = scores.scores
    selectable = _selectable(scores)
    key = np.full(s.shape, -np.inf)
    if mode == "softmax":
        key[selectable] = s[selectable]
    elif mode == "power":
        if np.any(s[selectable] < 0):
            raise ValueError("power mode requires nonnegative scores")
        with np.errstate(divide="ignore"):
            key[selectable] = np.where(s[selectable] > 0, np.log(np.maximum(s[selectable], PROB_FLOOR)), -np.inf)
    elif mode == "softrank":
        order = np.lexsort((np.arange(s.size), -np.where(selectable, s, -np.inf)))
        ranks = np.empty(s.size)
        ranks[order] = np.arange(1, s.size + 1)
        key[selectable] = -np.log(ranks[selectable])
    else:
        raise ValueError(f"unknown stochastic mode {mode!r}")

    rng = np.random.default_rng(seed)
    noise = rng.gumbel(0.0, 1.0, size=s.size)
    if beta == 0:
        # infinite temperature: uniform sampling without replacement
        perturbed = np.where(selectable & np.isfinite(key), noise, -np.inf)
    elif np.isinf(beta):
        perturbed = key
    else:
        perturbed = key + noise / beta
    order = np.lexsort((np.arange(s.size), -perturbed))
    picked = [int(i) for i in order if np.isfinite(perturbed[i])][:b]
    return AcquisitionBatch(tuple(picked), tuple(s[i] for i in picked))


# ---------------------------------------------------------------------------
# EPIG family


def _check_shared_members(cube_pool: PredictionCube, cube_targets: PredictionCube):
    if cube_pool.k != cube_targets.k:
        raise ValueError("pool and target cubes disagree on member count")
    if (cube_pool.member_seed is not None and cube_targets.member_seed is not None
            and cube_pool.member_seed != cube_targets.member_seed):
        raise ValueError("pool and target cubes come from different parameter samples")
    if not (cube_pool.consistent and cube_targets.consistent):
        raise ValueError("EPIG needs consistent member samples")


def epig_scores(cube_pool: PredictionCube, cube_targets: PredictionCube) -> ScoreVector:
    """Expected predictive information gain toward sampled target inputs.

    For each pool point, the average over target points of the mutual
    information between the pool label and the target label under the
    shared member mixture: KL(joint || product of marginals), with
    joint(y, y*) = mean over members of p(y|x, w) p(y*|x*, w).
    """
    _check_shared_members(cube_pool, cube_targets)
    pool = cube_pool.values        # (n, K, C)
    targets = cube_targets.values  # (m, K, C*)
    k = cube_pool.k
    p_bar = pool.mean(axis=1)      # (n, C)
    raw = np.zeros(cube_pool.n)
    for j in range(cube_targets.n):
        joint = np.einsum("nkc,kd->ncd", pool, targets[j]) / k
        q_bar = targets[j].mean(axis=0)     # (C*,)
        denom = p_bar[:, :, None] * q_bar[None, None, :]
        ratio = np.log(np.maximum(joint, PROB_FLOOR)) - np.log(np.maximum(denom, PROB_FLOOR))
        raw += np.where(joint > 0, joint * ratio, 0.0).sum(axis=(1, 2))
    raw /= max(cube_targets.n, 1)
    return ScoreVector(_clamped(raw, "epig"), "epig")


def epig_nested_mc(draw_predictions, x, draw_targets, k: int, m: int, seed: int) -> float:
    """Nested Monte Carlo estimate of EPIG at a single input.

    Args:
        draw_predictions: callable (inputs, k, rng) -> (n, k, C) member
            class probabilities; the same parameter draws must serve every
            input row (consistency).
        x: the candidate input (1-d feature vector).
        draw_targets: callable (m, rng) -> (m, d) target inputs.
        k: parameter draws.
        m: target draws.
        seed: RNG seed for both sample streams.
    """
    if k < 1 or m < 1:
        raise ValueError("k and m must be >= 1")
    rng = np.random.default_rng(seed)
    targets = np.atleast_2d(np.asarray(draw_targets(m, rng), dtype=float))
    inputs = np.vstack([np.atleast_2d(np.asarray(x, dtype=float)), targets])
    values = np.asarray(draw_predictions(inputs, k, rng), dtype=float)
    cube_pool = PredictionCube(values[:1], consistent=True)
    cube_targets = PredictionCube(values[1:], consistent=True)
    return float(epig_scores(cube_pool, cube_targets).scores[0])


def target_resample_weights(cube_pool: PredictionCube, target_class_dist) -> ScoreVector:
    """Pool reweighting that mimics draws from a target class distribution.

    w(x) = sum_y p*(y) phat(y|x) / mean-pool phat(y|x'); the weights are
    nonnegative and sum to the pool size.
    """
    p_star = np.asarray(target_class_dist, dtype=float)
    if cube_pool.n == 0:
        raise ValueError("pool must be nonempty")
    p_hat = cube_pool.values.mean(axis=1)     # (n, C)
    pool_avg = p_hat.mean(axis=0)             # (C,)
    if np.any((p_star > 0) & (pool_avg <= 0)):
        raise ValueError("target class has zero estimated pool mass")
    safe = np.where(pool_avg > 0, pool_avg, 1.0)
    w = (p_hat * (p_star / safe)[None, :]).sum(axis=1)
    return ScoreVector(w, "target-resample-weights")


# ---------------------------------------------------------------------------
# JEPIG (conjugate Gaussian only)


def _gaussian_mi(mu_var: float, noise_variance: float) -> float:
    return 0.5 * float(np.log((max(mu_var, 0.0) + noise_variance) / noise_variance))


def jepig_conjugate(post: WeightPosterior, phi_pool: np.ndarray, pool_index: int,
                    phi_eval: np.ndarray, s_draws: int, seed: int) -> float:
    """Joint expected predictive information gain for a conjugate BLR model.

    BALD at the pool point minus the pseudo-label average of BALD after
    conditioning on the evaluation set. Gaussian conditioning does not
    depend on the drawn label values, so the average over the s_draws
    pseudo-label vectors is exact rather than Monte Carlo.

    Raises:
        ValueError: the posterior has no noise model (non-conjugate use).
    """
    if post.noise_variance is None:
        raise ValueError("jepig_conjugate needs a conjugate regression posterior")
    if s_draws < 1:
        raise ValueError("need at least one pseudo-label draw")
    phi_pool = np.atleast_2d(np.asarray(phi_pool, dtype=float))
    phi_x = phi_pool[pool_index]
    noise = float(post.noise_variance)
    var_x = float(phi_x @ post.covariance @ phi_x)
    before = _gaussian_mi(var_x, noise)
    phi_eval = np.atleast_2d(np.asarray(phi_eval, dtype=float))
    if phi_eval.shape[0] == 0:
        return 0.0
    cov_eval = phi_eval @ post.covariance @ phi_eval.T + noise * np.eye(phi_eval.shape[0])
    chol = cho_factor(0.5 * (cov_eval + cov_eval.T), lower=True)
    cross = phi_eval @ post.covariance @ phi_x
    var_cond = var_x - float(cross @ cho_solve(chol, cross))
    after = _gaussian_mi(var_cond, noise)
    raw = before - after
    if raw < 0:
        logger.debug("jepig produced %.3e; clamping to 0", raw)
    return max(raw, 0.0)


# ---------------------------------------------------------------------------
# active sampling scores


def rho_loss_scores(train_losses, holdout_losses) -> ScoreVector:
    """Reducible-loss selection score: training loss minus holdout loss."""
    tr = np.asarray(train_losses, dtype=float).reshape(-1)
    ho = np.asarray(holdout_losses, dtype=float).reshape(-1)
    if tr.shape != ho.shape:
        raise ValueError("train and holdout losses must align")
    return ScoreVector(tr - ho, "rholoss")


def random_scores(n: int, seed: int) -> ScoreVector:
    """Uniform random scores; the baseline scorer."""
    return ScoreVector(np.random.default_rng(seed).uniform(size=n), "random")

"""Pool-based active-learning and active-sampling experiment loops.

Runs scorer-driven label acquisition (or training-point selection) on the
synthetic desk-scale tasks, records per-round metrics and selections, and
reports rank correlations between scorers. Every run is reproducible from
(config, base seed) alone, including the selected indices.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
import zlib
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.special import expit, softmax
from scipy.stats import spearmanr

from .acq_classify import (
    AcquisitionBatch,
    ConfigSampler,
    ScoreVector,
    bald_scores,
    batchbald_select,
    choose_sampler,
    entropy_scores,
    epig_scores,
    jepig_conjugate,
    mean_std_scores,
    random_scores,
    rho_loss_scores,
    stochastic_select,
    top_b_select,
    variation_ratio_scores,
)
from .acq_kernel import (
    KernelMatrix,
    egl_score,
    fisher_eig_bounds,
    fisher_epig_trace,
    gaussian_epig,
    glm_fisher_bundle,
    grand_score,
    logdet_batch_select,
    posterior_gradient_kernel,
    similarity_logdet,
)
from .models import (
    Dataset,
    GaussianPredictive,
    blr_predictive,
    fit_bayes_linear,
    fit_logistic_glm_laplace,
    make_feature_map,
    make_synthetic,
    predict_cube,
    sample_parameters,
)

PROB_FLOOR = 1e-300

CLASSIFICATION_SCORERS = (
    "bald", "batchbald", "entropy", "varratio", "meanstd",
    "powerbald", "softmaxbald", "softrankbald", "epig", "random",
)
REGRESSION_SCORERS = ("gbald", "gjoint-logdet", "gepig", "jepig", "random")
SAMPLING_SCORERS = ("rholoss", "loss", "grand", "egl", "random")

__all__ = [
    "ExperimentConfig",
    "RoundRecord",
    "RunRecord",
    "config_hash",
    "trial_seed",
    "run_learning_trial",
    "run_active_learning",
    "run_active_sampling",
    "rank_correlation_report",
    "write_results_csv",
    "write_index_log",
    "read_results_csv",
    "CLASSIFICATION_SCORERS",
    "REGRESSION_SCORERS",
    "SAMPLING_SCORERS",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; hashable to a stable id via config_hash.

    retrain accepts "scratch" (refit from nothing each round, the default)
    or "warm"; with the exact conjugate and MAP fits used here a warm
    start can only change solver iteration counts, never the fixed point,
    so the flag is recorded but does not alter results.
    """

    dataset_kind: str
    dataset_params: dict = field(default_factory=dict)
    model: str = "logistic-glm"          # logistic-glm | blr
    feature_map: str = "affine"
    prior_precision: float = 1.0
    noise_variance: float = 0.25
    scorer: str = "bald"
    scorer_params: dict = field(default_factory=dict)
    batch_size: int = 1
    n_initial: int = 10
    budget: int = 20
    k_members: int = 16
    target_spec: dict = field(default_factory=dict)
    trials: int = 1
    base_seed: int = 0
    retrain: str = "scratch"
    metric: str = "auto"                 # auto | accuracy | rmse | target-accuracy

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.budget < self.n_initial:
            raise ValueError("budget must cover the initial labels")
        if self.retrain not in ("scratch", "warm"):
            raise ValueError(f"unknown retrain policy {self.retrain!r}")


@dataclass(frozen=True)
class RoundRecord:
    round: int
    labeled: int
    metric: float
    wall_ms: float
    indices: tuple[int, ...]


@dataclass(frozen=True)
class RunRecord:
    """One trial's trajectory plus the identifiers that reproduce it."""

    trial: int
    seed: int
    config_hash: str
    rounds: tuple[RoundRecord, ...]

    def __post_init__(self):
        labeled = [r.labeled for r in self.rounds]
        if any(b < a for a, b in zip(labeled, labeled[1:])):
            raise ValueError("labeled counts must be monotone over rounds")


def config_hash(cfg: ExperimentConfig) -> str:
    """Stable short hash of the full configuration."""
    payload = json.dumps(asdict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def trial_seed(base_seed: int, trial: int) -> int:
    """Deterministic per-trial seed derived from the base seed."""
    return int(np.random.SeedSequence((base_seed, trial)).generate_state(1)[0])


def _seed_seq(base_seed: int, trial: int, tags) -> np.random.SeedSequence:
    # crc32 keyed tags: stable across processes, unlike builtin str hash
    words = [zlib.crc32(t.encode()) if isinstance(t, str) else int(t)
             for t in tags]
    return np.random.SeedSequence((base_seed, trial, *words))


def _stream(base_seed: int, trial: int, *tags) -> np.random.Generator:
    return np.random.default_rng(_seed_seq(base_seed, trial, tags))


def _stream_int(base_seed: int, trial: int, *tags) -> int:
    return int(_seed_seq(base_seed, trial, tags).generate_state(1)[0])


# ---------------------------------------------------------------------------
# model plumbing


def _features_for(cfg: ExperimentConfig, input_dim: int):
    return make_feature_map(cfg.feature_map, input_dim)


def _glm_probs(post, phi: np.ndarray, n_classes: int) -> np.ndarray:
    w = post.mean.reshape(n_classes, -1)
    return softmax(phi @ w.T, axis=1)


def _accuracy(post, features, data: Dataset) -> float:
    phi = features(data.inputs)
    probs = _glm_probs(post, phi, int(data.n_classes))
    return float(np.mean(probs.argmax(axis=1) == data.targets))


def _rmse(post, features, data: Dataset) -> float:
    phi = features(data.inputs)
    pred = phi @ post.mean
    return float(np.sqrt(np.mean((pred - data.targets) ** 2)))


def _nll_per_point(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    picked = probs[np.arange(labels.size), labels]
    return -np.log(np.maximum(picked, PROB_FLOOR))


def _glm_jacobians(probs: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Per-class cross-entropy gradients (n, C, C*q), class-major layout."""
    n, c = probs.shape
    diffs = probs[:, None, :] - np.eye(c)[None, :, :]     # (n, y, c)
    jac = np.einsum("nyc,nq->nycq", diffs, phi)
    return jac.reshape(n, c, c * phi.shape[1])


def _target_inputs(cfg: ExperimentConfig, pool_inputs: np.ndarray,
                   extras: dict, rng: np.random.Generator) -> np.ndarray:
    """Resolve the target-set inputs. Targets never carry labels."""
    spec = dict(cfg.target_spec or {})
    kind = spec.get("kind", "pool-subsample")
    if kind == "inputs":
        return np.atleast_2d(np.asarray(spec["inputs"], dtype=float))
    if kind == "extras":
        if "target_inputs" not in extras:
            raise ValueError("dataset provides no target inputs")
        return np.asarray(extras["target_inputs"], dtype=float)
    if kind == "pool-subsample":
        m = int(spec.get("m", 32))
        m = min(m, pool_inputs.shape[0])
        idx = rng.choice(pool_inputs.shape[0], size=m, replace=False)
        return pool_inputs[idx]
    raise ValueError(f"unknown target-set kind {kind!r}")


def _test_dataset(cfg: ExperimentConfig, trial: int, data: Dataset, extras: dict):
    """Evaluation data for one trial.

    Classification trials get a fresh draw from their own test stream.
    target-accuracy scores Bayes-optimal labels at freshly drawn target
    inputs. Regression kinds that carry a per-seed ground-truth curve are
    scored against that curve at the pool inputs, since a fresh draw would
    realize a different function.
    """
    metric = cfg.metric
    if metric == "auto":
        metric = "accuracy" if data.kind == "classification" else "rmse"
    if metric == "target-accuracy":
        test_seed = _stream_int(cfg.base_seed, trial, "test")
        _, fresh = make_synthetic(cfg.dataset_kind, cfg.dataset_params, test_seed)
        if "target_inputs" not in fresh or "true_w" not in fresh:
            raise ValueError("target-accuracy needs a dataset with target inputs")
        x = np.asarray(fresh["target_inputs"], dtype=float)
        bayes = (expit(x @ fresh["true_w"]) > 0.5).astype(int)
        return Dataset(x, bayes, "classification", n_classes=2), metric
    if data.kind == "regression" and "f_true" in extras:
        return Dataset(data.inputs, extras["f_true"], "regression"), metric
    test_seed = _stream_int(cfg.base_seed, trial, "test")
    test_data, _ = make_synthetic(cfg.dataset_kind, cfg.dataset_params, test_seed)
    return test_data, metric


def _evaluate(post, features, test_data: Dataset, metric: str) -> float:
    if metric in ("accuracy", "target-accuracy"):
        return _accuracy(post, features, test_data)
    if metric == "rmse":
        return _rmse(post, features, test_data)
    raise ValueError(f"unknown metric {metric!r}")


# ---------------------------------------------------------------------------
# selection dispatch


def _select_classification(cfg: ExperimentConfig, cube, target_cube,
                           b: int, seed: int) -> AcquisitionBatch:
    scorer = cfg.scorer
    params = cfg.scorer_params
    if scorer == "bald":
        return top_b_select(bald_scores(cube), b)
    if scorer == "entropy":
        return top_b_select(entropy_scores(cube), b)
    if scorer == "varratio":
        return top_b_select(variation_ratio_scores(cube), b)
    if scorer == "meanstd":
        return top_b_select(mean_std_scores(cube), b)
    if scorer in ("powerbald", "softmaxbald", "softrankbald"):
        mode = {"powerbald": "power", "softmaxbald": "softmax",
                "softrankbald": "softrank"}[scorer]
        beta = float(params.get("beta", 1.0))
        return stochastic_select(bald_scores(cube), b, mode, beta, seed)
    if scorer == "batchbald":
        sampler = choose_sampler(cube.n_classes, b, m=int(params.get("m", 10_000)),
                                 cap=int(params.get("cap", 4096)), seed=seed)
        return batchbald_select(cube, b, sampler)
    if scorer == "epig":
        scores = epig_scores(cube, target_cube)
        if b == 1:
            return top_b_select(scores, b)
        # top-B on a transfer score piles up near-duplicates; perturb instead
        beta = float(params.get("beta", 1.0))
        return stochastic_select(scores, b, "softmax", beta, seed)
    if scorer == "random":
        return top_b_select(random_scores(cube.n, seed), b)
    raise ValueError(f"scorer {scorer!r} is not a classification pool scorer")


def _select_regression(cfg: ExperimentConfig, post, phi_remaining: np.ndarray,
                       phi_targets: np.ndarray, b: int, seed: int) -> AcquisitionBatch:
    scorer = cfg.scorer
    noise = cfg.noise_variance
    if scorer == "gbald":
        var = np.einsum("np,pq,nq->n", phi_remaining, post.covariance, phi_remaining)
        scores = 0.5 * np.log1p(np.maximum(var, 0.0) / noise)
        return top_b_select(ScoreVector(scores, "gbald"), b)
    if scorer == "gjoint-logdet":
        kern = posterior_gradient_kernel(post, phi_remaining)
        return logdet_batch_select(kern, noise, b)
    if scorer == "gepig":
        cov_pool = phi_remaining @ post.covariance @ phi_remaining.T
        cov_cross = phi_remaining @ post.covariance @ phi_targets.T
        cov_tt = np.einsum("mp,pq,mq->m", phi_targets, post.covariance, phi_targets)
        scores = np.zeros(phi_remaining.shape[0])
        for j in range(phi_targets.shape[0]):
            for i in range(phi_remaining.shape[0]):
                pair = np.array([[cov_pool[i, i], cov_cross[i, j]],
                                 [cov_cross[i, j], cov_tt[j]]])
                scores[i] += gaussian_epig(GaussianPredictive(np.zeros(2), pair, noise))
        scores /= max(phi_targets.shape[0], 1)
        return top_b_select(ScoreVector(scores, "gepig"), b)
    if scorer == "jepig":
        s_draws = int(cfg.scorer_params.get("s_draws", 8))
        scores = np.array([
            jepig_conjugate(post, phi_remaining, i, phi_targets, s_draws, seed)
            for i in range(phi_remaining.shape[0])])
        return top_b_select(ScoreVector(scores, "jepig"), b)
    if scorer == "random":
        return top_b_select(random_scores(phi_remaining.shape[0], seed), b)
    raise ValueError(f"scorer {scorer!r} is not a regression pool scorer")


# ---------------------------------------------------------------------------
# active learning


def _check_learning_scorer(cfg: ExperimentConfig) -> None:
    task = "regression" if cfg.model == "blr" else "classification"
    allowed = REGRESSION_SCORERS if task == "regression" else CLASSIFICATION_SCORERS
    if cfg.scorer not in allowed:
        raise ValueError(
            f"scorer {cfg.scorer!r} does not apply to {task} active learning")


def run_learning_trial(cfg: ExperimentConfig, trial: int) -> RunRecord:
    """One active-learning trial; independent of every other trial.

    All randomness comes from streams keyed by (base_seed, trial), so
    trials can run in any order or in separate processes and still
    produce identical records.
    """
    _check_learning_scorer(cfg)
    return _run_one_al_trial(cfg, trial, config_hash(cfg))


def run_active_learning(cfg: ExperimentConfig) -> list[RunRecord]:
    """Label-acquisition loop: fit, evaluate, select, repeat.

    The model is refit from scratch every round. Each trial draws its own
    data, test set, and member seeds from streams keyed by (base_seed,
    trial), so a run is bitwise-reproducible from the config alone.
    Selected indices leave the candidate pool immediately; no index is
    ever labeled twice.
    """
    _check_learning_scorer(cfg)
    chash = config_hash(cfg)
    records = []
    for trial in range(cfg.trials):
        records.append(_run_one_al_trial(cfg, trial, chash))
    return records


def _run_one_al_trial(cfg: ExperimentConfig, trial: int, chash: str) -> RunRecord:
    data_seed = _stream_int(cfg.base_seed, trial, "data")
    data, extras = make_synthetic(cfg.dataset_kind, cfg.dataset_params, data_seed)
    test_data, metric_name = _test_dataset(cfg, trial, data, extras)
    features = _features_for(cfg, data.inputs.shape[1])

    n = data.n
    if cfg.budget > n:
        raise ValueError("budget exceeds the pool size")
    init_rng = _stream(cfg.base_seed, trial, "init")
    labeled = np.zeros(n, dtype=bool)
    labeled[init_rng.choice(n, size=cfg.n_initial, replace=False)] = True

    target_rng = _stream(cfg.base_seed, trial, "targets")
    target_inputs = None
    if cfg.scorer in ("epig", "gepig", "jepig"):
        target_inputs = _target_inputs(cfg, data.inputs, extras, target_rng)

    rounds = []
    round_idx = 0
    while True:
        t0 = time.perf_counter()
        train = data.subset(np.flatnonzero(labeled))
        if cfg.model == "blr":
            post = fit_bayes_linear(train, features, cfg.prior_precision,
                                    cfg.noise_variance)
        else:
            post = fit_logistic_glm_laplace(train, features, cfg.prior_precision)
        metric = _evaluate(post, features, test_data, metric_name)

        n_labeled = int(labeled.sum())
        if n_labeled >= cfg.budget:
            wall = (time.perf_counter() - t0) * 1000.0
            rounds.append(RoundRecord(round_idx, n_labeled, metric, wall, ()))
            break

        remaining = np.flatnonzero(~labeled)
        b_now = min(cfg.batch_size, cfg.budget - n_labeled, remaining.size)
        sel_seed = _stream_int(cfg.base_seed, trial, "select", round_idx)
        if cfg.model == "blr":
            phi_rem = features(data.inputs[remaining])
            phi_tgt = features(target_inputs) if target_inputs is not None else None
            batch = _select_regression(cfg, post, phi_rem, phi_tgt, b_now, sel_seed)
        else:
            member_seed = _stream_int(cfg.base_seed, trial, "members", round_idx)
            samples = sample_parameters(post, cfg.k_members, member_seed)
            cube = predict_cube(samples, data.subset(remaining), "softmax", features)
            target_cube = None
            if cfg.scorer == "epig":
                target_set = Dataset(target_inputs, np.zeros(len(target_inputs)),
                                     "classification", n_classes=int(data.n_classes))
                target_cube = predict_cube(samples, target_set, "softmax", features)
            batch = _select_classification(cfg, cube, target_cube, b_now, sel_seed)

        chosen = tuple(int(remaining[i]) for i in batch.indices)
        wall = (time.perf_counter() - t0) * 1000.0
        rounds.append(RoundRecord(round_idx, n_labeled, metric, wall, chosen))
        labeled[list(chosen)] = True
        round_idx += 1

    return RunRecord(trial, trial_seed(cfg.base_seed, trial), chash, tuple(rounds))


# ---------------------------------------------------------------------------
# active sampling


def run_active_sampling(cfg: ExperimentConfig,
                        holdout_fraction: float = 0.25) -> RunRecord:
    """Training-point selection on a fully labeled dataset (one trial).

    A holdout split is carved off up front and its model is fit exactly
    once; the per-point holdout losses it yields stay fixed for the whole
    run. Each step draws a candidate window from the unselected training
    points, scores it, and keeps the top batch. The default window is ten
    times the batch, so a step keeps 10% of what it looks at; window equal
    to the batch degenerates to taking the stream in its random order.

    Run several trials by varying base_seed.
    """
    if cfg.scorer not in SAMPLING_SCORERS:
        raise ValueError(f"scorer {cfg.scorer!r} is not an active-sampling scorer")
    trial = 0
    chash = config_hash(cfg)
    data_seed = _stream_int(cfg.base_seed, trial, "data")
    data, extras = make_synthetic(cfg.dataset_kind, cfg.dataset_params, data_seed)
    if data.kind != "classification":
        raise ValueError("active sampling here scores classification losses")
    test_data, metric_name = _test_dataset(cfg, trial, data, extras)
    features = _features_for(cfg, data.inputs.shape[1])

    n = data.n
    n_holdout = int(round(holdout_fraction * n))
    if cfg.scorer == "rholoss" and n_holdout == 0:
        raise ValueError("rholoss needs a nonempty holdout split")
    split_rng = _stream(cfg.base_seed, trial, "holdout")
    perm = split_rng.permutation(n)
    holdout_idx = perm[:n_holdout]
    train_idx = perm[n_holdout:]
    if cfg.budget > train_idx.size:
        raise ValueError("budget exceeds the training split")

    holdout_nll = None
    if cfg.scorer == "rholoss":
        holdout_post = fit_logistic_glm_laplace(
            data.subset(holdout_idx), features, cfg.prior_precision)
        probs = _glm_probs(holdout_post, features(data.inputs), int(data.n_classes))
        holdout_nll = _nll_per_point(probs, data.targets)

    init_rng = _stream(cfg.base_seed, trial, "init")
    selected_mask = np.zeros(n, dtype=bool)
    first = init_rng.choice(train_idx, size=cfg.n_initial, replace=False)
    selected_mask[first] = True

    window = int(cfg.scorer_params.get("window", 10 * cfg.batch_size))
    rounds = []
    round_idx = 0
    while True:
        t0 = time.perf_counter()
        post = fit_logistic_glm_laplace(
            data.subset(np.flatnonzero(selected_mask)), features, cfg.prior_precision)
        metric = _evaluate(post, features, test_data, metric_name)
        n_selected = int(selected_mask.sum())
        if n_selected >= cfg.budget:
            wall = (time.perf_counter() - t0) * 1000.0
            rounds.append(RoundRecord(round_idx, n_selected, metric, wall, ()))
            break

        remaining = np.array([i for i in train_idx if not selected_mask[i]])
        draw_rng = _stream(cfg.base_seed, trial, "window", round_idx)
        take = min(window, remaining.size)
        cand = remaining[draw_rng.choice(remaining.size, size=take, replace=False)]
        phi = features(data.inputs[cand])
        probs = _glm_probs(post, phi, int(data.n_classes))
        labels = data.targets[cand]

        if cfg.scorer == "loss":
            scores = ScoreVector(_nll_per_point(probs, labels), "loss")
        elif cfg.scorer == "rholoss":
            scores = rho_loss_scores(_nll_per_point(probs, labels), holdout_nll[cand])
        elif cfg.scorer == "grand":
            scores = grand_score(_glm_jacobians(probs, phi), labels)
        elif cfg.scorer == "egl":
            scores = egl_score(_glm_jacobians(probs, phi), probs)
        else:
            scores = random_scores(cand.size, _stream_int(
                cfg.base_seed, trial, "score", round_idx))

        b_now = min(cfg.batch_size, cfg.budget - n_selected, cand.size)
        batch = top_b_select(scores, b_now)
        chosen = tuple(int(cand[i]) for i in batch.indices)
        wall = (time.perf_counter() - t0) * 1000.0
        rounds.append(RoundRecord(round_idx, n_selected, metric, wall, chosen))
        selected_mask[list(chosen)] = True
        round_idx += 1

    return RunRecord(trial, trial_seed(cfg.base_seed, trial), chash, tuple(rounds))


# ---------------------------------------------------------------------------
# rank-correlation diagnostics


def rank_correlation_report(cfg: ExperimentConfig, scorer_ids,
                            csv_path=None):
    """Spearman correlations between pool scorings on one fitted model.

    Fits the model on the first n_initial labeled points of the toy, then
    scores the remaining pool once per requested scorer id and correlates
    the rankings. fisher-epig-trace is a minimization proxy, so its score
    is negated here to make every column acquisition-oriented; the
    stochastic ids (powerbald, softmaxbald, softrankbald) contribute their
    deterministic perturbation keys. Gradient-based ids use the loss
    gradients at the observed toy labels.

    Returns (ids, matrix); also writes the matrix as CSV when csv_path is
    given.
    """
    ids = list(scorer_ids)
    trial = 0
    data_seed = _stream_int(cfg.base_seed, trial, "data")
    data, extras = make_synthetic(cfg.dataset_kind, cfg.dataset_params, data_seed)
    if data.kind != "classification":
        raise ValueError("the rank report runs on a classification toy")
    features = _features_for(cfg, data.inputs.shape[1])
    init_rng = _stream(cfg.base_seed, trial, "init")
    labeled = np.zeros(data.n, dtype=bool)
    labeled[init_rng.choice(data.n, size=cfg.n_initial, replace=False)] = True
    remaining = np.flatnonzero(~labeled)

    post = fit_logistic_glm_laplace(data.subset(np.flatnonzero(labeled)),
                                    features, cfg.prior_precision)
    member_seed = _stream_int(cfg.base_seed, trial, "members", 0)
    samples = sample_parameters(post, cfg.k_members, member_seed)
    pool = data.subset(remaining)
    cube = predict_cube(samples, pool, "softmax", features)

    phi_pool = features(pool.inputs)
    n_classes = int(data.n_classes)
    map_probs = _glm_probs(post, phi_pool, n_classes)
    phi_train = features(data.inputs[labeled])
    train_probs = _glm_probs(post, phi_train, n_classes)
    hessian = cfg.prior_precision * np.eye(post.mean.size)
    train_bundle = glm_fisher_bundle(train_probs, phi_train, hessian)
    hessian = hessian + train_bundle.batch_fisher(range(phi_train.shape[0]))
    bundle = glm_fisher_bundle(map_probs, phi_pool, hessian)
    jac = _glm_jacobians(map_probs, phi_pool)

    target_rng = _stream(cfg.base_seed, trial, "targets")
    target_inputs = _target_inputs(cfg, pool.inputs, extras, target_rng)
    target_set = Dataset(target_inputs, np.zeros(len(target_inputs)),
                         "classification", n_classes=n_classes)
    target_cube = predict_cube(samples, target_set, "softmax", features)
    phi_targets = features(target_inputs)
    tgt_probs = _glm_probs(post, phi_targets, n_classes)
    tgt_bundle = glm_fisher_bundle(tgt_probs, phi_targets, hessian)
    fbar_star = tgt_bundle.batch_fisher(range(phi_targets.shape[0]))
    fbar_star /= max(phi_targets.shape[0], 1)

    def score_for(scorer_id: str) -> np.ndarray:
        if scorer_id == "bald":
            return bald_scores(cube).scores
        if scorer_id == "entropy":
            return entropy_scores(cube).scores
        if scorer_id == "varratio":
            return variation_ratio_scores(cube).scores
        if scorer_id == "meanstd":
            return mean_std_scores(cube).scores
        if scorer_id == "powerbald":
            return np.log(np.maximum(bald_scores(cube).scores, PROB_FLOOR))
        if scorer_id == "softmaxbald":
            return bald_scores(cube).scores.copy()
        if scorer_id == "softrankbald":
            s = bald_scores(cube).scores
            order = np.lexsort((np.arange(s.size), -s))
            ranks = np.empty(s.size)
            ranks[order] = np.arange(1, s.size + 1)
            return -np.log(ranks)
        if scorer_id == "epig":
            return epig_scores(cube, target_cube).scores
        if scorer_id == "fisher-eig-logdet":
            return np.array([fisher_eig_bounds(bundle, [i])[0]
                             for i in range(pool.n)])
        if scorer_id == "fisher-eig-trace":
            return np.array([fisher_eig_bounds(bundle, [i])[1]
                             for i in range(pool.n)])
        if scorer_id == "sim-logdet":
            grads = jac[np.arange(pool.n), pool.targets]
            return np.array([similarity_logdet(bundle, grads, [i])
                             for i in range(pool.n)])
        if scorer_id == "fisher-epig-trace":
            return -np.array([fisher_epig_trace(bundle, fbar_star, [i])
                              for i in range(pool.n)])
        if scorer_id == "egl":
            return egl_score(jac, map_probs).scores
        if scorer_id == "grand":
            return grand_score(jac, pool.targets).scores
        if scorer_id == "random":
            return random_scores(pool.n, _stream_int(
                cfg.base_seed, trial, "score")).scores
        raise ValueError(f"unknown scorer id {scorer_id!r} in rank report")

    columns = [score_for(sid) for sid in ids]
    k = len(ids)
    matrix = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            rho = float(spearmanr(columns[i], columns[j])[0])
            matrix[i, j] = matrix[j, i] = rho

    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scorer", *ids])
            for i, sid in enumerate(ids):
                writer.writerow([sid, *(f"{v:.6f}" for v in matrix[i])])
    return ids, matrix


# ---------------------------------------------------------------------------
# run persistence


def write_results_csv(records, scorer_id: str, path) -> None:
    """Metric trajectories as `trial,round,labeled,metric,scorer,seed,wall_ms`.

    Rows are sorted by (trial, round) and the wall_ms column is written as
    0 so the bytes depend only on (config, seed), never on machine speed
    or scheduling; measured times stay on the in-memory records.
    """
    rows = []
    for rec in records:
        for rnd in rec.rounds:
            rows.append((rec.trial, rnd.round, rnd.labeled,
                         f"{rnd.metric:.10g}", scorer_id, rec.seed, 0))
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "round", "labeled", "metric",
                         "scorer", "seed", "wall_ms"])
        writer.writerows(rows)


def write_index_log(records, path) -> None:
    """Selected indices as JSON lines {trial, round, indices}."""
    entries = []
    for rec in records:
        for rnd in rec.rounds:
            entries.append({"trial": rec.trial, "round": rnd.round,
                            "indices": list(rnd.indices)})
    entries.sort(key=lambda e: (e["trial"], e["round"]))
    with open(path, "w") as fh:
        for entry in entries:
            fh.write(json.dumps(entry, separators=(",", ":")) + "\n")


def read_results_csv(path) -> list[dict]:
    """Rows of a results CSV with numeric fields converted."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append({
                "trial": int(row["trial"]),
                "round": int(row["round"]),
                "labeled": int(row["labeled"]),
                "metric": float(row["metric"]),
                "scorer": row["scorer"],
                "seed": int(row["seed"]),
                "wall_ms": float(row["wall_ms"]),
            })
    return out

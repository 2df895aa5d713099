"""Command-line front end: run experiments, plot curves, check invariants.

Subcommands:
    run        execute a TOML-configured experiment, write CSV + index log
    plot       render learning curves (or a final-metric histogram) as SVG
    selfcheck  run the fast invariant suite and print a pass/fail table

Exit codes: 0 ok, 1 trial or check failure, 2 usage/config error. Every
output file is deterministic given (config, seed); the only wall-clock
anywhere is the in-memory wall_ms measurement, which is written as 0.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:                       # python < 3.11
    import tomli as tomllib

from .harness import (
    ExperimentConfig,
    read_results_csv,
    run_active_sampling,
    run_learning_trial,
    write_index_log,
    write_results_csv,
)

__all__ = ["main", "parse_config", "ConfigError"]


class ConfigError(ValueError):
    """A config file problem; the message names the offending field."""


# ---------------------------------------------------------------------------
# config parsing (fail-closed: unknown keys are errors)

_DATASET_KEYS = {"kind", "params"}
_MODEL_KEYS = {"name", "feature_map", "prior_precision", "noise_variance",
               "k_members"}
_SCORER_KEYS = {"id", "params", "target"}
_LOOP_KEYS = {"batch_size", "n_initial", "budget", "trials", "base_seed",
              "retrain", "metric", "mode", "holdout_fraction"}
_TOP_TABLES = {"dataset", "model", "scorer", "loop"}


def _reject_unknown(table: dict, allowed: set, where: str) -> None:
    for key in table:
        if key not in allowed:
            raise ConfigError(f"unknown key {where}.{key}")


def _coerce(table: dict, key: str, kind, where: str, default):
    if key not in table:
        return default
    value = table[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if kind is int and isinstance(value, bool):
        raise ConfigError(f"{where}.{key} must be an integer")
    if not isinstance(value, kind):
        raise ConfigError(f"{where}.{key} must be of type {kind.__name__}")
    return value


def parse_config(text: str):
    """Parse a TOML experiment config.

    Returns (ExperimentConfig, mode, holdout_fraction, seed_in_file).
    Unknown tables or keys are errors, as are missing required fields;
    messages name the field so a typo is quick to find.
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"not valid TOML: {exc}")
    for table in raw:
        if table not in _TOP_TABLES:
            raise ConfigError(f"unknown table [{table}]")

    dataset = raw.get("dataset")
    if not isinstance(dataset, dict):
        raise ConfigError("missing [dataset] table")
    _reject_unknown(dataset, _DATASET_KEYS, "dataset")
    if "kind" not in dataset:
        raise ConfigError("missing required field dataset.kind")
    kind = _coerce(dataset, "kind", str, "dataset", None)
    params = dataset.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("dataset.params must be a table")

    scorer = raw.get("scorer")
    if not isinstance(scorer, dict):
        raise ConfigError("missing [scorer] table")
    _reject_unknown(scorer, _SCORER_KEYS, "scorer")
    if "id" not in scorer:
        raise ConfigError("missing required field scorer.id")
    scorer_id = _coerce(scorer, "id", str, "scorer", None)
    scorer_params = scorer.get("params", {})
    if not isinstance(scorer_params, dict):
        raise ConfigError("scorer.params must be a table")
    target_spec = scorer.get("target", {})
    if not isinstance(target_spec, dict):
        raise ConfigError("scorer.target must be a table")

    model = raw.get("model", {})
    if not isinstance(model, dict):
        raise ConfigError("[model] must be a table")
    _reject_unknown(model, _MODEL_KEYS, "model")

    loop = raw.get("loop", {})
    if not isinstance(loop, dict):
        raise ConfigError("[loop] must be a table")
    _reject_unknown(loop, _LOOP_KEYS, "loop")
    mode = _coerce(loop, "mode", str, "loop", "active-learning")
    if mode not in ("active-learning", "active-sampling"):
        raise ConfigError("loop.mode must be active-learning or active-sampling")
    holdout = _coerce(loop, "holdout_fraction", float, "loop", 0.25)

    kwargs = dict(
        dataset_kind=kind,
        dataset_params=params,
        model=_coerce(model, "name", str, "model", "logistic-glm"),
        feature_map=_coerce(model, "feature_map", str, "model", "affine"),
        prior_precision=_coerce(model, "prior_precision", float, "model", 1.0),
        noise_variance=_coerce(model, "noise_variance", float, "model", 0.25),
        k_members=_coerce(model, "k_members", int, "model", 16),
        scorer=scorer_id,
        scorer_params=scorer_params,
        target_spec=target_spec,
        batch_size=_coerce(loop, "batch_size", int, "loop", 1),
        n_initial=_coerce(loop, "n_initial", int, "loop", 10),
        budget=_coerce(loop, "budget", int, "loop", 20),
        trials=_coerce(loop, "trials", int, "loop", 1),
        base_seed=_coerce(loop, "base_seed", int, "loop", 0),
        retrain=_coerce(loop, "retrain", str, "loop", "scratch"),
        metric=_coerce(loop, "metric", str, "loop", "auto"),
    )
    try:
        cfg = ExperimentConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc))
    if mode == "active-sampling" and cfg.trials != 1:
        raise ConfigError("loop.trials must be 1 in active-sampling mode; "
                          "vary base_seed for repeats")
    return cfg, mode, holdout, "base_seed" in loop


def _resolve_seed(cli_seed, cfg: ExperimentConfig, seed_in_file: bool) -> int:
    """--seed beats the config; INFOACQ_SEED fills in when neither is given."""
    if cli_seed is not None:
        return int(cli_seed)
    if seed_in_file:
        return cfg.base_seed
    env = os.environ.get("INFOACQ_SEED")
    if env is not None and env != "":
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"INFOACQ_SEED is not an integer: {env!r}")
    return cfg.base_seed


# ---------------------------------------------------------------------------
# atomic output


def _atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."),
                               prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_with(path, writer) -> None:
    """Run writer(tmp_path) then rename over the target."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."),
                               prefix=f".{path.name}.")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# run


def _one_trial(payload):
    cfg, trial = payload
    return run_learning_trial(cfg, trial)


def _run_trials(cfg: ExperimentConfig, jobs: int):
    payloads = [(cfg, t) for t in range(cfg.trials)]
    if jobs <= 1 or cfg.trials == 1:
        return [_one_trial(p) for p in payloads]
    from concurrent.futures import ProcessPoolExecutor
    workers = min(jobs, cfg.trials)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_one_trial, payloads))


def cmd_run(args) -> int:
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        cfg, mode, holdout, seed_in_file = parse_config(text)
        seed = _resolve_seed(args.seed, cfg, seed_in_file)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    cfg = dataclasses.replace(cfg, base_seed=seed)

    try:
        if mode == "active-sampling":
            records = [run_active_sampling(cfg, holdout)]
        else:
            records = _run_trials(cfg, args.jobs)
    except Exception as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1

    out = Path(args.out)
    indices_out = Path(args.indices_out) if args.indices_out else \
        out.with_name(out.stem + "_indices.jsonl")
    _atomic_write_with(out, lambda p: write_results_csv(records, cfg.scorer, p))
    _atomic_write_with(indices_out, lambda p: write_index_log(records, p))
    print(f"wrote {out} and {indices_out} ({len(records)} trial(s), seed {seed})")
    return 0


# ---------------------------------------------------------------------------
# plot

_PALETTE = ["#4477aa", "#ee6677", "#228833", "#ccbb44",
            "#66ccee", "#aa3377", "#bbbbbb"]
_W, _H = 640, 420
_L, _R, _T, _B = 70, 614, 28, 374


def _scale(lo, hi):
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def _xpix(v, lo, hi):
    return _L + (v - lo) / (hi - lo) * (_R - _L)


def _ypix(v, lo, hi):
    return _B - (v - lo) / (hi - lo) * (_B - _T)


def _svg_head(xlabel: str, ylabel: str) -> list:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<line x1="{_L}" y1="{_B}" x2="{_R}" y2="{_B}" stroke="black"/>',
        f'<line x1="{_L}" y1="{_T}" x2="{_L}" y2="{_B}" stroke="black"/>',
        f'<text x="{(_L + _R) / 2:.2f}" y="{_H - 6}" '
        f'text-anchor="middle">{xlabel}</text>',
        f'<text x="14" y="{(_T + _B) / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {(_T + _B) / 2:.2f})">{ylabel}</text>',
    ]


def _ticks(parts: list, xlo, xhi, ylo, yhi) -> None:
    for i in range(5):
        xv = xlo + i * (xhi - xlo) / 4
        yv = ylo + i * (yhi - ylo) / 4
        xp, yp = _xpix(xv, xlo, xhi), _ypix(yv, ylo, yhi)
        parts.append(f'<line x1="{xp:.2f}" y1="{_B}" x2="{xp:.2f}" '
                     f'y2="{_B + 4}" stroke="black"/>')
        parts.append(f'<text x="{xp:.2f}" y="{_B + 16}" '
                     f'text-anchor="middle">{xv:.4g}</text>')
        parts.append(f'<line x1="{_L - 4}" y1="{yp:.2f}" x2="{_L}" '
                     f'y2="{yp:.2f}" stroke="black"/>')
        parts.append(f'<text x="{_L - 8}" y="{yp + 4:.2f}" '
                     f'text-anchor="end">{yv:.4g}</text>')


def render_curves_svg(groups: dict, xlabel: str, ylabel: str) -> str:
    """Median trajectory with a 25-75% band per group, fixed layout.

    groups maps a group name to {x: [metric values across trials]}. The
    output contains exactly one polyline per group and no timestamps, so
    equal inputs give byte-equal SVG.
    """
    names = sorted(groups)
    stats = {}
    for name in names:
        xs = sorted(groups[name])
        q = np.array([np.percentile(groups[name][x], [25, 50, 75]) for x in xs])
        stats[name] = (np.array(xs, dtype=float), q)
    xlo = min(s[0].min() for s in stats.values())
    xhi = max(s[0].max() for s in stats.values())
    ylo = min(s[1].min() for s in stats.values())
    yhi = max(s[1].max() for s in stats.values())
    xlo, xhi = _scale(xlo, xhi)
    ylo, yhi = _scale(ylo - 0.05 * (yhi - ylo), yhi + 0.05 * (yhi - ylo))

    parts = _svg_head(xlabel, ylabel)
    _ticks(parts, xlo, xhi, ylo, yhi)
    for idx, name in enumerate(names):
        color = _PALETTE[idx % len(_PALETTE)]
        xs, q = stats[name]
        xp = [_xpix(x, xlo, xhi) for x in xs]
        band = [f"{x:.2f},{_ypix(v, ylo, yhi):.2f}" for x, v in zip(xp, q[:, 2])]
        band += [f"{x:.2f},{_ypix(v, ylo, yhi):.2f}"
                 for x, v in zip(reversed(xp), reversed(q[:, 0]))]
        parts.append(f'<polygon points="{" ".join(band)}" fill="{color}" '
                     f'fill-opacity="0.18" stroke="none"/>')
        median = " ".join(f"{x:.2f},{_ypix(v, ylo, yhi):.2f}"
                          for x, v in zip(xp, q[:, 1]))
        parts.append(f'<polyline points="{median}" fill="none" '
                     f'stroke="{color}" stroke-width="1.8"/>')
        ly = _T + 14 + 16 * idx
        parts.append(f'<line x1="{_R - 130}" y1="{ly}" x2="{_R - 110}" '
                     f'y2="{ly}" stroke="{color}" stroke-width="1.8"/>')
        parts.append(f'<text x="{_R - 104}" y="{ly + 4}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_hist_svg(finals: dict, xlabel: str) -> str:
    """Histogram of final metric values, one bar series per group."""
    names = sorted(finals)
    allv = np.concatenate([np.asarray(finals[n], dtype=float) for n in names])
    lo, hi = _scale(float(allv.min()), float(allv.max()))
    edges = np.linspace(lo, hi, 11)
    counts = {n: np.histogram(finals[n], bins=edges)[0] for n in names}
    peak = max(1, max(c.max() for c in counts.values()))

    parts = _svg_head(xlabel, "trials")
    _ticks(parts, lo, hi, 0.0, float(peak))
    slot = (_R - _L) / 10.0
    width = slot / max(len(names), 1)
    for idx, name in enumerate(names):
        color = _PALETTE[idx % len(_PALETTE)]
        for b, count in enumerate(counts[name]):
            if count == 0:
                continue
            x = _L + b * slot + idx * width
            top = _ypix(float(count), 0.0, float(peak))
            parts.append(
                f'<rect class="bar" x="{x:.2f}" y="{top:.2f}" '
                f'width="{width:.2f}" height="{_B - top:.2f}" '
                f'fill="{color}" fill-opacity="0.8"/>')
        ly = _T + 14 + 16 * idx
        parts.append(f'<rect x="{_R - 130}" y="{ly - 8}" width="18" height="10" '
                     f'fill="{color}" fill-opacity="0.8"/>')
        parts.append(f'<text x="{_R - 104}" y="{ly + 2}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_plot(args) -> int:
    try:
        rows = read_results_csv(args.results)
    except (OSError, KeyError, TypeError, ValueError) as exc:
        print(f"results error: {exc}", file=sys.stderr)
        return 2
    if not rows:
        print("results error: no data rows", file=sys.stderr)
        return 2
    if args.group_by not in rows[0]:
        print(f"results error: no column {args.group_by!r}", file=sys.stderr)
        return 2

    if args.kind == "curves":
        groups: dict = {}
        for row in rows:
            g = groups.setdefault(str(row[args.group_by]), {})
            g.setdefault(row["labeled"], []).append(row["metric"])
        svg = render_curves_svg(groups, "labeled", args.metric)
    else:
        last_round = {}
        for row in rows:
            key = (str(row[args.group_by]), row["trial"], row["seed"])
            if key not in last_round or row["round"] > last_round[key]["round"]:
                last_round[key] = row
        finals: dict = {}
        for (name, _, _), row in last_round.items():
            finals.setdefault(name, []).append(row["metric"])
        svg = render_hist_svg(finals, args.metric)

    _atomic_write_text(args.out, svg)
    print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# selfcheck


def _selfcheck_results() -> list:
    """Fast invariant suite; returns (name, passed) pairs.

    Each check reduces to a discrepancy that must stay within a fixed
    tolerance. INFOACQ_SELFCHECK_PERTURB (test-only hook) adds its value
    to every computed discrepancy so the failure path can be exercised.
    """
    from .acq_classify import (
        bald_scores, batchbald_select, choose_sampler, linearized_mutual_information,
        stochastic_select, variance_sum_scores, ScoreVector,
    )
    from .acq_kernel import (
        empirical_pred_kernel, fisher_eig_bounds, FisherBundle, psi_gradient_kernel,
    )
    from .density import entropy_rmse_decomposition
    from .infomath import (
        DirichletParams, dirichlet_entropy_variance, dirichlet_expected_entropy,
        entropy, kl_divergence, stirling_binomial_bound,
    )
    from .models import PredictionCube

    delta = float(os.environ.get("INFOACQ_SELFCHECK_PERTURB", "0") or 0.0)
    results = []

    def check(name: str, discrepancy: float, tol: float) -> None:
        results.append((name, abs(discrepancy + delta) <= tol))

    rng = np.random.default_rng(20240817)

    check("entropy-point-value",
          entropy([0.75, 0.25]) - 0.5623351446188083, 1e-12)
    check("kl-point-value",
          kl_divergence([0.9, 0.1], [0.5, 0.5]) - 0.36806420716849714, 1e-12)

    cube2 = PredictionCube(np.array([[[0.9, 0.1], [0.6, 0.4]]]))
    check("disagreement-point-value",
          bald_scores(cube2).scores[0] - 0.06328782441845593, 1e-12)

    raw = rng.dirichlet(np.ones(2), size=(6, 3))
    cube = PredictionCube(raw)
    batch = batchbald_select(cube, 4, choose_sampler(2, 4))
    gains = np.diff(batch.scores_at_selection, prepend=0.0)
    check("batch-gain-monotone", max(0.0, float(np.diff(gains).max())), 1e-9)
    bald = bald_scores(cube).scores
    check("batch-joint-bound",
          max(0.0, batch.scores_at_selection[-1] - bald[list(batch.indices)].sum()),
          1e-9)

    probs = np.array([0.1, 0.2, 0.3, 0.4])
    scores = ScoreVector(np.log(probs), "softmax-check")
    hits = np.zeros(4)
    for draw in range(20_000):
        hits[stochastic_select(scores, 1, "softmax", 1.0, draw).indices[0]] += 1
    check("gumbel-pick-frequency",
          0.5 * np.abs(hits / hits.sum() - probs).sum(), 0.02)

    phi = rng.standard_normal((5, 3))
    hess = 2.0 * np.eye(3)
    bundle = FisherBundle(hess, dense=np.einsum("np,nq->npq", phi, phi))
    logdet, _ = fisher_eig_bounds(bundle, [0, 2])
    cov = np.linalg.inv(hess)
    exact = 0.5 * np.log(np.linalg.det(
        np.eye(2) + phi[[0, 2]] @ cov @ phi[[0, 2]].T))
    check("fisher-logdet-eig-match", logdet - exact, 1e-10)

    members = rng.dirichlet(np.ones(3), size=8)
    k_emp = empirical_pred_kernel(members)
    k_psi = psi_gradient_kernel(members, family="multinomial")
    k_dir = psi_gradient_kernel(members, family="dirichlet")
    check("psi-kernel-empirical-match",
          float(np.abs(k_psi.gram - k_emp.gram).max()), 1e-12)
    check("psi-dirichlet-half-factor",
          float(np.abs(k_psi.gram - 2.0 * k_dir.gram).max()), 1e-12)

    cube3 = PredictionCube(rng.dirichlet(np.ones(4), size=(7, 5)))
    check("variance-linearization-match",
          float(np.abs(linearized_mutual_information(cube3).scores
                       - variance_sum_scores(cube3).scores).max()), 1e-12)

    worst = 0.0
    for n in range(1, 17):
        for r in range(n + 1):
            bound, exact_val, gap = stirling_binomial_bound(n, r)
            worst = max(worst, exact_val - bound, gap - np.log(max(n, 2)))
    check("count-entropy-bound", max(0.0, worst), 1e-12)

    rmse, bias, std = entropy_rmse_decomposition(cube3, 2)
    check("entropy-rmse-split", rmse**2 - (std**2 + bias**2), 1e-10)

    d = DirichletParams([1.0, 1.0])
    check("dirichlet-entropy-moments",
          abs(dirichlet_expected_entropy(d) - 0.5)
          + abs(dirichlet_entropy_variance(d) - 0.035021977717257735), 1e-9)

    return results


def cmd_selfcheck(_args) -> int:
    results = _selfcheck_results()
    for name, passed in results:
        print(f"{'ok  ' if passed else 'FAIL'}  {name}")
    n_ok = sum(p for _, p in results)
    print(f"{n_ok}/{len(results)} checks passed")
    return 0 if n_ok == len(results) else 1


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="infoacq",
        description="information-gain acquisition experiments on desk-scale models")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    run = sub.add_parser("run", help="run a TOML-configured experiment")
    run.add_argument("config", help="experiment config (TOML)")
    run.add_argument("--out", default="results.csv", help="results CSV path")
    run.add_argument("--indices-out", default=None,
                     help="selection log path (default: <out>_indices.jsonl)")
    run.add_argument("--seed", type=int, default=None,
                     help="override the base seed")
    run.add_argument("--jobs", type=int, default=1,
                     help="parallel worker processes for trials")

    plot = sub.add_parser("plot", help="render results as SVG")
    plot.add_argument("results", help="results CSV from the run subcommand")
    plot.add_argument("--out", default="curves.svg", help="SVG output path")
    plot.add_argument("--metric", default="metric", help="metric axis label")
    plot.add_argument("--group-by", default="scorer",
                      help="CSV column that defines the curve groups")
    plot.add_argument("--kind", choices=["curves", "hist"], default="curves",
                      help="learning curves or final-metric histogram")

    sub.add_parser("selfcheck", help="run the fast invariant suite")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.subcommand == "run":
        return cmd_run(args)
    if args.subcommand == "plot":
        return cmd_plot(args)
    return cmd_selfcheck(args)


if __name__ == "__main__":
    sys.exit(main())

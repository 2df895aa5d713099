"""Holdout-referenced sampling sidesteps corrupted labels.

Ten percent of the training labels are flipped. Plain loss-based sampling
keeps picking the highest-loss points, and corrupted points have high loss
forever, so it wastes its budget on noise. The holdout-referenced score
subtracts each point's loss under a model fit on clean-ish holdout data:
corrupted points score low because even the holdout model finds them
hopeless, while genuinely informative points keep a large gap.

Run: python3 demos/noisy_labels.py
"""

from infoacq.harness import ExperimentConfig, run_active_sampling, _stream_int
from infoacq.models import make_synthetic


def corrupted_picks(scorer: str, seed: int):
    cfg = ExperimentConfig(
        dataset_kind="ambiguous-label",
        dataset_params={"n": 300, "flip_rate": 0.1},
        scorer=scorer,
        batch_size=4,
        n_initial=12,
        budget=60,
        trials=1,
        base_seed=seed,
    )
    rec = run_active_sampling(cfg)
    data_seed = _stream_int(seed, 0, "data")
    _, extras = make_synthetic("ambiguous-label", cfg.dataset_params, data_seed)
    picked = [i for r in rec.rounds for i in r.indices]
    n_bad = int(extras["flip_mask"][picked].sum())
    return n_bad, len(picked), rec.rounds[-1].metric


def main():
    print("corrupted picks out of 48 acquired, five seeds\n")
    print(f"{'seed':>4}  {'loss-only':>10}  {'holdout-referenced':>18}")
    for seed in range(5):
        bad_loss, total, _ = corrupted_picks("loss", seed)
        bad_rho, _, _ = corrupted_picks("rholoss", seed)
        print(f"{seed:>4}  {bad_loss:>10}  {bad_rho:>18}")


if __name__ == "__main__":
    main()

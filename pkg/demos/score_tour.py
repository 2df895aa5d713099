"""A guided tour of the pool scores on one tiny prediction cube.

Three pool points, four posterior members, two classes. Point 0 is one
the members agree is uncertain (no disagreement, pure noise), point 1 is
one the members fight over (pure disagreement), point 2 is easy. The tour
prints every score family on this cube, then shows the one-line Gaussian
analogue of the disagreement trap: a process can carry maximal joint
information and still transfer nothing to a target.

Run: python3 demos/score_tour.py
"""

import numpy as np

from infoacq.acq_classify import (
    bald_scores,
    entropy_scores,
    epig_scores,
    mean_std_scores,
    variance_sum_scores,
    variation_ratio_scores,
)
from infoacq.acq_kernel import gaussian_epig, gaussian_joint_entropy
from infoacq.models import GaussianPredictive, PredictionCube


def main():
    cube = PredictionCube(np.array([
        # agreed-noisy: every member says fifty-fifty
        [[0.5, 0.5], [0.5, 0.5], [0.5, 0.5], [0.5, 0.5]],
        # contested: members are confident but split
        [[0.95, 0.05], [0.95, 0.05], [0.05, 0.95], [0.05, 0.95]],
        # easy: everyone agrees on class 0
        [[0.9, 0.1], [0.92, 0.08], [0.88, 0.12], [0.9, 0.1]],
    ]))
    names = ("agreed-noisy", "contested", "easy")

    rows = {
        "entropy": entropy_scores(cube).scores,
        "bald": bald_scores(cube).scores,
        "variation-ratio": variation_ratio_scores(cube).scores,
        "mean-std": mean_std_scores(cube).scores,
        "variance-sum": variance_sum_scores(cube).scores,
        "epig(self)": epig_scores(cube, cube).scores,
    }
    header = "".join(f"{n:>14}" for n in names)
    print(f"{'score':<16}{header}")
    for label, vals in rows.items():
        cells = "".join(f"{v:>14.4f}" for v in vals)
        print(f"{label:<16}{cells}")
    print()
    print("entropy cannot tell the first two apart; the disagreement")
    print("family (bald and friends) ignores the agreed-noisy point.\n")

    # the Gaussian version of the trap: eight nearly independent sites
    x = np.arange(1.0, 16.0, 2.0)
    ell = 1e-3
    gram = np.exp(-0.5 * (x[:, None] - x[None, :]) ** 2 / ell ** 2)
    pred = GaussianPredictive(np.zeros(8), gram, 1.0)
    joint = gaussian_joint_entropy(pred) - 0.5 * 8 * np.log(2 * np.pi * np.e)
    pair = GaussianPredictive(np.zeros(2), np.array([[1.0, 0.0], [0.0, 1.0]]), 1.0)
    print(f"tiny-lengthscale GP, eight observation sites:")
    print(f"  joint parameter information: {joint:.4f} nats (= 4 ln 2)")
    print(f"  transfer to any target away from the sites: "
          f"{gaussian_epig(pair):.4f} nats")


if __name__ == "__main__":
    main()

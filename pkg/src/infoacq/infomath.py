"""Core information-theoretic quantities on categorical tables.

Entropy, KL, observed-outcome information gain and surprise on dense joint
tables, Dirichlet entropy moments, and a Stirling bound on binomial
coefficients. Everything works in nats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

# Probabilities below this are clamped before taking logs; with the
# 0*ln(0) := 0 convention this never changes a result at test tolerances.
PROB_FLOOR = 1e-300
MASS_TOL = 1e-9

__all__ = [
    "JointTable",
    "DirichletParams",
    "entropy",
    "kl_divergence",
    "marginal",
    "condition",
    "information_gain",
    "surprise",
    "mutual_information",
    "triple_information",
    "digamma",
    "trigamma",
    "dirichlet_expected_entropy",
    "dirichlet_entropy_variance",
    "dirichlet_moment_match",
    "stirling_binomial_bound",
]


def _as_probs(p, name: str = "probs") -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a 1-d sequence with at least one entry")
    if np.any(arr < 0):
        raise ValueError(f"{name} has negative entries")
    if abs(arr.sum() - 1.0) > MASS_TOL:
        raise ValueError(f"{name} sums to {arr.sum()!r}, not 1")
    return arr


def _xlogx(p: np.ndarray) -> np.ndarray:
    clamped = np.maximum(p, PROB_FLOOR)
    return np.where(p > 0, p * np.log(clamped), 0.0)


def entropy(probs) -> float:
    """Shannon entropy -sum p ln p of a categorical distribution, in nats."""
    p = _as_probs(probs)
    return float(-_xlogx(p).sum())


def kl_divergence(p, q) -> float:
    """KL divergence sum p ln(p/q) in nats.

    Args:
        p: categorical probabilities.
        q: categorical probabilities on the same outcome set.

    Raises:
        ValueError: length mismatch, or p puts mass where q has none.
    """
    pa = _as_probs(p, "p")
    qa = _as_probs(q, "q")
    if pa.shape != qa.shape:
        raise ValueError("p and q must have the same length")
    if np.any((qa == 0) & (pa > 0)):
        raise ValueError("support violation: p > 0 where q == 0")
    mask = pa > 0
    return float((pa[mask] * (np.log(pa[mask]) - np.log(np.maximum(qa[mask], PROB_FLOOR)))).sum())


@dataclass(frozen=True)
class JointTable:
    """Dense joint distribution over named axes.

    probs is a k-dimensional array of outcome-tuple probabilities and
    axis_labels names each axis in order.
    """

    probs: np.ndarray
    axis_labels: tuple[str, ...]

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", arr)
        object.__setattr__(self, "axis_labels", tuple(self.axis_labels))
        if arr.ndim != len(self.axis_labels):
            raise ValueError("axis_labels must name every axis of probs")
        if len(set(self.axis_labels)) != len(self.axis_labels):
            raise ValueError("axis labels must be unique")
        if np.any(arr < 0):
            raise ValueError("joint table has negative entries")
        if abs(arr.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"joint table mass is {arr.sum()!r}, not 1")

    def axis_index(self, label: str) -> int:
        try:
            return self.axis_labels.index(label)
        except ValueError:
            raise ValueError(f"no axis named {label!r}; have {self.axis_labels}") from None


def marginal(table: JointTable, axis_label: str) -> np.ndarray:
    """Marginal distribution of one named axis."""
    ax = table.axis_index(axis_label)
    other = tuple(i for i in range(table.probs.ndim) if i != ax)
    return table.probs.sum(axis=other) if other else table.probs.copy()


def _rest_distribution(table: JointTable, observed_axis: str) -> np.ndarray:
    # joint of all non-observed axes, flattened
    ax = table.axis_index(observed_axis)
    return np.moveaxis(table.probs, ax, -1).sum(axis=-1).reshape(-1)


def condition(table: JointTable, observed_axis: str, outcome: int) -> JointTable:
    """Condition on one observed outcome; returns a table over the remaining axes.

    Raises:
        ValueError: the outcome has zero probability.
    """
    ax = table.axis_index(observed_axis)
    sliced = np.take(table.probs, outcome, axis=ax)
    mass = sliced.sum()
    if mass <= 0:
        raise ValueError(f"outcome {outcome} of {observed_axis!r} has zero probability")
    rest = tuple(l for l in table.axis_labels if l != observed_axis)
    return JointTable(sliced / mass, rest)


def information_gain(table: JointTable, observed_axis: str, outcome: int) -> float:
    """Information gain H[X] - H[X|y] of observing one outcome, in nats.

    X is the joint of all non-observed axes. Unlike the surprise this can
    be negative: an outcome can leave us more uncertain than before.
    """
    prior = _rest_distribution(table, observed_axis)
    posterior = condition(table, observed_axis, outcome).probs.reshape(-1)
    return float(-_xlogx(prior).sum() + _xlogx(posterior).sum())


def surprise(table: JointTable, observed_axis: str, outcome: int) -> float:
    """Surprise of an observed outcome: KL(p(X|y) || p(X)) >= 0, in nats."""
    prior = _rest_distribution(table, observed_axis)
    posterior = condition(table, observed_axis, outcome).probs.reshape(-1)
    return kl_divergence(posterior, prior)


def mutual_information(table: JointTable, axis_label: str) -> float:
    """Full mutual information I[X; Y] between one axis Y and the rest X."""
    ax = table.axis_index(axis_label)
    p_y = marginal(table, axis_label)
    joint = np.moveaxis(table.probs, ax, -1).reshape(-1, p_y.size)
    p_x = joint.sum(axis=1)
    outer = np.outer(p_x, p_y)
    mask = joint > 0
    return float((joint[mask] * (np.log(joint[mask]) - np.log(np.maximum(outer[mask], PROB_FLOOR)))).sum())


def triple_information(table: JointTable, axis_x: str, axis_y: str, observed_axis: str, outcome: int) -> float:
    """Triple mutual information I[X; Y; z] = I[X; Y] - I[X; Y | z] for an observed z.

    Table-level helper for three-axis tables; can take either sign.
    """
    if table.probs.ndim != 3:
        raise ValueError("triple_information expects a three-axis table")
    if {axis_x, axis_y, observed_axis} != set(table.axis_labels):
        raise ValueError("axis_x, axis_y, observed_axis must name the three axes")
    drop = condition(table, observed_axis, outcome)
    # marginalize z out of the full table for the unconditional term
    ax = table.axis_index(observed_axis)
    rest = tuple(l for l in table.axis_labels if l != observed_axis)
    unconditional = JointTable(table.probs.sum(axis=ax), rest)
    return mutual_information(unconditional, axis_y) - mutual_information(drop, axis_y)


def digamma(x):
    """Digamma psi(x); accurate to ~1e-12 for arguments >= 1e-6."""
    return special.digamma(x)


def trigamma(x):
    """Trigamma psi'(x); accurate to ~1e-12 relative for arguments >= 1e-6."""
    return special.polygamma(1, x)


@dataclass(frozen=True)
class DirichletParams:
    """Concentration parameters of a Dirichlet distribution."""

    alpha: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.alpha, dtype=float)
        object.__setattr__(self, "alpha", arr)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("alpha must be a 1-d sequence")
        if np.any(arr <= 0):
            raise ValueError("all concentrations must be positive")

    @property
    def alpha0(self) -> float:
        return float(self.alpha.sum())


def dirichlet_expected_entropy(d: DirichletParams) -> float:
    """E[H[Y|p]] for p ~ Dirichlet(alpha), in nats.

    Closed form: psi(a0 + 1) - sum_i (a_i / a0) psi(a_i + 1).
    """
    a = d.alpha
    a0 = d.alpha0
    return float(digamma(a0 + 1) - ((a / a0) * digamma(a + 1)).sum())


def dirichlet_entropy_variance(d: DirichletParams) -> float:
    """Var[H[Y|p]] for p ~ Dirichlet(alpha), in nats squared.

    Second moment assembled from the rising-factorial moments of
    E[p_i p_j log p_i log p_j]; the diagonal and cross terms carry
    different digamma shifts, hence the two sums.
    """
    a = d.alpha
    a0 = d.alpha0
    norm = a0 * (a0 + 1)
    diag = ((a * (a + 1) / norm)
            * (trigamma(a + 2) - trigamma(a0 + 2)
               + (digamma(a + 2) - digamma(a0 + 2)) ** 2)).sum()
    shifted = digamma(a + 1) - digamma(a0 + 2)
    outer = np.outer(a, a) / norm
    cross_terms = np.outer(shifted, shifted) - trigamma(a0 + 2)
    np.fill_diagonal(cross_terms, 0.0)
    np.fill_diagonal(outer, 0.0)
    cross = (outer * cross_terms).sum()
    second_moment = diag + cross
    mean = dirichlet_expected_entropy(d)
    return float(max(second_moment - mean ** 2, 0.0))


# Bisection window for the moment-match root find, in ln(alpha0).
_MATCH_LO, _MATCH_HI = -20.0, 30.0
_MATCH_TOL = 1e-10
_ALPHA0_CAP = 1e12


def dirichlet_moment_match(mean, expected_entropy: float) -> DirichletParams:
    """Find Dirichlet parameters with a given categorical mean and expected entropy.

    Solves for the concentration total a0 with alpha_i = a0 * mean_i by
    bisection on ln a0; the expected entropy is strictly increasing in a0,
    from 0 toward entropy(mean).

    Args:
        mean: strictly positive categorical mean.
        expected_entropy: target E[H], must lie strictly inside
            (0, entropy(mean)).

    Raises:
        ValueError: infeasible target, or a0 beyond the 1e12 cap.
    """
    m = _as_probs(mean, "mean")
    if np.any(m <= 0):
        raise ValueError("mean must be strictly positive for moment matching")
    h_cap = entropy(m)
    if not (0.0 < expected_entropy < h_cap):
        raise ValueError(
            f"expected_entropy {expected_entropy!r} outside feasible range (0, {h_cap!r})")

    def gap(log_a0: float) -> float:
        return dirichlet_expected_entropy(DirichletParams(np.exp(log_a0) * m)) - expected_entropy

    lo, hi = _MATCH_LO, _MATCH_HI
    if gap(lo) > 0:
        raise ValueError("expected_entropy below what the solver window can reach")
    if gap(hi) < 0:
        raise ValueError(f"required concentration exceeds the {_ALPHA0_CAP:g} cap")
    while hi - lo > _MATCH_TOL:
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0:
            lo = mid
        else:
            hi = mid
    a0 = float(np.exp(0.5 * (lo + hi)))
    if a0 > _ALPHA0_CAP:
        raise ValueError(f"matched concentration {a0:g} exceeds the {_ALPHA0_CAP:g} cap")
    return DirichletParams(a0 * m)


def stirling_binomial_bound(n: int, r: int) -> tuple[float, float, float]:
    """Stirling-style upper bound on ln C(n, r).

    Returns (bound, exact, gap) in nats where
    bound = r ln(n/r) + (n-r) ln(n/(n-r)) with 0-count terms dropped,
    exact = ln C(n, r), and gap = bound - exact (always in [0, ln n]).
    """
    if not (0 <= r <= n):
        raise ValueError(f"need 0 <= r <= n, got r={r}, n={n}")
    bound = 0.0
    if 0 < r:
        bound += r * np.log(n / r)
    if r < n:
        bound += (n - r) * np.log(n / (n - r))
    exact = float(special.gammaln(n + 1) - special.gammaln(r + 1) - special.gammaln(n - r + 1))
    return float(bound), exact, float(bound - exact)

"""Coverage lower bounds for group-weighted calibration, closed-form and
Monte Carlo.

Closed forms:

- ``thm1_bound``: 1 - alpha - max over observed groups of q_k / n_k, for
  fixed group sizes.
- ``thm2_closed_bound``: 1 - alpha - (4/n) max_k q_k / p_k, valid when
  min_k p_k >= 8 ln(n) / n.
- ``corollary_closed_bound``: 1 - alpha - 4 / (K n min_k p_k) for the
  uniform-over-observed-groups variant, same hypothesis.
- ``tight_example_coverage``: the exact coverage 1 - alpha - 1/(K (n_1 + 1))
  of the worst-case construction showing thm1's error term is essentially
  unimprovable.

Monte Carlo estimators average the corresponding per-draw penalty over
multinomial group-count draws and report a standard error; they are
deterministic given (seed, trials).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .conformal import GroupSimplex
from .rng import SeedLike, substream

__all__ = [
    "BoundEstimate",
    "corollary_closed_bound",
    "corollary_empirical_bound",
    "lei_bound_empirical",
    "thm1_bound",
    "thm2_closed_bound",
    "tight_example_coverage",
]


@dataclass(frozen=True)
class BoundEstimate:
    """A coverage lower bound, either closed-form or Monte Carlo estimated."""

    value: float
    form: str  # "closed" | "monte_carlo"
    trials: int = 0
    std_error: float = 0.0

    def __post_init__(self) -> None:
        if self.form not in ("closed", "monte_carlo"):
            raise ValueError(f"unknown bound form: {self.form!r}")
        if (self.trials > 0) != (self.form == "monte_carlo"):
            raise ValueError("trials must be positive exactly for Monte Carlo bounds")
        if self.std_error < 0:
            raise ValueError("standard error must be nonnegative")
        if not self.value <= 1.0:
            raise ValueError("a coverage bound cannot exceed 1")


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")


def thm1_bound(q: GroupSimplex, counts: Sequence[int], alpha: float) -> BoundEstimate:
    """Fixed-group-size coverage bound 1 - alpha - max_{k: n_k > 0} q_k / n_k."""
    _check_alpha(alpha)
    c = np.asarray(counts, dtype=int)
    if c.size != q.n_groups:
        raise ValueError("counts length must match the number of groups")
    if (c < 0).any():
        raise ValueError("counts must be nonnegative")
    observed = c > 0
    if not observed.any():
        raise ValueError("all counts zero")
    gap = float(np.max(q.probs[observed] / c[observed]))
    return BoundEstimate(1.0 - alpha - gap, "closed")


def _check_min_mass_hypothesis(p: GroupSimplex, n: int, name: str) -> None:
    if n < 1:
        raise ValueError("n must be at least 1")
    if float(p.probs.min()) < 8.0 * math.log(n) / n:
        raise ValueError(
            f"hypothesis of {name} closed form not met: "
            "require min_k p_k >= 8*ln(n)/n"
        )


def thm2_closed_bound(
    q: GroupSimplex, p: GroupSimplex, n: int, alpha: float
) -> BoundEstimate:
    """Covariate-shift coverage bound 1 - alpha - (4/n) max_k q_k / p_k,
    under the hypothesis min_k p_k >= 8 ln(n) / n."""
    _check_alpha(alpha)
    if q.n_groups != p.n_groups:
        raise ValueError("q and p must have the same number of groups")
    _check_min_mass_hypothesis(p, n, "thm2")
    gap = (4.0 / n) * float(np.max(q.probs / p.probs))
    return BoundEstimate(1.0 - alpha - gap, "closed")


def corollary_closed_bound(p: GroupSimplex, n: int, alpha: float) -> BoundEstimate:
    """Unobserved-groups coverage bound 1 - alpha - 4 / (K n min_k p_k),
    under the hypothesis min_k p_k >= 8 ln(n) / n."""
    _check_alpha(alpha)
    _check_min_mass_hypothesis(p, n, "corollary")
    # Associate as (4/n) / (K * min p) so the uniform case coincides exactly
    # with thm2_closed_bound's 4/n.
    gap = 4.0 / n / (p.n_groups * float(p.probs.min()))
    return BoundEstimate(1.0 - alpha - gap, "closed")


def corollary_empirical_bound(
    p: GroupSimplex,
    n: int,
    alpha: float,
    trials: int = 100,
    seed: SeedLike = 0,
) -> BoundEstimate:
    """Expectation form of the unobserved-groups bound, estimated by Monte
    Carlo over multinomial group-count draws.

    Per draw the penalty is 1 / (K min over observed n_k) plus
    (1 - alpha) * (#unobserved) / K.
    """
    _check_alpha(alpha)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if n < 1:
        raise ValueError("n must be at least 1")
    n_groups = p.n_groups
    penalties = np.empty(trials)
    for t in range(trials):
        rng = substream(seed, t)
        counts = rng.multinomial(n, p.probs)
        observed = counts > 0
        penalties[t] = 1.0 / (n_groups * counts[observed].min()) + (1.0 - alpha) * (
            np.count_nonzero(~observed) / n_groups
        )
    value = (1.0 - alpha) - float(penalties.mean())
    se = float(penalties.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return BoundEstimate(value, "monte_carlo", trials, se)


def lei_bound_empirical(
    p: GroupSimplex,
    q: GroupSimplex,
    n: int,
    alpha: float,
    trials: int = 100,
    seed: SeedLike = 0,
) -> BoundEstimate:
    """Prior weighted-conformal bound 1 - alpha - E[|w_hat - w| / 2] for
    weights estimated from an independent sample of size n.

    Each trial draws group counts ~ Multinomial(n; p), estimates the
    proportions with the add-one adjustment p_hat_k = (count_k + 1)/(n + K),
    and evaluates the expectation over the feature distribution exactly as
    the finite sum sum_k p_k |w_hat_k - w_k| / 2, after normalizing both
    weight functions to unit mean under p.
    """
    _check_alpha(alpha)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if n < 1:
        raise ValueError("n must be at least 1")
    if q.n_groups != p.n_groups:
        raise ValueError("q and p must have the same number of groups")
    if (p.probs <= 0).any():
        raise ValueError("p must be strictly positive")
    n_groups = p.n_groups
    w = q.probs / p.probs
    w = w / np.sum(p.probs * w)
    penalties = np.empty(trials)
    for t in range(trials):
        rng = substream(seed, t)
        counts = rng.multinomial(n, p.probs)
        p_hat = (counts + 1) / (n + n_groups)
        w_hat = q.probs / p_hat
        w_hat = w_hat / np.sum(p.probs * w_hat)
        penalties[t] = float(np.sum(p.probs * np.abs(w_hat - w)) / 2.0)
    value = (1.0 - alpha) - float(penalties.mean())
    se = float(penalties.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return BoundEstimate(value, "monte_carlo", trials, se)


def tight_example_coverage(n_groups: int, n1: int, alpha: float) -> float:
    """Exact coverage 1 - alpha - 1/(K (n_1 + 1)) of the worst-case
    construction with uniform target weights, smallest group size n_1, and
    (1 - alpha) K an integer."""
    _check_alpha(alpha)
    if n_groups < 1:
        raise ValueError("need at least one group")
    if n1 < 1:
        raise ValueError("n1 must be at least 1")
    m = (1.0 - alpha) * n_groups
    if abs(m - round(m)) > 1e-9:
        raise ValueError("(1 - alpha) * K must be an integer")
    return 1.0 - alpha - 1.0 / (n_groups * (n1 + 1))

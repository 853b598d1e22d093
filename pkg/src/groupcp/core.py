"""Weighted empirical distributions over extended-real scores, and their quantiles.

Every calibration method in this package reduces to one primitive: the exact
weighted quantile of a finite atom set.  Scores are ordinary floats; the point
at infinity is represented by IEEE ``+inf``, which already compares strictly
greater than every finite value.

Quantile convention
-------------------
``weighted_quantile(d, tau)`` returns the smallest score ``s`` such that the
normalized cumulative weight of atoms with score <= s is >= ``tau``.  With all
weights equal this is the usual left-continuous empirical quantile
``inf{s : F(s) >= tau}``.  Levels above 1 return ``+inf`` instead of raising,
so slightly-too-aggressive finite-sample corrections degrade to an infinite
threshold rather than an error.

The cumulative mass at an atom is ``(running weight sum) / (total weight)``
over atoms in score order, and the comparison against ``tau`` is an exact
``>=`` with no epsilon; the cumulative mass of the full atom set is 1 by
identity, so a level of exactly 1 selects the maximal atom.  Several
worst-case calibration constructions place cumulative mass exactly on the
target level in real arithmetic, and the coverage they are built to exhibit
requires the boundary atom to be selected there.  To make those ties deterministic rather
than an artifact of summation order, the running sums and the normalizing
division are carried out in extended precision and the resulting ratio is
rounded once to double before the comparison: a cumulative ratio within a
third of an ulp of the level's decimal value then compares equal to it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "WeightedScoreDistribution",
    "mixture",
    "normalize",
    "weighted_quantile",
    "weighted_quantile_many",
]


@dataclass(frozen=True)
class WeightedScoreDistribution:
    """A finite set of (score, nonnegative weight) atoms.

    Invariants: scores are finite or ``+inf`` (never NaN or ``-inf``), weights
    are finite and nonnegative, and the total weight is positive.  Quantiles
    are invariant under permuting atoms, merging atoms with equal scores by
    summing their weights, and rescaling all weights by a positive constant.

    Atoms are deliberately not sorted at construction time; distributions are
    typically built incrementally by mixtures and sorted once per quantile
    evaluation.
    """

    scores: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        scores = np.array(self.scores, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if scores.ndim != 1 or weights.ndim != 1:
            raise ValueError("scores and weights must be one-dimensional")
        if scores.shape != weights.shape:
            raise ValueError("scores and weights must have the same length")
        if scores.size == 0:
            raise ValueError("empty distribution: no atoms")
        if np.isnan(scores).any() or np.isneginf(scores).any():
            raise ValueError("scores must be finite or +inf")
        if not np.isfinite(weights).all() or (weights < 0).any():
            raise ValueError("weights must be finite and nonnegative")
        if not weights.sum() > 0:
            raise ValueError("empty distribution: total weight must be positive")
        scores.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[float, float]]) -> "WeightedScoreDistribution":
        pairs = list(atoms)
        return cls(
            np.array([s for s, _ in pairs], dtype=float),
            np.array([w for _, w in pairs], dtype=float),
        )

    @classmethod
    def uniform(cls, scores: Sequence[float]) -> "WeightedScoreDistribution":
        """Equal weight on every listed score."""
        arr = np.asarray(scores, dtype=float)
        return cls(arr, np.ones(arr.size))

    @property
    def n_atoms(self) -> int:
        return int(self.scores.size)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.scores.tolist(), self.weights.tolist()))


def normalize(dist: WeightedScoreDistribution) -> WeightedScoreDistribution:
    """Rescale weights to sum to one; scores and relative weights unchanged."""
    return WeightedScoreDistribution(dist.scores, dist.weights / dist.weights.sum())


def mixture(
    components: Sequence[WeightedScoreDistribution],
    weights: Sequence[float],
) -> WeightedScoreDistribution:
    """Mixture distribution: union of component atoms, each component treated
    as a probability distribution and scaled by its mixture weight."""
    comps = list(components)
    w = np.asarray(weights, dtype=float)
    if len(comps) != w.size:
        raise ValueError("length mismatch between components and mixture weights")
    if w.size == 0:
        raise ValueError("mixture needs at least one component")
    if not np.isfinite(w).all() or (w < 0).any():
        raise ValueError("mixture weights must be finite and nonnegative")
    if not w.sum() > 0:
        raise ValueError("mixture weights must not all be zero")
    scores = np.concatenate([c.scores for c in comps])
    scaled = np.concatenate(
        [c.weights / c.weights.sum() * wk for c, wk in zip(comps, w)]
    )
    return WeightedScoreDistribution(scores, scaled)


def _check_levels(levels: np.ndarray) -> None:
    if np.isnan(levels).any() or (levels <= 0).any():
        raise ValueError("quantile levels must be positive")


def weighted_quantile(dist: WeightedScoreDistribution, level: float) -> float:
    """Smallest score whose normalized cumulative weight reaches ``level``.

    Returns ``+inf`` when no atom reaches the level, which includes every
    ``level > 1`` and any level exceeding the total mass on finite atoms.
    """
    return float(weighted_quantile_many(dist, np.array([level]))[0])


def weighted_quantile_many(
    dist: WeightedScoreDistribution, levels: Sequence[float]
) -> np.ndarray:
    """Vectorized :func:`weighted_quantile`; the sort is shared across levels."""
    lv = np.asarray(levels, dtype=float)
    _check_levels(lv)
    order = np.argsort(dist.scores, kind="stable")
    sorted_scores = dist.scores[order]
    csum = np.cumsum(dist.weights[order], dtype=np.longdouble)
    cumnorm = (csum / csum[-1]).astype(np.float64)
    # The full atom set carries mass exactly 1 by definition; pin the final
    # entry so a level of exactly 1 always reaches the maximal atom.
    cumnorm[-1] = max(cumnorm[-1], 1.0)
    idx = np.searchsorted(cumnorm, lv, side="left")
    out = np.where(
        idx < cumnorm.size, sorted_scores[np.minimum(idx, cumnorm.size - 1)], np.inf
    )
    return np.where(lv > 1.0, np.inf, out)

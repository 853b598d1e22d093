"""Calibration procedures for grouped scores under group-wise covariate shift.

All methods construct a score threshold (global, or one per group) from
calibration scores partitioned into K groups, as a weighted quantile over
atoms built from those scores.  Coverage of a test point is the inclusive
comparison ``score <= threshold``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import WeightedScoreDistribution, weighted_quantile, weighted_quantile_many

__all__ = [
    "GroupSimplex",
    "GroupedScores",
    "ThresholdRule",
    "WeightSource",
    "corrected_gwcp_thresholds",
    "covers",
    "estimated_weight_threshold",
    "gwcp_threshold",
    "gwcp_unobserved_threshold",
    "prediction_interval",
    "split_cp_threshold",
    "wcp_threshold",
]

SIMPLEX_ATOL = 1e-9


class WeightSource(enum.Enum):
    """Where the per-group training proportions behind the weights come from."""

    ORACLE = "oracle"
    PRETRAINING = "pretraining"
    CALIBRATION = "calibration"


@dataclass(frozen=True)
class GroupSimplex:
    """Probability vector over K group labels (entries >= 0, summing to 1)."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("simplex must be a nonempty vector")
        if not np.isfinite(probs).all() or (probs < 0).any():
            raise ValueError("simplex entries must be finite and nonnegative")
        if abs(probs.sum() - 1.0) > SIMPLEX_ATOL:
            raise ValueError("simplex entries must sum to 1 within 1e-9")
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, n_groups: int) -> "GroupSimplex":
        if n_groups < 1:
            raise ValueError("need at least one group")
        return cls(np.full(n_groups, 1.0 / n_groups))

    @property
    def n_groups(self) -> int:
        return int(self.probs.size)


@dataclass(frozen=True)
class GroupedScores:
    """Calibration scores partitioned by group label k in {1..K}.

    Empty groups are allowed (count 0); the total number of scores must be at
    least one.  ``groups[k - 1]`` holds the scores of group ``k``.
    """

    groups: tuple

    def __post_init__(self) -> None:
        cleaned = []
        for g in self.groups:
            arr = np.array(g, dtype=float)
            if arr.ndim != 1:
                raise ValueError("each group must be a one-dimensional score sequence")
            if not np.isfinite(arr).all():
                raise ValueError("calibration scores must be finite")
            arr.flags.writeable = False
            cleaned.append(arr)
        if not cleaned:
            raise ValueError("need at least one group")
        if sum(a.size for a in cleaned) < 1:
            raise ValueError("need at least one calibration score in total")
        object.__setattr__(self, "groups", tuple(cleaned))

    @classmethod
    def from_dict(
        cls,
        scores_by_group: Mapping[int, Sequence[float]],
        n_groups: Optional[int] = None,
    ) -> "GroupedScores":
        """Build from a {label: scores} mapping; labels are 1-based.

        Labels absent from the mapping become empty groups.  ``n_groups``
        defaults to the largest label present.
        """
        if not scores_by_group and n_groups is None:
            raise ValueError("need at least one group")
        labels = list(scores_by_group)
        if any(not isinstance(k, (int, np.integer)) or k < 1 for k in labels):
            raise ValueError("group labels must be integers >= 1")
        k_max = max(labels, default=0)
        n = int(n_groups) if n_groups is not None else int(k_max)
        if k_max > n:
            raise ValueError(f"group label {k_max} exceeds the number of groups {n}")
        return cls(
            tuple(
                np.asarray(scores_by_group.get(k, ()), dtype=float)
                for k in range(1, n + 1)
            )
        )

    @classmethod
    def from_labels(
        cls,
        labels: Sequence[int],
        scores: Sequence[float],
        n_groups: Optional[int] = None,
    ) -> "GroupedScores":
        lab = np.asarray(labels, dtype=int)
        sc = np.asarray(scores, dtype=float)
        if lab.size != sc.size:
            raise ValueError("labels and scores must have the same length")
        if lab.size and lab.min() < 1:
            raise ValueError("group labels must be integers >= 1")
        n = int(n_groups) if n_groups is not None else int(lab.max(initial=0))
        if lab.size and lab.max() > n:
            raise ValueError(f"group label {lab.max()} exceeds the number of groups {n}")
        return cls(tuple(sc[lab == k] for k in range(1, n + 1)))

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def counts(self) -> np.ndarray:
        return np.array([g.size for g in self.groups], dtype=int)

    @property
    def n(self) -> int:
        return int(sum(g.size for g in self.groups))

    def scores_for(self, group: int) -> np.ndarray:
        if not 1 <= group <= self.n_groups:
            raise ValueError("group out of range")
        return self.groups[group - 1]


@dataclass(frozen=True)
class ThresholdRule:
    """A global score threshold, or one threshold per group.

    For a per-group rule, the applicable threshold for a test point in group
    ``k`` is ``group_thresholds[k - 1]``.
    """

    kind: str
    global_threshold: Optional[float] = None
    group_thresholds: Optional[tuple] = None

    def __post_init__(self) -> None:
        if self.kind == "global":
            if self.global_threshold is None or self.group_thresholds is not None:
                raise ValueError("a global rule carries exactly one threshold")
        elif self.kind == "per_group":
            if self.group_thresholds is None or self.global_threshold is not None:
                raise ValueError("a per-group rule carries one threshold per group")
            if len(self.group_thresholds) == 0:
                raise ValueError("per-group rule needs at least one group")
        else:
            raise ValueError(f"unknown threshold rule kind: {self.kind!r}")

    @classmethod
    def global_rule(cls, threshold: float) -> "ThresholdRule":
        return cls("global", global_threshold=float(threshold))

    @classmethod
    def per_group_rule(cls, thresholds: Sequence[float]) -> "ThresholdRule":
        return cls("per_group", group_thresholds=tuple(float(t) for t in thresholds))

    def threshold_for(self, group: int) -> float:
        if group < 1:
            raise ValueError("group out of range")
        if self.kind == "global":
            return self.global_threshold
        if group > len(self.group_thresholds):
            raise ValueError("group out of range")
        return self.group_thresholds[group - 1]


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")


def _check_groups_match(grouped: GroupedScores, q: GroupSimplex) -> None:
    if grouped.n_groups != q.n_groups:
        raise ValueError(
            "number of groups mismatch: scores have "
            f"{grouped.n_groups}, simplex has {q.n_groups}"
        )


def split_cp_threshold(scores: Sequence[float], alpha: float) -> float:
    """Split-conformal threshold: the empirical quantile of the scores at
    level (1 - alpha)(1 + 1/n).

    Equals the ceil((1 - alpha)(n + 1))-th order statistic, or ``+inf`` when
    that index exceeds n (the finite-sample correction pushes the level
    past 1).
    """
    s = np.asarray(scores, dtype=float)
    if s.size == 0:
        raise ValueError("scores must be nonempty")
    _check_alpha(alpha)
    level = (1.0 - alpha) * (1.0 + 1.0 / s.size)
    return weighted_quantile(WeightedScoreDistribution.uniform(s), level)


def wcp_threshold(
    scores: Sequence[float],
    weights: Sequence[float],
    test_weight: float,
    alpha: float,
) -> float:
    """Weighted-conformal threshold: quantile at level 1 - alpha of the
    calibration atoms (s_i, w_i) plus an atom at ``+inf`` carrying the test
    point's weight.

    ``test_weight = 0`` gives the variant without the infinite atom; a
    positive test weight can only raise the threshold.
    """
    s = np.asarray(scores, dtype=float)
    w = np.asarray(weights, dtype=float)
    if s.size != w.size:
        raise ValueError("length mismatch between scores and weights")
    if not test_weight >= 0:
        raise ValueError("test weight must be nonnegative")
    _check_alpha(alpha)
    dist = WeightedScoreDistribution(np.append(s, np.inf), np.append(w, test_weight))
    return weighted_quantile(dist, 1.0 - alpha)


def _group_mixture(grouped: GroupedScores, q: GroupSimplex) -> WeightedScoreDistribution:
    """The q-weighted mixture of per-group empirical score distributions.

    A group with n_k > 0 contributes its scores with weight q_k / n_k each;
    an empty group contributes a single atom at +inf with weight q_k.
    """
    parts_s = []
    parts_w = []
    for k in range(grouped.n_groups):
        sk = grouped.groups[k]
        qk = q.probs[k]
        if sk.size:
            parts_s.append(sk)
            parts_w.append(np.full(sk.size, qk / sk.size))
        else:
            parts_s.append(np.array([np.inf]))
            parts_w.append(np.array([qk]))
    return WeightedScoreDistribution(np.concatenate(parts_s), np.concatenate(parts_w))


def gwcp_threshold(grouped: GroupedScores, q: GroupSimplex, alpha: float) -> ThresholdRule:
    """Group-weighted conformal threshold: quantile at level 1 - alpha of the
    mixture placing mass q_k on group k's empirical score distribution.

    An unobserved group's mass sits on an atom at +inf, so whenever the
    unobserved groups carry total mass above alpha the threshold is +inf
    deterministically.
    """
    _check_groups_match(grouped, q)
    _check_alpha(alpha)
    value = weighted_quantile(_group_mixture(grouped, q), 1.0 - alpha)
    return ThresholdRule.global_rule(value)


def gwcp_unobserved_threshold(grouped: GroupedScores, alpha: float) -> ThresholdRule:
    """GWCP variant for an unknown number of groups: uniform mixture over the
    observed groups only (each gets mass 1 / #observed)."""
    _check_alpha(alpha)
    observed = [g for g in grouped.groups if g.size]
    if not observed:
        raise ValueError("all groups empty")
    k_hat = len(observed)
    parts_s = []
    parts_w = []
    for sk in observed:
        parts_s.append(sk)
        parts_w.append(np.full(sk.size, (1.0 / k_hat) / sk.size))
    dist = WeightedScoreDistribution(np.concatenate(parts_s), np.concatenate(parts_w))
    return ThresholdRule.global_rule(weighted_quantile(dist, 1.0 - alpha))


def corrected_gwcp_thresholds(
    grouped: GroupedScores, q: GroupSimplex, alpha: float
) -> ThresholdRule:
    """Per-group conservative thresholds restoring coverage >= 1 - alpha.

    Group k's threshold is the mixture quantile at level 1 - alpha_k with
    alpha_k = alpha - q_k / n_k for observed groups (alpha_k = alpha when
    n_k = 0); a negative alpha_k yields a level above 1 and hence a +inf
    threshold.
    """
    _check_groups_match(grouped, q)
    _check_alpha(alpha)
    dist = _group_mixture(grouped, q)
    counts = grouped.counts
    alphas = np.full(grouped.n_groups, float(alpha))
    observed = counts > 0
    alphas[observed] = alpha - q.probs[observed] / counts[observed]
    values = weighted_quantile_many(dist, 1.0 - alphas)
    return ThresholdRule.per_group_rule(values)


def estimated_weight_threshold(
    grouped: GroupedScores,
    q: GroupSimplex,
    source: WeightSource,
    alpha: float,
    *,
    p_true: Optional[GroupSimplex] = None,
    pretrain_counts: Optional[Sequence[int]] = None,
    include_test_atom: bool = False,
    test_group: Optional[int] = None,
) -> ThresholdRule:
    """Weighted-conformal threshold with group weights w_k = q_k / p_k, where
    the training proportion estimate p_k comes from the chosen source:

    - ``PRETRAINING``: p_k = pretraining count / pretraining total (every
      count must be positive);
    - ``CALIBRATION``: p_k = n_k / n (every group carrying q-mass must be
      observed; with no test atom this reproduces :func:`gwcp_threshold`
      exactly);
    - ``ORACLE``: p_k = the true training proportion ``p_true``.

    With ``include_test_atom`` the test point's weight is placed on an atom
    at +inf, which is the more conservative construction.
    """
    _check_groups_match(grouped, q)
    _check_alpha(alpha)
    n_groups = grouped.n_groups
    qp = q.probs

    if source is WeightSource.PRETRAINING:
        if pretrain_counts is None:
            raise ValueError("pretraining source requires pretrain_counts")
        c = np.asarray(pretrain_counts, dtype=float)
        if c.size != n_groups:
            raise ValueError("pretrain_counts length must match the number of groups")
        if (c <= 0).any():
            raise ValueError(
                "undefined weight: every pretraining group count must be positive"
            )
        p_hat = c / c.sum()
    elif source is WeightSource.CALIBRATION:
        counts = grouped.counts
        bad = (counts == 0) & (qp > 0)
        if bad.any():
            missing = ", ".join(str(k + 1) for k in np.flatnonzero(bad))
            raise ValueError(
                "undefined weight: calibration-estimated weights need every group "
                f"with target mass to be observed (empty: {missing})"
            )
        p_hat = counts / grouped.n
    elif source is WeightSource.ORACLE:
        if p_true is None:
            raise ValueError("oracle source requires p_true")
        if p_true.n_groups != n_groups:
            raise ValueError("p_true length must match the number of groups")
        bad = (p_true.probs == 0) & (qp > 0)
        if bad.any():
            raise ValueError(
                "undefined weight: oracle weights need positive training mass on "
                "every group with target mass"
            )
        p_hat = p_true.probs
    else:
        raise ValueError(f"unknown weight source: {source!r}")

    w_hat = np.zeros(n_groups)
    pos = qp > 0
    w_hat[pos] = qp[pos] / p_hat[pos]

    scores = np.concatenate(grouped.groups)
    atom_weights = np.concatenate(
        [np.full(grouped.groups[k].size, w_hat[k]) for k in range(n_groups)]
    )
    if include_test_atom:
        if test_group is None:
            raise ValueError("include_test_atom requires test_group")
        if not 1 <= test_group <= n_groups:
            raise ValueError("group out of range")
        test_weight = float(w_hat[test_group - 1])
    else:
        test_weight = 0.0
    value = wcp_threshold(scores, atom_weights, test_weight, alpha)
    return ThresholdRule.global_rule(value)


def covers(rule: ThresholdRule, test_group: int, test_score: float) -> bool:
    """True iff the test score is at most the applicable threshold
    (boundary inclusive)."""
    return float(test_score) <= rule.threshold_for(int(test_group))


def prediction_interval(
    rule: ThresholdRule, test_group: int, center: float
) -> tuple[float, float]:
    """Interval [center - t, center + t] for the applicable threshold t;
    the whole real line when t is +inf."""
    t = rule.threshold_for(int(test_group))
    return (center - t, center + t)

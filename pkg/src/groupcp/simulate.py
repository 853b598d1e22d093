"""Synthetic data generators and the simulation studies behind each figure.

Each experiment driver returns an :class:`ExperimentTable` of rows keyed by
(regime, grid parameter, method).  Trials derive their random streams from
(seed, trial index), so a rerun with the same seed reproduces every number
bit-for-bit and results do not depend on trial execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .bounds import corollary_empirical_bound, lei_bound_empirical
from .conformal import (
    GroupSimplex,
    GroupedScores,
    ThresholdRule,
    WeightSource,
    corrected_gwcp_thresholds,
    covers,
    estimated_weight_threshold,
    gwcp_threshold,
    gwcp_unobserved_threshold,
)
from .rng import SeedLike, substream

__all__ = [
    "AbsNormal",
    "CoverageSummary",
    "ExperimentRow",
    "ExperimentTable",
    "FixedCounts",
    "GroupModel",
    "Method",
    "MultinomialCounts",
    "Normal",
    "PointMass",
    "Uniform",
    "draw_calibration",
    "draw_test",
    "estimated_weight_method",
    "figure1_experiment",
    "figure2_experiment",
    "figure3_experiment",
    "figure4_experiment",
    "figure5_experiment",
    "run_coverage",
]


# --------------------------------------------------------------------------
# Per-group score laws

@dataclass(frozen=True)
class Uniform:
    """Uniform on the half-open interval [low, high)."""

    low: float
    high: float

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size)


@dataclass(frozen=True)
class Normal:
    """Gaussian with unit variance."""

    mean: float

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.normal(self.mean, 1.0, size)


@dataclass(frozen=True)
class AbsNormal:
    """Absolute value of a unit-variance Gaussian (residual-magnitude score)."""

    mean: float

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.abs(rng.normal(self.mean, 1.0, size))


@dataclass(frozen=True)
class PointMass:
    value: float

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, float(self.value))


@dataclass(frozen=True)
class GroupModel:
    """One score-sampling law per group."""

    laws: tuple

    def __post_init__(self) -> None:
        if not self.laws:
            raise ValueError("need at least one group law")
        object.__setattr__(self, "laws", tuple(self.laws))

    @property
    def n_groups(self) -> int:
        return len(self.laws)

    @classmethod
    def uniform_blocks(cls, n_groups: int) -> "GroupModel":
        """Group k scores uniform on [(k-1)/K, k/K): disjoint blocks that
        tile [0, 1), so the target-level quantile sits at a block boundary."""
        return cls(
            tuple(Uniform(k / n_groups, (k + 1) / n_groups) for k in range(n_groups))
        )

    @classmethod
    def worst_case_blocks(cls, n_groups: int, alpha: float) -> "GroupModel":
        """The tight-example construction: group 1 on [0, 1), groups
        2..(1-alpha)K on [-1, 0), the remaining alpha*K groups on [1, 2).
        Requires (1 - alpha) * K to be an integer."""
        m = (1.0 - alpha) * n_groups
        if abs(m - round(m)) > 1e-9:
            raise ValueError("(1 - alpha) * K must be an integer")
        m = int(round(m))
        laws = [Uniform(0.0, 1.0)]
        laws += [Uniform(-1.0, 0.0)] * (m - 1)
        laws += [Uniform(1.0, 2.0)] * (n_groups - m)
        return cls(tuple(laws))

    @classmethod
    def folded_gaussian(cls, means: Sequence[float]) -> "GroupModel":
        return cls(tuple(AbsNormal(float(m)) for m in means))


# --------------------------------------------------------------------------
# Sampling schemes for the calibration set

@dataclass(frozen=True)
class FixedCounts:
    """Exactly counts[k] calibration scores from group k+1."""

    counts: tuple

    def __post_init__(self) -> None:
        counts = tuple(int(c) for c in self.counts)
        if not counts:
            raise ValueError("need at least one group")
        if any(c < 0 for c in counts):
            raise ValueError("counts must be nonnegative")
        if sum(counts) < 1:
            raise ValueError("total count must be positive")
        object.__setattr__(self, "counts", counts)

    @property
    def n_groups(self) -> int:
        return len(self.counts)


@dataclass(frozen=True)
class MultinomialCounts:
    """Group counts drawn as Multinomial(n; p), i.e. i.i.d. sampling from the
    training mixture."""

    p: GroupSimplex
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be at least 1")

    @property
    def n_groups(self) -> int:
        return self.p.n_groups


SamplingScheme = Union[FixedCounts, MultinomialCounts]


def draw_calibration(
    model: GroupModel, scheme: SamplingScheme, rng: np.random.Generator
) -> GroupedScores:
    """Draw one calibration set: group counts per the scheme, then scores
    i.i.d. from each group's law."""
    if scheme.n_groups != model.n_groups:
        raise ValueError("scheme and model must agree on the number of groups")
    if isinstance(scheme, FixedCounts):
        counts: Sequence[int] = scheme.counts
    else:
        counts = rng.multinomial(scheme.n, scheme.p.probs)
    return GroupedScores(
        tuple(law.sample(rng, int(c)) for law, c in zip(model.laws, counts))
    )


def draw_test(
    model: GroupModel, q: GroupSimplex, rng: np.random.Generator
) -> tuple[int, float]:
    """Draw one test point: group ~ Categorical(q), then a score from that
    group's law.  Returns (1-based group label, score)."""
    if q.n_groups != model.n_groups:
        raise ValueError("q and model must agree on the number of groups")
    cum = np.cumsum(q.probs)
    k0 = int(np.searchsorted(cum, rng.random(), side="right"))
    k0 = min(k0, model.n_groups - 1)
    score = float(model.laws[k0].sample(rng, 1)[0])
    return k0 + 1, score


# --------------------------------------------------------------------------
# Coverage trials

@dataclass(frozen=True)
class Method:
    """A calibration method to run inside a coverage experiment."""

    name: str
    source: Optional[WeightSource] = None
    pretrain_size: Optional[int] = None

    _NAMES = ("gwcp", "gwcp_unobserved", "corrected_gwcp", "wcp_plus", "estimated_weight")

    def __post_init__(self) -> None:
        if self.name not in self._NAMES:
            raise ValueError(f"unknown method: {self.name!r}")
        if self.name == "estimated_weight":
            if self.source is None:
                raise ValueError("estimated_weight needs a weight source")
            if self.source is WeightSource.PRETRAINING and not self.pretrain_size:
                raise ValueError("pretraining source needs a pretraining sample size")


GWCP = Method("gwcp")
GWCP_UNOBSERVED = Method("gwcp_unobserved")
CORRECTED_GWCP = Method("corrected_gwcp")
WCP_PLUS = Method("wcp_plus")


def estimated_weight_method(
    source: WeightSource, pretrain_size: Optional[int] = None
) -> Method:
    return Method("estimated_weight", source, pretrain_size)


@dataclass(frozen=True)
class CoverageSummary:
    """Monte Carlo coverage estimate with a 95% normal-approximation CI."""

    mean_coverage: float
    trials: int  # trials actually used (after any discards)
    ci_half_width: float
    seed: SeedLike
    attempted_trials: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.mean_coverage <= 1.0:
            raise ValueError("coverage must lie in [0, 1]")
        if self.trials < 1 or self.attempted_trials < self.trials:
            raise ValueError("inconsistent trial counts")


def _threshold_rule(
    method: Method,
    grouped: GroupedScores,
    q: GroupSimplex,
    alpha: float,
    scheme: SamplingScheme,
    pretrain_counts: Optional[np.ndarray],
    test_group: int,
) -> ThresholdRule:
    if method.name == "gwcp":
        return gwcp_threshold(grouped, q, alpha)
    if method.name == "gwcp_unobserved":
        return gwcp_unobserved_threshold(grouped, alpha)
    if method.name == "corrected_gwcp":
        return corrected_gwcp_thresholds(grouped, q, alpha)
    if method.name == "wcp_plus":
        return estimated_weight_threshold(
            grouped,
            q,
            WeightSource.CALIBRATION,
            alpha,
            include_test_atom=True,
            test_group=test_group,
        )
    # estimated_weight
    if method.source is WeightSource.CALIBRATION:
        # Identical to calibration-estimated weights wherever those are
        # defined, and handles a trial whose draw leaves a target-mass group
        # empty (mass goes to an atom at +inf instead of erroring).
        return gwcp_threshold(grouped, q, alpha)
    p_true = None
    if method.source is WeightSource.ORACLE:
        if not isinstance(scheme, MultinomialCounts):
            raise ValueError("oracle weights need a multinomial sampling scheme")
        p_true = scheme.p
    return estimated_weight_threshold(
        grouped,
        q,
        method.source,
        alpha,
        p_true=p_true,
        pretrain_counts=pretrain_counts,
        include_test_atom=False,
    )


def run_coverage(
    model: GroupModel,
    scheme: SamplingScheme,
    q: GroupSimplex,
    alpha: float,
    method: Method,
    trials: int,
    seed: SeedLike,
) -> CoverageSummary:
    """Estimate marginal coverage of a method over independent trials.

    Each trial draws a fresh calibration set and one test point, builds the
    method's threshold rule, and records whether the test score is covered.
    For pretraining-estimated weights, a trial whose pretraining sample
    leaves some group empty is discarded (not redrawn), shrinking the
    effective trial count.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if q.n_groups != model.n_groups:
        raise ValueError("q and model must agree on the number of groups")
    needs_pretrain = (
        method.name == "estimated_weight" and method.source is WeightSource.PRETRAINING
    )
    if needs_pretrain and not isinstance(scheme, MultinomialCounts):
        raise ValueError("pretraining weights need a multinomial sampling scheme")

    covered = 0
    effective = 0
    for t in range(trials):
        rng = substream(seed, t)
        grouped = draw_calibration(model, scheme, rng)
        pretrain_counts = None
        if needs_pretrain:
            pretrain_counts = rng.multinomial(method.pretrain_size, scheme.p.probs)
            if (pretrain_counts == 0).any():
                continue
        group, score = draw_test(model, q, rng)
        rule = _threshold_rule(method, grouped, q, alpha, scheme, pretrain_counts, group)
        effective += 1
        covered += covers(rule, group, score)
    if effective == 0:
        raise RuntimeError("every trial was discarded; nothing to average")
    mean = covered / effective
    ci = 1.96 * math.sqrt(mean * (1.0 - mean) / effective)
    return CoverageSummary(mean, effective, ci, seed, trials)


# --------------------------------------------------------------------------
# Experiment tables

@dataclass(frozen=True)
class ExperimentRow:
    experiment: str
    regime: str
    param: int
    method: str
    value: float
    ci_half_width: float
    trials: int
    seed: int
    attempted_trials: Optional[int] = None  # set when discards occurred


@dataclass(frozen=True)
class ExperimentTable:
    rows: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple(self.rows))


_N_GRID = tuple(range(100, 1001, 10))
_K_GRID = tuple(range(5, 51, 5))
_FIG13_REGIMES = (
    ("K=10", lambda n: 10),
    ("K=sqrt(n)", lambda n: int(math.isqrt(n))),
    ("K=n/10", lambda n: n // 10),
)
_FIG24_REGIMES = ("AllSmall", "OneSmall", "NoneSmall")
_FIG5_SETTINGS = (
    ("Setting1", (0.2, 0.2, 0.2, 0.2, 0.2), (20.0, 15.0, 10.0, 5.0, 0.0)),
    ("Setting2", (0.4, 0.25, 0.2, 0.1, 0.05), (20.0, 15.0, 10.0, 5.0, 0.0)),
    ("Setting3", (0.4, 0.25, 0.2, 0.1, 0.05), (0.0, 5.0, 10.0, 15.0, 20.0)),
)
_FIG5_SOURCES = (WeightSource.PRETRAINING, WeightSource.CALIBRATION, WeightSource.ORACLE)


def figure1_experiment(seed: int = 0, trials: int = 100) -> ExperimentTable:
    """Prior weight-estimation bound across sample sizes, in three
    group-count regimes (constant, square-root, proportional); alpha = 0.1,
    uniform training and target group distributions."""
    rows = []
    for r_idx, (regime, k_of_n) in enumerate(_FIG13_REGIMES):
        for n in _N_GRID:
            u = GroupSimplex.uniform(k_of_n(n))
            est = lei_bound_empirical(
                u, u, n, 0.1, trials=trials, seed=(seed, r_idx, n)
            )
            rows.append(
                ExperimentRow(
                    "fig1", regime, n, "lei_bound",
                    est.value, 1.96 * est.std_error, est.trials, seed,
                )
            )
    return ExperimentTable(tuple(rows))


def figure3_experiment(seed: int = 0, trials: int = 100) -> ExperimentTable:
    """Prior bound versus the unobserved-groups bound on the same grid as
    figure 1.  At each grid point both bounds share one seed stream, so they
    see identical multinomial count draws."""
    rows = []
    for r_idx, (regime, k_of_n) in enumerate(_FIG13_REGIMES):
        for n in _N_GRID:
            u = GroupSimplex.uniform(k_of_n(n))
            key = (seed, r_idx, n)
            lei = lei_bound_empirical(u, u, n, 0.1, trials=trials, seed=key)
            cor = corollary_empirical_bound(u, n, 0.1, trials=trials, seed=key)
            rows.append(
                ExperimentRow(
                    "fig3", regime, n, "lei_bound",
                    lei.value, 1.96 * lei.std_error, lei.trials, seed,
                )
            )
            rows.append(
                ExperimentRow(
                    "fig3", regime, n, "corollary_bound",
                    cor.value, 1.96 * cor.std_error, cor.trials, seed,
                )
            )
    return ExperimentTable(tuple(rows))


def _fixed_regime_counts(regime: str, n_groups: int) -> tuple:
    if n_groups % 5 != 0:
        raise ValueError("the group-count grid needs K divisible by 5")
    if regime == "AllSmall":
        return (1,) * n_groups
    if regime == "NoneSmall":
        return (100,) * n_groups
    if regime == "OneSmall":
        counts = [100] * n_groups
        # The small group is the one whose score block's upper edge is the
        # target quantile (group 0.8K, 1-based); only then does its single
        # score sit at the mixture's target level and drive the coverage
        # loss, mirroring the AllSmall behavior.
        counts[(4 * n_groups) // 5 - 1] = 1
        return tuple(counts)
    raise ValueError(f"unknown regime: {regime!r}")


def _fixed_counts_experiment(
    experiment: str, method: Method, method_label: str, seed: int, trials: int
) -> ExperimentTable:
    alpha = 0.2
    rows = []
    for r_idx, regime in enumerate(_FIG24_REGIMES):
        for n_groups in _K_GRID:
            model = GroupModel.uniform_blocks(n_groups)
            scheme = FixedCounts(_fixed_regime_counts(regime, n_groups))
            summary = run_coverage(
                model,
                scheme,
                GroupSimplex.uniform(n_groups),
                alpha,
                method,
                trials,
                (seed, r_idx, n_groups),
            )
            rows.append(
                ExperimentRow(
                    experiment, regime, n_groups, method_label,
                    summary.mean_coverage, summary.ci_half_width,
                    summary.trials, seed,
                )
            )
    return ExperimentTable(tuple(rows))


def figure2_experiment(seed: int = 0, trials: int = 2000) -> ExperimentTable:
    """Coverage of group-weighted calibration with fixed group sizes, K from
    5 to 50, alpha = 0.2, in the AllSmall / OneSmall / NoneSmall regimes."""
    return _fixed_counts_experiment("fig2", GWCP, "gwcp", seed, trials)


def figure4_experiment(seed: int = 0, trials: int = 2000) -> ExperimentTable:
    """Same grid as figure 2 with the per-group corrected thresholds."""
    return _fixed_counts_experiment("fig4", CORRECTED_GWCP, "corrected_gwcp", seed, trials)


def figure5_experiment(seed: int = 0, trials: int = 2000) -> ExperimentTable:
    """Weight-source comparison: pretraining versus calibration versus oracle
    proportions, in three (p, score-location) settings; K = 5, n = 100,
    pretraining size 100, alpha = 0.2."""
    alpha = 0.2
    q = GroupSimplex.uniform(5)
    rows = []
    for s_idx, (regime, p, means) in enumerate(_FIG5_SETTINGS):
        model = GroupModel.folded_gaussian(means)
        scheme = MultinomialCounts(GroupSimplex(np.asarray(p)), 100)
        for src_idx, source in enumerate(_FIG5_SOURCES):
            pretrain = 100 if source is WeightSource.PRETRAINING else None
            summary = run_coverage(
                model,
                scheme,
                q,
                alpha,
                estimated_weight_method(source, pretrain),
                trials,
                (seed, s_idx, src_idx),
            )
            rows.append(
                ExperimentRow(
                    "fig5", regime, s_idx + 1, source.value,
                    summary.mean_coverage, summary.ci_half_width,
                    summary.trials, seed,
                    attempted_trials=(
                        summary.attempted_trials
                        if summary.attempted_trials != summary.trials
                        else None
                    ),
                )
            )
    return ExperimentTable(tuple(rows))

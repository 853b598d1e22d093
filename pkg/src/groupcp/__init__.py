"""groupcp: group-weighted conformal prediction.

Exact weighted-quantile calibration for grouped scores under group-wise
covariate shift, closed-form and Monte Carlo coverage lower bounds, and a
seeded simulation harness with a CLI.
"""

from .bounds import (
    BoundEstimate,
    corollary_closed_bound,
    corollary_empirical_bound,
    lei_bound_empirical,
    thm1_bound,
    thm2_closed_bound,
    tight_example_coverage,
)
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
    prediction_interval,
    split_cp_threshold,
    wcp_threshold,
)
from .core import (
    WeightedScoreDistribution,
    mixture,
    normalize,
    weighted_quantile,
    weighted_quantile_many,
)
from .rng import substream
from .simulate import (
    AbsNormal,
    CoverageSummary,
    ExperimentRow,
    ExperimentTable,
    FixedCounts,
    GroupModel,
    Method,
    MultinomialCounts,
    Normal,
    PointMass,
    Uniform,
    draw_calibration,
    draw_test,
    estimated_weight_method,
    figure1_experiment,
    figure2_experiment,
    figure3_experiment,
    figure4_experiment,
    figure5_experiment,
    run_coverage,
)

__version__ = "0.1.0"

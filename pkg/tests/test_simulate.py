"""Data generators, coverage trials, and experiment drivers (light grids)."""

import numpy as np
import pytest

from groupcp.bounds import thm1_bound
from groupcp.conformal import GroupSimplex, WeightSource
from groupcp.rng import substream
from groupcp.simulate import (
    CORRECTED_GWCP,
    GWCP,
    WCP_PLUS,
    FixedCounts,
    GroupModel,
    MultinomialCounts,
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


class TestDrawCalibration:
    def test_fixed_counts_point_masses(self):
        model = GroupModel((PointMass(3.0), PointMass(7.0)))
        grouped = draw_calibration(model, FixedCounts((1, 1)), substream(0, 0))
        assert grouped.groups[0].tolist() == [3.0]
        assert grouped.groups[1].tolist() == [7.0]

    def test_degenerate_multinomial(self):
        model = GroupModel((Uniform(0, 1), Uniform(1, 2)))
        scheme = MultinomialCounts(GroupSimplex([1.0, 0.0]), 5)
        grouped = draw_calibration(model, scheme, substream(1, 0))
        assert grouped.counts.tolist() == [5, 0]

    def test_multinomial_counts_sum_to_n(self):
        model = GroupModel(tuple(Uniform(0, 1) for _ in range(6)))
        scheme = MultinomialCounts(GroupSimplex.uniform(6), 37)
        for t in range(50):
            grouped = draw_calibration(model, scheme, substream(2, t))
            assert grouped.n == 37

    def test_group_count_mismatch(self):
        model = GroupModel((Uniform(0, 1),))
        with pytest.raises(ValueError):
            draw_calibration(model, FixedCounts((1, 1)), substream(0, 0))


class TestDrawTest:
    def test_degenerate_simplex(self):
        model = GroupModel((PointMass(0.0), PointMass(1.0), PointMass(2.0)))
        q = GroupSimplex([0.0, 1.0, 0.0])
        rng = substream(3, 0)
        for _ in range(50):
            group, score = draw_test(model, q, rng)
            assert group == 2 and score == 1.0

    def test_group_frequencies(self):
        q = GroupSimplex([0.5, 0.3, 0.2])
        model = GroupModel(tuple(PointMass(k) for k in range(3)))
        rng = substream(4, 0)
        draws = 100_000
        counts = np.zeros(3)
        for _ in range(draws):
            group, _ = draw_test(model, q, rng)
            counts[group - 1] += 1
        for k in range(3):
            sigma = np.sqrt(q.probs[k] * (1 - q.probs[k]) / draws)
            assert abs(counts[k] / draws - q.probs[k]) < 3 * sigma


class TestRunCoverage:
    def test_forced_blowup_gives_full_coverage(self):
        # group 2 carries mass 0.5 > alpha but never appears in calibration
        model = GroupModel((Uniform(0, 1), Uniform(5, 6)))
        scheme = FixedCounts((3, 0))
        q = GroupSimplex([0.5, 0.5])
        summary = run_coverage(model, scheme, q, 0.2, GWCP, trials=100, seed=0)
        assert summary.mean_coverage == 1.0
        assert summary.trials == 100

    def test_tight_construction_quick(self):
        model = GroupModel.worst_case_blocks(10, 0.1)
        scheme = FixedCounts((1,) + (100,) * 9)
        summary = run_coverage(
            model, scheme, GroupSimplex.uniform(10), 0.1, GWCP, trials=2000, seed=17
        )
        assert abs(summary.mean_coverage - 0.85) < 3 * summary.ci_half_width

    def test_all_small_k5_matches_theory_band(self):
        model = GroupModel.uniform_blocks(5)
        summary = run_coverage(
            model, FixedCounts((1,) * 5), GroupSimplex.uniform(5), 0.2,
            GWCP, trials=1000, seed=5,
        )
        bound = thm1_bound(GroupSimplex.uniform(5), [1] * 5, 0.2).value
        assert summary.mean_coverage >= bound - 3 * summary.ci_half_width
        assert summary.mean_coverage < 0.8  # visible undercoverage

    def test_corrected_never_undercovers(self):
        model = GroupModel.uniform_blocks(5)
        summary = run_coverage(
            model, FixedCounts((1,) * 5), GroupSimplex.uniform(5), 0.2,
            CORRECTED_GWCP, trials=1000, seed=6,
        )
        assert summary.mean_coverage >= 0.8 - 3 * summary.ci_half_width

    def test_wcp_plus_at_least_gwcp(self):
        model = GroupModel.uniform_blocks(5)
        scheme = FixedCounts((4,) * 5)
        q = GroupSimplex.uniform(5)
        g = run_coverage(model, scheme, q, 0.2, GWCP, trials=500, seed=7)
        plus = run_coverage(model, scheme, q, 0.2, WCP_PLUS, trials=500, seed=7)
        assert plus.mean_coverage >= g.mean_coverage

    def test_pretraining_discards_reduce_effective_trials(self):
        model = GroupModel.folded_gaussian([0.0, 1.0])
        p = GroupSimplex([0.95, 0.05])
        scheme = MultinomialCounts(p, 30)
        method = estimated_weight_method(WeightSource.PRETRAINING, pretrain_size=10)
        summary = run_coverage(
            model, scheme, GroupSimplex.uniform(2), 0.2, method, trials=300, seed=8
        )
        # P(no group-2 draw in 10 samples) = 0.95^10, about 60% of trials
        assert summary.trials < summary.attempted_trials == 300
        assert summary.trials > 50

    def test_pretraining_without_multinomial_scheme_rejected(self):
        model = GroupModel.folded_gaussian([0.0, 1.0])
        method = estimated_weight_method(WeightSource.PRETRAINING, pretrain_size=10)
        with pytest.raises(ValueError, match="multinomial"):
            run_coverage(
                model, FixedCounts((5, 5)), GroupSimplex.uniform(2), 0.2,
                method, trials=10, seed=0,
            )

    def test_ci_formula(self):
        model = GroupModel.uniform_blocks(5)
        summary = run_coverage(
            model, FixedCounts((2,) * 5), GroupSimplex.uniform(5), 0.2,
            GWCP, trials=400, seed=9,
        )
        m = summary.mean_coverage
        assert summary.ci_half_width == pytest.approx(
            1.96 * np.sqrt(m * (1 - m) / summary.trials), abs=1e-15
        )

    def test_determinism(self):
        model = GroupModel.uniform_blocks(10)
        scheme = FixedCounts((3,) * 10)
        q = GroupSimplex.uniform(10)
        a = run_coverage(model, scheme, q, 0.2, GWCP, trials=200, seed=13)
        b = run_coverage(model, scheme, q, 0.2, GWCP, trials=200, seed=13)
        c = run_coverage(model, scheme, q, 0.2, GWCP, trials=200, seed=14)
        assert a == b
        assert a.mean_coverage != c.mean_coverage


class TestExperimentDrivers:
    def test_figure1_shape_and_trend(self):
        table = figure1_experiment(seed=0, trials=20)
        regimes = {r.regime for r in table.rows}
        assert regimes == {"K=10", "K=sqrt(n)", "K=n/10"}
        assert len(table.rows) == 3 * 91
        assert all(r.value <= 0.9 for r in table.rows)
        const = [r for r in table.rows if r.regime == "K=10"]
        assert const[-1].value > const[0].value  # improves with n
        params = [r.param for r in const]
        assert params == sorted(params)

    def test_figure3_pairs_rows_per_point(self):
        table = figure3_experiment(seed=0, trials=10)
        assert len(table.rows) == 2 * 3 * 91
        by_method = {}
        for r in table.rows:
            by_method.setdefault(r.method, 0)
            by_method[r.method] += 1
        assert by_method == {"lei_bound": 273, "corollary_bound": 273}

    def test_figure2_smoke(self):
        table = figure2_experiment(seed=0, trials=5)
        assert len(table.rows) == 3 * 10
        assert {r.regime for r in table.rows} == {"AllSmall", "OneSmall", "NoneSmall"}
        assert all(r.method == "gwcp" for r in table.rows)
        assert all(0.0 <= r.value <= 1.0 for r in table.rows)

    def test_figure4_smoke(self):
        table = figure4_experiment(seed=0, trials=5)
        assert all(r.method == "corrected_gwcp" for r in table.rows)

    def test_figure5_smoke(self):
        table = figure5_experiment(seed=0, trials=20)
        assert len(table.rows) == 9
        assert {r.regime for r in table.rows} == {"Setting1", "Setting2", "Setting3"}
        assert {r.method for r in table.rows} == {"pretraining", "calibration", "oracle"}

    def test_driver_determinism(self):
        assert figure2_experiment(seed=3, trials=4) == figure2_experiment(seed=3, trials=4)
        assert figure5_experiment(seed=3, trials=4) == figure5_experiment(seed=3, trials=4)

    def test_figure3_new_bound_dominates_in_all_regimes(self):
        table = figure3_experiment(seed=1, trials=100)
        by = {(r.regime, r.param, r.method): r.value for r in table.rows}
        for regime in ("K=10", "K=sqrt(n)", "K=n/10"):
            for n in range(100, 1001, 10):
                assert by[(regime, n, "corollary_bound")] >= by[(regime, n, "lei_bound")]


class TestCovariateShiftCoverage:
    def test_multinomial_gwcp_meets_closed_bound(self):
        # K = 10, n = 1000, p = q uniform: the closed-form bound applies
        # (min p = 0.1 >= 8 ln(1000)/1000) and coverage must clear it.
        from groupcp.bounds import thm2_closed_bound

        u = GroupSimplex.uniform(10)
        bound = thm2_closed_bound(u, u, 1000, 0.1).value
        model = GroupModel.uniform_blocks(10)
        summary = run_coverage(
            model, MultinomialCounts(u, 1000), u, 0.1, GWCP, trials=1000, seed=21
        )
        assert summary.mean_coverage >= bound - 3 * summary.ci_half_width

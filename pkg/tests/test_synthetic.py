"""Tests for synthetic instances and the synthetic suite."""

import numpy as np
import pytest

from cfexplain.models.mdp import validate_mdp
from cfexplain.operations.synthetic import (
    SyntheticSpec,
    random_instance,
    run_synthetic_suite,
    synth_instance,
)


class TestSynthInstance:
    def test_rows_are_distributions(self, synthetic_mdp):
        assert synthetic_mdp.transition.shape == (6, 3, 6)
        assert np.allclose(synthetic_mdp.transition.sum(axis=2), 1.0)
        assert validate_mdp(synthetic_mdp) == []
        assert synthetic_mdp.horizon == 8

    def test_preferred_successor_dominates(self):
        mdp = synth_instance(10, 4, 0.8, seed=3)
        top = mdp.transition.max(axis=2, keepdims=True)
        # alpha < 1 keeps every other weight strictly below the preferred one
        assert np.all((mdp.transition == top).sum(axis=2) == 1)

    def test_rewards_are_state_index(self, synthetic_mdp):
        assert np.array_equal(synthetic_mdp.reward[:, 0], np.arange(6))
        assert np.array_equal(synthetic_mdp.reward[:, 2], np.arange(6))

    def test_ratio_mean_at_full_uncertainty(self):
        mdp = synth_instance(30, 30, 1.0, seed=1)
        top = mdp.transition.max(axis=2, keepdims=True)
        ratios = mdp.transition / top
        others = ratios[ratios < 1.0]
        se = np.sqrt(1 / 12 / others.size)
        assert abs(others.mean() - 0.5) < 4 * se

    def test_seeded(self):
        first = synth_instance(5, 2, 0.2, seed=(4, 1))
        second = synth_instance(5, 2, 0.2, seed=(4, 1))
        assert np.array_equal(first.transition, second.transition)

    @pytest.mark.parametrize("alpha", [0.0, -0.1, 1.5])
    def test_bad_alpha(self, alpha):
        with pytest.raises(ValueError):
            synth_instance(4, 2, alpha, seed=0)


class TestRandomInstance:
    def test_structural_zeros_keep_rows_valid(self):
        mdp = random_instance(6, 3, 4, seed=2, zero_prob=0.7)
        assert np.allclose(mdp.transition.sum(axis=2), 1.0)
        assert (mdp.transition > 0).any(axis=2).all()
        assert (mdp.transition == 0).any()

    def test_integer_rewards(self):
        mdp = random_instance(4, 2, 3, seed=0, max_reward=5)
        assert np.all(mdp.reward == np.round(mdp.reward))
        assert mdp.reward.min() >= 0 and mdp.reward.max() <= 5


def _small_spec(**overrides):
    values = dict(n=5, m=3, horizon=6, alpha=0.4, n_instances=2,
                  realizations_per_instance=3, deviation_prob=0.2, seed=1)
    values.update(overrides)
    return SyntheticSpec(**values)


class TestSuite:
    def test_records_per_realization_and_k(self):
        report = run_synthetic_suite(_small_spec(), [1, 2], d=200, n_samples=20)
        assert len(report.records) == 2 * 3 * 2
        names = {r.realization for r in report.records}
        assert "i0-r0" in names and "i1-r2" in names
        assert all(r.alpha == 0.4 and r.horizon == 6 for r in report.records)

    def test_improvement_non_negative_and_monotone(self):
        report = run_synthetic_suite(_small_spec(), [0, 1, 3, 6], d=200, n_samples=20)
        frame = report.to_frame()
        assert (frame["improvement"] >= -1e-9).all()
        for _, group in frame.groupby("realization"):
            values = group.sort_values("k")["cf_outcome"].to_numpy()
            assert np.all(np.diff(values) >= -1e-9)
        zero = frame[frame["k"] == 0]
        assert np.allclose(zero["cf_outcome"], zero["observed_outcome"])
        assert (zero["unique_explanations"] == 1).all()

    def test_budgets_capped_at_horizon(self):
        report = run_synthetic_suite(_small_spec(horizon=3), [2, 5, 8], d=100, n_samples=10)
        assert sorted({r.k for r in report.records}) == [2, 3]

    def test_reproducible(self):
        first = run_synthetic_suite(_small_spec(), [2], d=100, n_samples=10).to_frame()
        second = run_synthetic_suite(_small_spec(), [2], d=100, n_samples=10).to_frame()
        assert first.equals(second)

    def test_worker_count_does_not_change_results(self):
        serial = run_synthetic_suite(_small_spec(), [1, 2], d=100, n_samples=10, workers=1)
        parallel = run_synthetic_suite(_small_spec(), [1, 2], d=100, n_samples=10, workers=2)
        assert serial.to_frame().equals(parallel.to_frame())

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            run_synthetic_suite(_small_spec(n_instances=0), [1])

    def test_aggregates(self):
        report = run_synthetic_suite(_small_spec(), [1, 2], d=100, n_samples=10)
        aggregates = report.aggregates()
        assert list(aggregates["k"]) == [1, 2]
        assert (aggregates["realizations"] == 6).all()


@pytest.mark.slow
class TestFullScaleTrends:
    @pytest.fixture(scope="class")
    def aggregates(self):
        frames = {}
        for alpha in (0.2, 0.8):
            spec = SyntheticSpec(n=20, m=10, horizon=20, alpha=alpha, n_instances=10,
                                 realizations_per_instance=50, seed=0)
            report = run_synthetic_suite(spec, [2, 4, 6, 8, 10], d=1000, workers=0)
            frames[alpha] = report.aggregates().set_index("k")
        return frames

    def test_improvement_strictly_grows_with_budget(self, aggregates):
        for alpha, frame in aggregates.items():
            values = list(frame["mean_relative_improvement"])
            assert all(a < b for a, b in zip(values, values[1:])), (alpha, values)

    def test_improvement_grows_with_uncertainty(self, aggregates, record_property):
        low, high = aggregates[0.2], aggregates[0.8]
        for k in low.index:
            if high.loc[k, "relative_improvement_low"] > low.loc[k, "relative_improvement_high"]:
                continue
            # unresolved at this scale: the intervals must overlap, never invert
            assert high.loc[k, "relative_improvement_high"] >= low.loc[k, "relative_improvement_low"], k
            record_property(f"alpha_intervals_overlap_k{k}", (
                f"alpha=0.2 {low.loc[k, 'mean_relative_improvement']:.4f} "
                f"alpha=0.8 {high.loc[k, 'mean_relative_improvement']:.4f}"
            ))

    def test_unique_explanations_grow_with_budget(self, aggregates):
        for alpha, frame in aggregates.items():
            values = list(frame["mean_unique_explanations"])
            assert all(a < b for a, b in zip(values, values[1:])), (alpha, values)

import logging
import pytest
import numpy as np
from permcodes.codebook import (EnsembleParams, CardinalityDistribution, InvalidParameterError, AnalysisError,
                                cycle_free_rate, bethe_rate_estimate, combinatorial_rate, density_evolution,
                                de_threshold)
from permcodes.codebook.analysis import DensityEvolutionRun, constraint_population, variable_population
from permcodes.codebook.constants import SUDOKU_9_COUNT, SEMI_PANDIAGONAL_9_REDUCED


class TestRates():
    @pytest.mark.parametrize("q, expected", [(3, 0.3155), (4, 0.4308), (2, 0.0)])
    def test_cycle_free_rate(self, q, expected):
        assert cycle_free_rate(q) == pytest.approx(expected, abs=1e-4)

    @pytest.mark.parametrize("q, expected", [
        (3, 0.6845), (4, 0.5692), (5, 0.5063), (6, 0.4656), (7, 0.4365), (8, 0.4143),
    ])
    def test_cycle_free_redundancy(self, q, expected):
        assert 1 - cycle_free_rate(q) == pytest.approx(expected, abs=1e-4)

    def test_cycle_free_rate_grows_to_one(self):
        rates = [cycle_free_rate(q) for q in range(3, 40)]
        assert rates == sorted(rates)
        assert rates[-1] < 1.0

    @pytest.mark.parametrize("q", [3, 9, 11])
    def test_bethe_zero(self, q):
        assert bethe_rate_estimate(q, 3).bits_per_symbol == 0.0

    def test_bethe_q12(self):
        estimate = bethe_rate_estimate(12, 3)
        assert estimate.bits_per_symbol == pytest.approx(0.0390, abs=2e-4)
        assert estimate.fraction == pytest.approx(estimate.bits_per_symbol / np.log2(12))

    def test_bethe_stirling(self):
        exact = bethe_rate_estimate(40, 3)
        approximate = bethe_rate_estimate(40, 3, stirling=True)
        assert approximate.bits_per_symbol == pytest.approx(exact.bits_per_symbol, rel=1e-2)

    @pytest.mark.parametrize("count, n, q, expected", [
        (SUDOKU_9_COUNT, 81, 9, 0.2824),
        (SEMI_PANDIAGONAL_9_REDUCED * 362880, 81, 9, 0.1455),
        (12, 9, 3, 0.2513),
    ])
    def test_combinatorial_rate(self, count, n, q, expected):
        assert combinatorial_rate(count, n, q) == pytest.approx(expected, abs=1e-4)

    def test_combinatorial_rate_rejects_zero(self):
        with pytest.raises(InvalidParameterError):
            combinatorial_rate(0, 9, 3)


class TestEnsembleParams():
    def test_defaults(self):
        params = EnsembleParams(4)
        assert (params.d_v, params.population_size, params.replicates) == (3, 100_000, 1)

    @pytest.mark.parametrize("kwargs", [
        {"q": 1},
        {"q": 3, "d_v": 1},
        {"q": 3, "population_size": 0},
        {"q": 3, "resolution": 0.0},
        {"q": 3, "replicates": 0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidParameterError):
            EnsembleParams(**kwargs)


class TestPopulations():
    def test_cardinality_distribution(self):
        distribution = CardinalityDistribution.from_population([1, 1, 3, 2], 3)
        assert distribution.probabilities == pytest.approx([0.5, 0.25, 0.25])
        assert distribution.singleton == 0.5

    def test_known_inputs_give_singletons(self):
        rng = np.random.default_rng(0)
        outgoing = constraint_population(np.ones(500, dtype=np.int64), 4, rng)
        assert set(outgoing) == {1}

    def test_erased_inputs_give_full_sets(self):
        rng = np.random.default_rng(0)
        outgoing = constraint_population(np.full(500, 4, dtype=np.int64), 4, rng)
        assert set(outgoing) == {4}

    def test_outgoing_contains_truth(self):
        rng = np.random.default_rng(1)
        outgoing = constraint_population(rng.integers(1, 6, 2000), 5, rng)
        assert outgoing.min() >= 1
        assert outgoing.max() <= 5

    def test_variable_population_without_erasures(self):
        rng = np.random.default_rng(2)
        assert set(variable_population(np.full(100, 3, dtype=np.int64), 3, 3, 0.0, rng)) == {1}

    def test_variable_population_intersects(self):
        rng = np.random.default_rng(3)
        cards = variable_population(np.full(1000, 3, dtype=np.int64), 3, 3, 1.0, rng)
        assert set(cards) == {3}


class TestDensityEvolution():
    def test_converges_below_threshold(self):
        params = EnsembleParams(3, population_size=5000, max_de_iters=200)
        run = density_evolution(params, 0.7, np.random.default_rng(0))
        assert run.converged
        assert run.iterations == len(run.non_singleton_history)
        assert run.final.singleton > 0.99

    def test_converges_above_tabulated_threshold(self):
        # the recursion used here puts the q=3 threshold near 0.986
        params = EnsembleParams(3, population_size=10_000, max_de_iters=500)
        assert density_evolution(params, 0.9, np.random.default_rng(2)).converged

    def test_fails_when_everything_is_erased(self):
        params = EnsembleParams(3, population_size=2000, max_de_iters=80)
        run = density_evolution(params, 1.0, np.random.default_rng(0))
        assert not run.converged
        assert run.non_singleton_history[-1] == 1.0

    def test_history_decreases(self):
        params = EnsembleParams(4, population_size=5000, max_de_iters=100)
        run = density_evolution(params, 0.5, np.random.default_rng(1))
        history = run.non_singleton_history
        assert all(later <= earlier + 0.02 for earlier, later in zip(history, history[1:]))


class TestThreshold():
    @staticmethod
    def fake_run(cutoff):
        def run(params, eps, rng):
            converged = eps < cutoff
            return DensityEvolutionRun(converged, 1, [0.0 if converged else 1.0],
                                       CardinalityDistribution(np.eye(params.q)[0]))
        return run

    def test_bisection(self, mocker):
        mocker.patch("permcodes.codebook.analysis.density_evolution", side_effect=self.fake_run(0.7))
        result = de_threshold(EnsembleParams(3, resolution=1e-3), seed=0)
        assert result.theta == pytest.approx(0.7, abs=1e-3)
        assert result.ci_low < 0.7 <= result.ci_high
        assert result.ci_high - result.ci_low <= 1e-3

    def test_replicates(self, mocker):
        mocker.patch("permcodes.codebook.analysis.density_evolution", side_effect=self.fake_run(0.6))
        result = de_threshold(EnsembleParams(4, resolution=1e-2, replicates=4), seed=1)
        assert len(result.replicate_thresholds) == 4
        assert result.ci_low <= result.theta <= result.ci_high

    def test_no_bracket(self, mocker):
        mocker.patch("permcodes.codebook.analysis.density_evolution", side_effect=self.fake_run(2.0))
        with pytest.raises(AnalysisError):
            de_threshold(EnsembleParams(3), seed=0)

    def test_rejects_large_q(self):
        with pytest.raises(InvalidParameterError):
            de_threshold(EnsembleParams(9), seed=0)

    def test_warns_on_small_population(self, mocker, caplog):
        mocker.patch("permcodes.codebook.analysis.density_evolution", side_effect=self.fake_run(0.5))
        with caplog.at_level(logging.WARNING, logger="Codebook.Analysis"):
            de_threshold(EnsembleParams(3, population_size=100, resolution=0.1), seed=0)
        assert "noisy threshold" in caplog.text

    def test_small_population_run(self):
        params = EnsembleParams(3, population_size=2000, max_de_iters=100, resolution=0.05)
        result = de_threshold(params, seed=3)
        assert result.theta > 1 - cycle_free_rate(3)

    @pytest.mark.long_run
    def test_thresholds_decrease_with_q(self):
        thresholds = [de_threshold(EnsembleParams(q, resolution=5e-3), seed=q).theta for q in (3, 4, 5)]
        assert thresholds == sorted(thresholds, reverse=True)
        for q, theta in zip((3, 4, 5), thresholds):
            assert theta > 1 - cycle_free_rate(q)

    @pytest.mark.long_run
    def test_q3_threshold_regression(self):
        result = de_threshold(EnsembleParams(3), seed=0)
        assert result.theta == pytest.approx(0.986, abs=0.005)
        assert result.ci_low <= result.theta <= result.ci_high

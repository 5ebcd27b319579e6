"""Tests for seeded path simulation, counting processes and the Monte Carlo estimators."""

import numpy as np
import pytest

from config import settings
from conftest import COMMON_SHOCK
from kolmogorov import evolve, transition_matrix
from montecarlo import (
    SimulationPath,
    compare_empirical,
    counting_stats,
    empirical_transition,
    martingale_residual_test,
    path_rng,
    simulate,
    simulate_batch,
)
from montecarlo.rng import chunks
from state_model import ConstantGenerator, Distribution, FamilyGenerator, GeneratorError

SEED = 12345


class TestRandomStreams:
    def test_streams_are_keyed_by_seed_and_path(self):
        assert path_rng(1, 0).random() == path_rng(1, 0).random()
        assert path_rng(1, 0).random() != path_rng(1, 1).random()
        assert path_rng(1, 0).random() != path_rng(2, 0).random()

    def test_negative_seed_rejected(self):
        with pytest.raises(ValueError):
            path_rng(-1, 0)

    def test_chunks_cover_all_paths(self):
        parts = chunks(2500)
        assert [len(p) for p in parts] == [1000, 1000, 500]
        assert parts[-1][-1] == 2499


class TestSimulation:
    def test_same_seed_same_path(self, recovering_shock, origin):
        first = simulate(recovering_shock, origin, 5.0, SEED, path_index=3)
        second = simulate(recovering_shock, origin, 5.0, SEED, path_index=3)
        assert first == second

    def test_batch_matches_single_paths(self, common_shock, origin):
        batch = simulate_batch(common_shock, origin, 2.0, 5, SEED)
        singles = [simulate(common_shock, origin, 2.0, SEED, k) for k in range(5)]
        assert [p.states for p in batch] == [p.states for p in singles]

    def test_batch_is_independent_of_threads(self, monkeypatch, recovering_shock, origin):
        monkeypatch.setattr(settings, "threads", 1)
        serial = simulate_batch(recovering_shock, origin, 3.0, 2500, SEED)
        monkeypatch.setattr(settings, "threads", 4)
        parallel = simulate_batch(recovering_shock, origin, 3.0, 2500, SEED)
        assert serial == parallel

    def test_absorbing_state_stops_the_path(self, common_shock, binary_pair):
        path = simulate(common_shock, Distribution.point_mass(binary_pair, (1, 1)), 10.0, SEED)
        assert path.n_jumps == 0
        assert path.state_at(10.0) == 3

    def test_path_is_right_continuous(self, common_shock, origin):
        path = simulate(common_shock, origin, 50.0, SEED)
        assert path.n_jumps >= 1
        first_jump = path.jump_times[0]
        assert path.state_at(0.0) == 0
        assert path.state_at(first_jump) == path.states[1]
        assert list(path.sojourns())[0] == (0.0, first_jump, 0)

    def test_invalid_generator_rejected(self, binary_pair, origin):
        rates = np.zeros((4, 4))
        rates[0, 1] = -0.5
        rates[0, 0] = 0.5
        with pytest.raises(GeneratorError):
            simulate(ConstantGenerator(space=binary_pair, rates=rates), origin, 1.0, SEED)

    def test_space_mismatch(self, common_shock):
        single = FamilyGenerator.create("common_shock_marginal_1", **COMMON_SHOCK)
        with pytest.raises(GeneratorError):
            simulate(single, Distribution.point_mass(common_shock.space, 0), 1.0, SEED)

    def test_path_validation(self, binary_pair):
        with pytest.raises(ValueError):
            SimulationPath(space=binary_pair, horizon=1.0, jump_times=(0.5,), states=(0, 0))


class TestCountingStats:
    @pytest.fixture
    def path(self, binary_pair):
        # (0,0) -> (1,0) at 0.4, then (1,0) -> (1,1) at 1.0
        return SimulationPath(space=binary_pair, horizon=2.0, jump_times=(0.4, 1.0), states=(0, 2, 3))

    def test_counts_and_compensators(self, path, common_shock):
        a, b, c = COMMON_SHOCK.values()
        stats = counting_stats(path, common_shock)
        assert stats.total_jumps == 2
        assert stats.counts[0, 2] == 1 and stats.counts[2, 3] == 1
        np.testing.assert_allclose(stats.compensators[0], [0.0, 0.4 * b, 0.4 * a, 0.4 * c], atol=1e-15)
        assert stats.compensators[2, 3] == pytest.approx(0.6 * (b + c), abs=1e-15)
        assert stats.compensators[3].sum() == 0.0

    def test_component_tables(self, path, common_shock):
        a, b, c = COMMON_SHOCK.values()
        stats = counting_stats(path, common_shock)
        assert stats.component_counts(0)[0, 1] == 1
        assert stats.component_counts(1)[0, 1] == 1
        assert stats.component_compensators(0)[0, 1] == pytest.approx(0.4 * (a + c), abs=1e-15)

    def test_window(self, path, common_shock):
        stats = counting_stats(path, common_shock, start=0.5)
        assert stats.total_jumps == 1
        assert stats.compensators[2, 3] == pytest.approx(0.5 * 0.5, abs=1e-15)
        assert stats.compensators[0].sum() == 0.0

    def test_window_outside_horizon(self, path, common_shock):
        with pytest.raises(ValueError):
            counting_stats(path, common_shock, start=0.0, end=3.0)

    def test_time_dependent_compensator_by_quadrature(self):
        g = FamilyGenerator.create("first_jump_shock_marginal_1", **COMMON_SHOCK)
        path = SimulationPath(space=g.space, horizon=1.0, jump_times=(), states=(0,))
        stats = counting_stats(path, g)
        # nu over [0, 1] is the cumulative hazard, -log of the survival probability
        survival = evolve(Distribution.point_mass(g.space, 0), g, 1.0).weights[0]
        assert stats.compensators[0, 1] == pytest.approx(-np.log(survival), abs=1e-8)


class TestMartingaleResidual:
    @pytest.mark.parametrize("fixture", ["common_shock", "recovering_shock"])
    def test_true_compensator_passes(self, request, origin, fixture):
        g = request.getfixturevalue(fixture)
        report = martingale_residual_test(g, origin, 2.0, 20_000, SEED)
        assert report.passed
        assert report.max_abs_z <= 4.0
        assert len(report.pairs) == 12

    def test_doubled_rates_are_detected(self, common_shock, origin):
        doubled = FamilyGenerator.create("common_shock", **{k: 2 * v for k, v in COMMON_SHOCK.items()})
        report = martingale_residual_test(common_shock, origin, 2.0, 5_000, SEED, compensator=doubled)
        assert not report.passed
        assert report.pair(0, 3).z < -4.0

    def test_independent_of_threads(self, monkeypatch, common_shock, origin):
        monkeypatch.setattr(settings, "threads", 1)
        serial = martingale_residual_test(common_shock, origin, 1.0, 3_000, SEED)
        monkeypatch.setattr(settings, "threads", 3)
        parallel = martingale_residual_test(common_shock, origin, 1.0, 3_000, SEED)
        assert serial.model_dump() == parallel.model_dump()

    def test_needs_enough_paths(self, common_shock, origin):
        with pytest.raises(ValueError):
            martingale_residual_test(common_shock, origin, 1.0, 999, SEED)

    def test_unknown_pair(self, common_shock, origin):
        report = martingale_residual_test(common_shock, origin, 1.0, 1_000, SEED)
        with pytest.raises(KeyError):
            report.pair(0, 0)


class TestEmpiricalTransition:
    def test_common_shock_law_at_one(self, common_shock, origin):
        empirical = empirical_transition(common_shock, origin, 1.0, 20_000, SEED)
        comparison = compare_empirical(empirical, evolve(origin, common_shock, 1.0))
        assert comparison.passed
        assert empirical.frequencies.sum() == pytest.approx(1.0)

    def test_frequencies_are_one_row_of_the_transition_matrix(self, common_shock, origin):
        empirical = empirical_transition(common_shock, origin, 1.0, 20_000, SEED)
        assert empirical.frequencies.shape == (common_shock.space.flat_size,)
        assert empirical.std_errors.shape == (4,)
        row = transition_matrix(common_shock, 0.0, 1.0).entries[0]
        assert compare_empirical(empirical, row).passed

    def test_thinning_on_time_dependent_marginal(self):

        g = FamilyGenerator.create("first_jump_shock_marginal_1", **COMMON_SHOCK)
        start = Distribution.point_mass(g.space, 0)
        empirical = empirical_transition(g, start, 1.0, 4_000, SEED)
        assert compare_empirical(empirical, evolve(start, g, 1.0)).passed

    def test_time_zero_is_exact(self, common_shock, origin):
        empirical = empirical_transition(common_shock, origin, 0.0, 10, SEED)
        np.testing.assert_array_equal(empirical.frequencies, origin.weights)

    def test_wrong_law_is_rejected(self, common_shock, origin):
        empirical = empirical_transition(common_shock, origin, 1.0, 5_000, SEED)
        assert not compare_empirical(empirical, np.full(4, 0.25)).passed

    def test_shape_mismatch(self, common_shock, origin):
        empirical = empirical_transition(common_shock, origin, 0.5, 100, SEED)
        with pytest.raises(ValueError):
            compare_empirical(empirical, np.array([0.5, 0.5]))

    def test_requires_paths(self, common_shock, origin):
        with pytest.raises(ValueError):
            empirical_transition(common_shock, origin, 1.0, 0, SEED)

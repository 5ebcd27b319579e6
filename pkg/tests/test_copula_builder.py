"""Tests for strong copula construction, verification and the weak-copula candidates."""

import numpy as np
import pytest

from conftest import COMMON_SHOCK, absorbing_matrix, binary_factor
from consistency import check_strong
from copula_builder import (
    CopulaObjective,
    CopulaProblem,
    ObjectiveKind,
    SolverStatus,
    WeakClassification,
    build_strong_copula,
    build_weak_copula_candidate,
    verify_strong_copula,
    verify_weak_copula,
)
from state_model import (
    ConstantGenerator,
    FactoredStateSpace,
    FamilyGenerator,
    GeneratorError,
    PiecewiseConstantGenerator,
    TensorSumGenerator,
    kron_sum,
)


def absorbing(name: str, rate: float) -> ConstantGenerator:
    return ConstantGenerator(space=binary_factor(name), rates=absorbing_matrix(rate))


@pytest.fixture
def marginals():
    return absorbing("X1", 0.7), absorbing("X2", 0.5)


def problem(marginals, kind: ObjectiveKind, **kwargs) -> CopulaProblem:
    return CopulaProblem(marginals=marginals, objective=CopulaObjective(kind=kind, **kwargs))


class TestStrongCopula:
    def test_maximize_common_jumps(self, marginals):
        solution = build_strong_copula(problem(marginals, ObjectiveKind.MAXIMIZE_COMMON_JUMPS))
        assert solution.status is SolverStatus.OPTIMAL
        assert solution.objective_value == pytest.approx(0.5, abs=1e-9)
        assert solution.residual <= 1e-9
        assert isinstance(solution.generator, ConstantGenerator)
        expected = np.array(
            [
                [-0.7, 0.0, 0.2, 0.5],
                [0.0, -0.7, 0.0, 0.7],
                [0.0, 0.0, -0.5, 0.5],
                [0.0, 0.0, 0.0, 0.0],
            ]
        )
        np.testing.assert_allclose(solution.generator.rates, expected, atol=1e-9)

    def test_maximize_weighted_on_the_common_jump(self, marginals):
        solution = build_strong_copula(
            problem(marginals, ObjectiveKind.MAXIMIZE_WEIGHTED, weights={(0, 3): 1.0})
        )
        assert solution.generator.rates[0, 3] == pytest.approx(0.5, abs=1e-9)

    def test_weighted_pair_must_be_simultaneous(self, marginals):
        with pytest.raises(ValueError):
            build_strong_copula(problem(marginals, ObjectiveKind.MAXIMIZE_WEIGHTED, weights={(0, 1): 1.0}))

    def test_weighted_needs_weights(self):
        with pytest.raises(ValueError):
            CopulaObjective(kind=ObjectiveKind.MAXIMIZE_WEIGHTED)

    @pytest.mark.parametrize("kind", [ObjectiveKind.MINIMIZE_COMMON_JUMPS, ObjectiveKind.INDEPENDENT])
    def test_no_common_jumps_gives_tensor_sum(self, marginals, kind):
        solution = build_strong_copula(problem(marginals, kind))
        assert solution.objective_value == pytest.approx(0.0, abs=1e-9)
        tensor = kron_sum((np.array(absorbing_matrix(0.7)), np.array(absorbing_matrix(0.5))))
        np.testing.assert_allclose(solution.generator.matrix_at(0.0), tensor, atol=1e-9)
        assert [f.name for f in solution.generator.space.factors] == ["X1", "X2"]

    def test_round_trip_through_strong_check(self, marginals, origin):
        solution = build_strong_copula(problem(marginals, ObjectiveKind.MAXIMIZE_COMMON_JUMPS))
        for i, marginal in enumerate(marginals):
            result = check_strong(solution.generator, origin, [0.0, 0.5, 1.0], i)
            assert result.strong
            assert result.marginal.max_difference(marginal) <= 1e-8

    def test_colliding_names_are_renamed(self):
        solution = build_strong_copula(
            problem((absorbing("X", 0.7), absorbing("X", 0.5)), ObjectiveKind.INDEPENDENT)
        )
        assert [f.name for f in solution.generator.space.factors] == ["X1", "X2"]

    def test_piecewise_marginals_solve_at_breakpoints(self):
        space = binary_factor("A")
        first = PiecewiseConstantGenerator(
            space=space,
            times=(0.0, 1.0),
            matrices=(np.array(absorbing_matrix(0.4)), np.array(absorbing_matrix(0.8))),
        )
        second = PiecewiseConstantGenerator(
            space=binary_factor("B"),
            times=(0.0, 2.0),
            matrices=(np.array(absorbing_matrix(0.3)), np.array(absorbing_matrix(0.1))),
        )
        solution = build_strong_copula(problem((first, second), ObjectiveKind.MAXIMIZE_COMMON_JUMPS))
        assert solution.times == (0.0, 1.0, 2.0)
        assert isinstance(solution.generator, PiecewiseConstantGenerator)
        assert solution.objective_values == pytest.approx((0.3, 0.3, 0.1), abs=1e-9)
        check = verify_strong_copula(solution.generator, (first, second), [0.0, 0.5, 1.0, 1.5, 2.0, 3.0])
        assert check.passed

    def test_time_dependent_marginals_use_probe_times(self):
        marginals = (
            FamilyGenerator.create("first_jump_shock_marginal_1", **COMMON_SHOCK),
            FamilyGenerator.create("first_jump_shock_marginal_2", **COMMON_SHOCK),
        )
        p = CopulaProblem(
            marginals=marginals,
            objective=CopulaObjective(kind=ObjectiveKind.MAXIMIZE_COMMON_JUMPS),
            probe_times=(1.0, 0.5),
        )
        solution = build_strong_copula(p)
        assert solution.times == (0.0, 0.5, 1.0)
        assert solution.residual <= 1e-9

        independent = build_strong_copula(p.model_copy(update={"objective": CopulaObjective()}))
        assert isinstance(independent.generator, TensorSumGenerator)

    def test_invalid_marginal_rejected(self, marginals):
        bad = ConstantGenerator(space=FactoredStateSpace.from_sizes([2]), rates=[[0.3, -0.3], [0.0, 0.0]])
        with pytest.raises(GeneratorError):
            build_strong_copula(problem((marginals[0], bad), ObjectiveKind.MAXIMIZE_COMMON_JUMPS))

    def test_marginals_must_be_single_factor(self, common_shock, marginals):
        with pytest.raises(ValueError):
            CopulaProblem(marginals=(common_shock, marginals[0]))


class TestVerifyStrongCopula:
    def test_common_shock_is_a_strong_copula(self, common_shock):
        check = verify_strong_copula(common_shock, common_shock.closed_form_marginals(), [0.0, 1.0])
        assert check.passed
        assert check.worst is None

    def test_wrong_marginal_is_located(self, common_shock):
        first, _ = common_shock.closed_form_marginals()
        check = verify_strong_copula(common_shock, (first, absorbing("X2", 0.1)), [0.0])
        assert not check.passed
        assert check.residual == pytest.approx(0.4, abs=1e-12)
        assert "factor 1" in check.worst

    def test_shape_mismatch(self, common_shock):
        with pytest.raises(ValueError):
            verify_strong_copula(common_shock, (absorbing("X1", 0.7),), [0.0])


class TestWeakCopula:
    def test_first_jump_shock_is_weak_only(self):
        candidate = build_weak_copula_candidate("first_jump_shock", **COMMON_SHOCK)
        result = verify_weak_copula(candidate.generator, candidate.marginals, candidate.start, [0.5, 1.0])
        assert result.passed
        assert result.classification is WeakClassification.WEAK_ONLY
        assert max(result.marginal_gaps) <= 1e-6

    def test_common_shock_is_also_strong(self, common_shock, origin):
        result = verify_weak_copula(common_shock, common_shock.closed_form_marginals(), origin, [0.5, 1.0])
        assert result.classification is WeakClassification.ALSO_STRONG

    def test_recovering_shock_is_not_weak(self, recovering_shock, origin):
        targets = (absorbing("X1", 0.6), absorbing("X2", 0.5))
        result = verify_weak_copula(recovering_shock, targets, origin, [1.0])
        assert not result.passed
        assert result.classification is WeakClassification.NOT_WEAK
        assert 1 in result.failed_factors

    def test_unknown_candidate_family(self):
        with pytest.raises(GeneratorError):
            build_weak_copula_candidate("common_shock", **COMMON_SHOCK)

    def test_candidate_needs_positive_shock(self):
        with pytest.raises(ValueError):
            build_weak_copula_candidate("first_jump_shock", a=0.5, b=0.3, c=0.0)

    def test_target_count_must_match(self, recovering_shock, origin):
        with pytest.raises(ValueError):
            verify_weak_copula(recovering_shock, (absorbing("X1", 0.6),), origin, [1.0])

    def test_start_is_the_origin(self):
        candidate = build_weak_copula_candidate("first_jump_shock", **COMMON_SHOCK)
        np.testing.assert_array_equal(candidate.start.weights, [1.0, 0.0, 0.0, 0.0])
        names = [m.name for m in candidate.marginals]
        assert names == ["first_jump_shock_marginal_1", "first_jump_shock_marginal_2"]

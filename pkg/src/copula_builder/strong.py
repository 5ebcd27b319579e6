"""Strong Markov copulae from the marginal rate-sum constraint system."""

from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import linprog

from config import settings
from state_model import (
    ConstantGenerator,
    FactoredStateSpace,
    GeneratorError,
    GeneratorFunction,
    PiecewiseConstantGenerator,
    Violation,
    extension_matrix,
    tensor_sum,
    validate_generator,
)
from utils import fan_out

from .problem import (
    CopulaObjective,
    CopulaProblem,
    CopulaSolution,
    CopulaSolverError,
    ObjectiveKind,
    SolverStatus,
)

logger = structlog.get_logger()

RESIDUAL_TOLERANCE = 1e-9
TIE_BREAK_SLACK = 1e-12
HIGHS_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


class ConstraintSystem(BaseModel):
    """A x = b(t) over the off-diagonal joint rates.

    One row per (factor i, joint state v, target y != v^i): the rates from v into
    {w : w^i = y} must add up to the marginal rate lambda^i_{v^i y}(t).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    space: FactoredStateSpace
    pairs: Tuple[Tuple[int, int], ...]
    rows: Tuple[Tuple[int, int, int], ...]
    matrix: np.ndarray
    common: np.ndarray

    @classmethod
    def build(cls, space: FactoredStateSpace) -> "ConstraintSystem":
        n = space.flat_size
        coords = space.coordinates
        pairs = tuple((v, w) for v in range(n) for w in range(n) if v != w)
        column = {pair: k for k, pair in enumerate(pairs)}
        rows = tuple(
            (i, v, y)
            for i in range(space.n_factors)
            for v in range(n)
            for y in range(space.shape[i])
            if y != coords[v, i]
        )
        matrix = np.zeros((len(rows), len(pairs)))
        for r, (i, v, y) in enumerate(rows):
            for w in np.nonzero(coords[:, i] == y)[0]:
                matrix[r, column[(v, int(w))]] = 1.0
        common = np.array([np.count_nonzero(coords[v] != coords[w]) >= 2 for v, w in pairs])
        return cls(space=space, pairs=pairs, rows=rows, matrix=matrix, common=common)

    def rhs(self, marginal_matrices: Sequence[np.ndarray]) -> np.ndarray:
        coords = self.space.coordinates
        return np.array([marginal_matrices[i][coords[v, i], y] for i, v, y in self.rows])

    def assemble(self, x: np.ndarray) -> np.ndarray:
        """Joint generator with off-diagonals x and diagonal by negative row sums."""
        n = self.space.flat_size
        rates = np.zeros((n, n))
        for (v, w), value in zip(self.pairs, x):
            rates[v, w] = value
        np.fill_diagonal(rates, -rates.sum(axis=1))
        return rates

    def flatten(self, rates: np.ndarray) -> np.ndarray:
        return np.array([rates[v, w] for v, w in self.pairs])

    def residual(self, x: np.ndarray, marginal_matrices: Sequence[np.ndarray]) -> float:
        return float(np.max(np.abs(self.matrix @ x - self.rhs(marginal_matrices)), initial=0.0))


def objective_vector(system: ConstraintSystem, objective: CopulaObjective) -> np.ndarray:
    """Cost vector for linprog (which minimizes), reported values use the natural sign."""
    if objective.kind is ObjectiveKind.MAXIMIZE_COMMON_JUMPS:
        return -system.common.astype(float)
    if objective.kind is ObjectiveKind.MINIMIZE_COMMON_JUMPS:
        return system.common.astype(float)
    column = {pair: k for k, pair in enumerate(system.pairs)}
    cost = np.zeros(len(system.pairs))
    for pair, weight in objective.weights.items():
        k = column.get(tuple(pair))
        if k is None or not system.common[k]:
            raise ValueError(f"weight {pair} does not address a simultaneous jump of the joint space")
        cost[k] = -weight
    return cost


def objective_value(cost: np.ndarray, objective: CopulaObjective, x: np.ndarray) -> float:
    value = float(cost @ x)
    return value if objective.kind is ObjectiveKind.MINIMIZE_COMMON_JUMPS else -value


def lexicographic_refine(
    system: ConstraintSystem, cost: np.ndarray, b: np.ndarray, optimum: float, x: np.ndarray
) -> np.ndarray:
    """Among optimal points, move to the lexicographically smallest rate vector."""
    bounds: List[Tuple[float, Optional[float]]] = [(0.0, None)] * len(x)
    a_ub = cost[np.newaxis, :]
    b_ub = [optimum + TIE_BREAK_SLACK * (1.0 + abs(optimum))]
    for k in range(len(x)):
        unit = np.zeros(len(x))
        unit[k] = 1.0
        result = linprog(
            unit,
            A_ub=a_ub,
            b_ub=b_ub,
            A_eq=system.matrix,
            b_eq=b,
            bounds=bounds,
            method="highs",
            options=HIGHS_OPTIONS,
        )
        if result.status != 0:
            logger.debug("tie_break_stopped", variable=k, status=result.status)
            break
        x = result.x
        bounds[k] = (0.0, float(x[k]) + TIE_BREAK_SLACK * (1.0 + abs(float(x[k]))))
    return x


def solve_at(
    system: ConstraintSystem, objective: CopulaObjective, b: np.ndarray, t: float
) -> Tuple[Optional[np.ndarray], float, SolverStatus]:
    """Solve the LP at one time; None signals that the caller must fall back."""
    cost = objective_vector(system, objective)
    result = linprog(
        cost, A_eq=system.matrix, b_eq=b, bounds=(0.0, None), method="highs", options=HIGHS_OPTIONS
    )
    if result.status == 2:
        logger.error("copula_lp_infeasible", time=t, message=result.message)
        raise CopulaSolverError(
            f"marginal constraint system reported infeasible at t={t}: {result.message}"
        )
    if result.status != 0:
        logger.warning("copula_lp_failed", time=t, status=result.status, message=result.message)
        return None, float("nan"), SolverStatus.FEASIBLE_FALLBACK

    candidates = [lexicographic_refine(system, cost, b, float(result.fun), result.x), result.x]
    for x in candidates:
        x = np.clip(x, 0.0, None)
        if float(np.max(np.abs(system.matrix @ x - b), initial=0.0)) <= RESIDUAL_TOLERANCE:
            return x, objective_value(cost, objective, x), SolverStatus.OPTIMAL
    logger.warning("copula_lp_residual_too_large", time=t)
    return None, float("nan"), SolverStatus.FEASIBLE_FALLBACK


def assemble(space: FactoredStateSpace, times: List[float], matrices: List[np.ndarray]) -> GeneratorFunction:
    if len(times) == 1:
        return ConstantGenerator(space=space, rates=matrices[0])
    return PiecewiseConstantGenerator(space=space, times=tuple(times), matrices=tuple(matrices))


def check_marginals(problem: CopulaProblem, times: Sequence[float]) -> None:
    for k, marginal in enumerate(problem.marginals):
        report = validate_generator(marginal, list(times))
        if not report.ok:
            first = report.violations[0]
            raise GeneratorError(
                f"marginal {k} is not a valid generator: {first.kind} at t={first.time}, "
                f"row {first.row_label}"
            )


def build_strong_copula(p: CopulaProblem) -> CopulaSolution:
    """Solve the marginal constraint system for a joint generator.

    The independent objective returns the tensor sum directly (objective value 0).
    Other objectives solve one LP per solve time over all off-diagonal joint rates,
    breaking ties towards the lexicographically smallest rate vector, and complete the
    diagonal by negative row sums.

    Args:
        p: Marginals, objective and probe times

    Returns:
        CopulaSolution with a constant generator for time-homogeneous marginals, a
        piecewise-constant one otherwise

    Raises:
        GeneratorError: a marginal is invalid
        CopulaSolverError: the solver proved the system infeasible
    """
    times = p.solve_times()
    check_marginals(p, times)
    space = p.joint_space
    components = [p.component(i) for i in range(len(p.marginals))]
    system = ConstraintSystem.build(space)

    def targets(t: float) -> List[np.ndarray]:
        return [c.matrix_at(t) for c in components]

    if p.objective.kind is ObjectiveKind.INDEPENDENT:
        coupled = tensor_sum(*components)
        matrices = [np.array(coupled.matrix_at(t)) for t in times]
        residual = max(system.residual(system.flatten(m), targets(t)) for t, m in zip(times, matrices))
        logger.info("strong_copula_built", objective="independent", times=len(times))
        return CopulaSolution(
            generator=coupled,
            times=tuple(times),
            objective_values=tuple(0.0 for _ in times),
            residual=residual,
            status=SolverStatus.OPTIMAL,
        )

    def solve(t: float) -> Tuple[np.ndarray, float, SolverStatus]:
        b = system.rhs(targets(t))
        x, value, status = solve_at(system, p.objective, b, t)
        if x is None:
            x = system.flatten(tensor_sum(*components).matrix_at(t))
            value = objective_value(objective_vector(system, p.objective), p.objective, x)
        return x, value, status

    outcomes = fan_out(solve, times, settings.threads)
    matrices = [system.assemble(x) for x, _, _ in outcomes]
    residual = max(system.residual(x, targets(t)) for t, (x, _, _) in zip(times, outcomes))
    status = (
        SolverStatus.OPTIMAL
        if all(s is SolverStatus.OPTIMAL for _, _, s in outcomes)
        else SolverStatus.FEASIBLE_FALLBACK
    )
    logger.info(
        "strong_copula_built", objective=p.objective.kind.value, times=len(times), status=status.value
    )
    return CopulaSolution(
        generator=assemble(space, times, matrices),
        times=tuple(times),
        objective_values=tuple(v for _, v, _ in outcomes),
        residual=residual,
        status=status,
    )


class StrongCopulaVerification(BaseModel):
    """Residuals of the marginal constraint system for a candidate joint generator."""

    passed: bool
    residual: float
    probe_times: Tuple[float, ...]
    residuals: Tuple[float, ...]
    violations: List[Violation] = Field(default_factory=list)
    worst: Optional[str] = None


def verify_strong_copula(
    candidate: GeneratorFunction, marginals: Sequence[GeneratorFunction], probe_times: Sequence[float]
) -> StrongCopulaVerification:
    """Check a joint generator against given marginals; passes at residual <= 1e-9 with no violations."""
    space = candidate.space
    shape = tuple(m.space.flat_size for m in marginals)
    if space.shape != shape:
        raise ValueError(f"candidate lives on shape {space.shape}, marginals need {shape}")
    times = tuple(float(t) for t in probe_times)
    validation = validate_generator(candidate, list(times))

    residuals = []
    worst: Optional[str] = None
    worst_value = 0.0
    for t in times:
        joint = candidate.matrix_at(t)
        gap_at_t = 0.0
        for i, marginal in enumerate(marginals):
            sums = joint @ extension_matrix(space, i).matrix
            target = marginal.matrix_at(t)[space.coordinates[:, i]]
            off = np.ones_like(sums, dtype=bool)
            off[np.arange(space.flat_size), space.coordinates[:, i]] = False
            gaps = np.where(off, np.abs(sums - target), 0.0)
            v, y = np.unravel_index(int(np.argmax(gaps)), gaps.shape)
            if gaps[v, y] > worst_value:
                worst_value = float(gaps[v, y])
                worst = f"t={t:g}, factor {i}, from {space.label(int(v))} to {space.factors[i].states[y]}"
            gap_at_t = max(gap_at_t, float(gaps.max()))
        residuals.append(gap_at_t)

    residual = max(residuals)
    passed = validation.ok and residual <= RESIDUAL_TOLERANCE
    return StrongCopulaVerification(
        passed=passed,
        residual=residual,
        probe_times=times,
        residuals=tuple(residuals),
        violations=validation.violations,
        worst=worst if residual > RESIDUAL_TOLERANCE else None,
    )

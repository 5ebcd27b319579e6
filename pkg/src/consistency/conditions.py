"""Rate-sum invariance (condition M) and its operator form (condition N)."""

from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog

from state_model import GeneratorError, GeneratorFunction, extension_matrix

from .reports import Certificate, ConditionMResult, ConditionNResult, relative_gap, sorted_certificates

logger = structlog.get_logger()

CONDITION_M_TOLERANCE = 1e-10


def target_rate_sums(matrix: np.ndarray, extension: np.ndarray) -> np.ndarray:
    """Entry (v, y) = sum of rates from v to states whose factor-i coordinate is y.

    For y != v^i this is the rate at which factor i jumps from v^i to y while the whole
    chain sits in v.
    """
    return matrix @ extension


def check_times(probe_times: Sequence[float]) -> Tuple[float, ...]:
    times = tuple(float(t) for t in probe_times)
    if not times or any(t < 0 for t in times):
        raise ValueError(f"probe_times must be a nonempty list of nonnegative times, got {list(times)}")
    return times


def check_condition_M(g: GeneratorFunction, probe_times: Sequence[float]) -> ConditionMResult:
    """Test that each factor's jump-rate sums do not depend on the other coordinates.

    For every factor i, probe time t and pair x^i != y^i, the sums over y^{-i} of
    lambda^{(x^i, x^{-i})}_{(y^i, y^{-i})}(t) must agree across x^{-i} within 1e-10
    (relative). Each disagreement is reported once, as its extreme pair.

    Args:
        g: Generator on a factored space with at least two factors
        probe_times: Times at which to evaluate the generator

    Returns:
        One holds flag per factor plus the violations
    """
    space = g.space
    if space.n_factors < 2:
        raise GeneratorError("condition M needs a factored space with at least two factors")
    times = check_times(probe_times)

    violations: List[Certificate] = []
    holds = [True] * space.n_factors
    for i in range(space.n_factors):
        coords = space.coordinates[:, i]
        extension = extension_matrix(space, i).matrix
        for t in times:
            sums = target_rate_sums(g.matrix_at(t), extension)
            for x in range(space.shape[i]):
                sources = np.nonzero(coords == x)[0]
                for y in range(space.shape[i]):
                    if y == x:
                        continue
                    column = sums[sources, y]
                    high, low = sources[int(np.argmax(column))], sources[int(np.argmin(column))]
                    gap, scale = relative_gap(float(sums[high, y]), float(sums[low, y]))
                    if gap > CONDITION_M_TOLERANCE * scale:
                        holds[i] = False
                        violations.append(
                            Certificate(
                                kind="condition_M",
                                factor=i,
                                time=t,
                                from_state=space.factors[i].states[x],
                                to_state=space.factors[i].states[y],
                                left_context=space.label(int(high)),
                                right_context=space.label(int(low)),
                                left=float(sums[high, y]),
                                right=float(sums[low, y]),
                                gap=gap,
                            )
                        )

    if violations:
        failed = [i for i, ok in enumerate(holds) if not ok]
        logger.info("condition_m_violated", factors=failed, count=len(violations))
    return ConditionMResult(holds=tuple(holds), probe_times=times, violations=sorted_certificates(violations))


def check_condition_N(g: GeneratorFunction, probe_times: Sequence[float], i: int) -> ConditionNResult:
    """Test Lambda(t) C^{i,*} = C^{i,*} Lambda^i(t) for some Lambda^i(t), returning it as witness."""
    space = g.space
    space.check_factor(i)
    times = check_times(probe_times)
    coords = space.coordinates[:, i]
    extension = extension_matrix(space, i).matrix
    representatives = [int(np.nonzero(coords == x)[0][0]) for x in range(space.shape[i])]

    worst = 0.0
    candidates = []
    for t in times:
        lifted = target_rate_sums(g.matrix_at(t), extension)
        candidate = lifted[representatives]
        residual = float(np.max(np.abs(lifted - extension @ candidate)))
        scale = 1.0 + float(np.max(np.abs(lifted)))
        worst = max(worst, residual / scale)
        candidates.append(candidate)

    holds = worst <= CONDITION_M_TOLERANCE
    witness: Optional[Tuple[np.ndarray, ...]] = tuple(candidates) if holds else None
    return ConditionNResult(factor=i, holds=holds, max_residual=worst, probe_times=times, witness=witness)

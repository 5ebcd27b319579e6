"""Strong consistency, marginal generator extraction and the operator condition."""

from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog

from kolmogorov import EPS_REACH, ConditionalOperator, evolve
from state_model import Distribution, FamilyGenerator, GeneratorFunction, extension_matrix
from state_model.families import get_family

from .conditions import check_times, target_rate_sums
from .reports import (
    Certificate,
    MarginalGenerator,
    OperatorConditionResult,
    StrongCheckResult,
    relative_gap,
    sorted_certificates,
)

logger = structlog.get_logger()

STRONG_TOLERANCE = 1e-9
OPERATOR_TOLERANCE = 1e-6


def closed_form_marginal(g: GeneratorFunction, mu0: Distribution, i: int) -> Optional[FamilyGenerator]:
    """Registered closed form of factor i's generator, when g is a family that declares one."""
    if not isinstance(g, FamilyGenerator):
        return None
    family = get_family(g.name)
    if not family.marginals:
        return None
    if family.marginals_need_origin and mu0.weights[0] != 1.0:
        return None
    return g.closed_form_marginals()[i]


def check_strong(
    g: GeneratorFunction, mu0: Distribution, probe_times: Sequence[float], i: int
) -> StrongCheckResult:
    """Check that factor i's jump-rate sums agree across all reachable joint states.

    At each probe time and each x^i != y^i the sums s(x^{-i}) over y^{-i} must coincide
    (1e-9 relative) over the states (x^i, x^{-i}) with P(X_t = .) > EPS_REACH. States
    never reached are skipped; a disagreement confined to them is noted, not failed.

    Args:
        g: Joint generator
        mu0: Initial law
        probe_times: Times to check
        i: Factor index (0-based)

    Returns:
        Result holding the common sums as a MarginalGenerator on success, or the
        certificates (maximal gap first available via ``certificate``) on failure
    """
    space = g.space
    space.check_factor(i)
    times = check_times(probe_times)
    coords = space.coordinates[:, i]
    labels = space.factors[i].states
    extension = extension_matrix(space, i).matrix

    certificates: List[Certificate] = []
    notes: List[str] = []
    rows: List[np.ndarray] = []
    for t in times:
        sums = target_rate_sums(g.matrix_at(t), extension)
        reachable = evolve(mu0, g, t).weights > EPS_REACH
        marginal = np.full((space.shape[i],) * 2, np.nan)
        for x in range(space.shape[i]):
            in_slice = coords == x
            live = np.nonzero(in_slice & reachable)[0]
            dead = np.nonzero(in_slice & ~reachable)[0]
            for y in range(space.shape[i]):
                if y == x:
                    continue
                if live.size == 0:
                    column = sums[dead, y]
                    if np.ptp(column) <= STRONG_TOLERANCE * (1.0 + np.abs(column).max()):
                        marginal[x, y] = column[0]
                    continue
                column = sums[live, y]
                high, low = live[int(np.argmax(column))], live[int(np.argmin(column))]
                gap, scale = relative_gap(float(sums[high, y]), float(sums[low, y]))
                if gap > STRONG_TOLERANCE * scale:
                    certificates.append(
                        Certificate(
                            kind="strong",
                            factor=i,
                            time=t,
                            from_state=labels[x],
                            to_state=labels[y],
                            left_context=space.label(int(high)),
                            right_context=space.label(int(low)),
                            left=float(sums[high, y]),
                            right=float(sums[low, y]),
                            gap=gap,
                        )
                    )
                    continue
                marginal[x, y] = sums[live[0], y]
                if dead.size and np.any(np.abs(sums[dead, y] - marginal[x, y]) > STRONG_TOLERANCE * scale):
                    notes.append(f"t={t:g}: rates {labels[x]}->{labels[y]} differ only on unreachable states")
            if live.size == 0:
                notes.append(f"t={t:g}: no reachable state with {space.factors[i].name}={labels[x]}")
        rows.append(marginal)

    strong = not certificates
    result = StrongCheckResult(
        factor=i,
        strong=strong,
        probe_times=times,
        marginal=(
            MarginalGenerator.from_rows(
                i, space.factor_space(i), list(times), rows, closed_form_marginal(g, mu0, i)
            )
            if strong
            else None
        ),
        certificates=sorted_certificates(certificates),
        notes=notes,
    )
    logger.debug("strong_check", factor=i, strong=strong, certificates=len(certificates))
    return result


def marginal_rows(
    law: Distribution, matrix: np.ndarray, i: int, t: float
) -> Tuple[np.ndarray, ConditionalOperator]:
    """Q_t^i Lambda(t) C^{i,*} with NaN on undefined rows."""
    q = ConditionalOperator.from_distribution(law, i, t)
    extension = extension_matrix(law.space, i).matrix
    projected = q.matrix @ matrix @ extension
    projected[~np.array(q.defined)] = np.nan
    return projected, q


def extract_marginal(
    g: GeneratorFunction, mu0: Distribution, i: int, grid: Sequence[float]
) -> MarginalGenerator:
    """Marginal generator of factor i from the joint rates averaged under Q_t^i.

    lambda^i_{x y}(t) = sum over x^{-i}, y^{-i} of the joint rate weighted by
    P(X_t^{-i} = x^{-i} | X_t^i = x), so off-diagonals are convex combinations of
    nonnegative rates. Rows conditioned on an unreachable x are left undefined.
    """
    g.space.check_factor(i)
    times = check_times(grid)
    rows = []
    for t in times:
        projected, q = marginal_rows(evolve(mu0, g, t), g.matrix_at(t), i, t)
        if not any(q.defined):
            logger.warning("marginal_grid_time_unreachable", factor=i, time=t)
        rows.append(projected)
    return MarginalGenerator.from_rows(
        i, g.space.factor_space(i), list(times), rows, closed_form_marginal(g, mu0, i)
    )


Target = Union[MarginalGenerator, GeneratorFunction]


def check_operator_condition(
    g: GeneratorFunction, mu0: Distribution, target: Target, i: int, grid: Sequence[float]
) -> OperatorConditionResult:
    """Residual of Q_t^i Lambda(t) C^{i,*} = Lambda^i(t) over the grid; passes at 1e-6.

    Rows whose conditioning state is unreachable, or whose target row is NaN, are left
    out of the residual and listed in ``excluded``.
    """
    g.space.check_factor(i)
    times = check_times(grid)
    labels = g.space.factors[i].states
    residuals = []
    excluded: List[Tuple[float, str]] = []
    for t in times:
        projected, q = marginal_rows(evolve(mu0, g, t), g.matrix_at(t), i, t)
        expected = target.matrix_at(t)
        reachable = np.array(q.defined)
        missing = reachable & np.any(np.isnan(expected), axis=1)
        mask = reachable & ~missing
        if missing.any():
            logger.warning(
                "operator_condition_target_undefined",
                factor=i,
                time=t,
                rows=[labels[x] for x in np.nonzero(missing)[0]],
            )
        excluded.extend((t, labels[x]) for x in np.nonzero(~mask)[0])
        residuals.append(float(np.max(np.abs(projected[mask] - expected[mask]))) if mask.any() else 0.0)

    worst = max(residuals)
    passed = worst <= OPERATOR_TOLERANCE
    logger.debug("operator_condition", factor=i, passed=passed, max_residual=worst)
    return OperatorConditionResult(
        factor=i,
        passed=passed,
        max_residual=worst,
        times=times,
        residuals=tuple(residuals),
        excluded=excluded,
    )

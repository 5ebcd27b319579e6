"""One-call audit of a joint generator: strong, weak, operator condition and immersion."""

from typing import Optional, Sequence

import structlog

from state_model import Distribution, GeneratorFunction

from .conditions import check_condition_M
from .reports import (
    ConsistencyReport,
    FactorReport,
    ImmersionVerdict,
    OperatorConditionResult,
    StrongCheckResult,
    Verdict,
    WeakCheckResult,
)
from .strong import check_operator_condition, check_strong
from .weak import check_weak, immersion_verdict

logger = structlog.get_logger()

MODES = ("strong", "weak", "both")


def factor_verdict(strong: Optional[StrongCheckResult], weak: Optional[WeakCheckResult]) -> Verdict:
    """Combine the checks run for one factor into its reported verdict."""
    if weak is not None and weak.verdict is Verdict.INCONSISTENT:
        return Verdict.INCONSISTENT
    if strong is not None and strong.strong:
        return Verdict.STRONG
    if weak is not None:
        return weak.verdict
    if strong is not None:
        return Verdict.INCONSISTENT
    return Verdict.UNDETERMINED


def check_consistency(
    g: GeneratorFunction,
    mu0: Distribution,
    grid: Sequence[float],
    mode: str = "both",
    event_depth: int = 2,
    factors: Optional[Sequence[int]] = None,
) -> ConsistencyReport:
    """Run the requested checks for every selected factor.

    Args:
        g: Joint generator
        mu0: Initial law
        grid: Probe/grid times shared by all checks
        mode: "strong", "weak" or "both"
        event_depth: Path-event depth for the weak check
        factors: 0-based factor indices (all when None)

    Returns:
        ConsistencyReport with verdicts, certificates, marginals and immersion verdicts
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got '{mode}'")
    selected = list(range(g.space.n_factors)) if factors is None else list(factors)
    for i in selected:
        g.space.check_factor(i)
    times = tuple(float(t) for t in grid)

    logger.info("consistency_check_started", mode=mode, factors=selected, grid_size=len(times))
    reports = []
    for i in selected:
        strong = check_strong(g, mu0, times, i) if mode in ("strong", "both") else None
        weak = check_weak(g, mu0, i, times, event_depth) if mode in ("weak", "both") else None

        operator: Optional[OperatorConditionResult] = None
        marginal = weak.marginal if weak is not None and weak.marginal is not None else None
        if marginal is None and strong is not None:
            marginal = strong.marginal
        if marginal is not None:
            operator = check_operator_condition(g, mu0, marginal.closed_form or marginal, i, times)

        immersion = (
            immersion_verdict(strong.strong if strong is not None else None, weak.verdict, i)
            if weak is not None
            else ImmersionVerdict.UNDETERMINED
        )
        reports.append(
            FactorReport(
                factor=i,
                name=g.space.factors[i].name,
                verdict=factor_verdict(strong, weak),
                immersion=immersion,
                strong=strong,
                weak=weak,
                operator=operator,
            )
        )

    condition_m = check_condition_M(g, times) if g.space.n_factors >= 2 else None
    report = ConsistencyReport(
        mode=mode, grid=times, event_depth=event_depth, factors=reports, condition_m=condition_m
    )
    logger.info("consistency_check_finished", verdicts={k: v.value for k, v in report.verdicts.items()})
    return report

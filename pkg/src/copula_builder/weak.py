"""Weak Markov copula candidates from registered families, and their verification."""

from enum import Enum
from typing import List, Sequence, Tuple

import structlog
from pydantic import BaseModel, Field

from consistency import (
    MarginalGenerator,
    StrongCheckResult,
    Verdict,
    WeakCheckResult,
    check_strong,
    check_weak,
)
from state_model import (
    Distribution,
    FamilyGenerator,
    GeneratorError,
    GeneratorFunction,
    ValidationReport,
    validate_generator,
)

logger = structlog.get_logger()

MARGINAL_MATCH_TOLERANCE = 1e-6

# Families whose joint generator is a known weak copula of its registered marginals.
WEAK_CANDIDATES: Tuple[str, ...] = ("first_jump_shock",)


class WeakCopulaCandidate(BaseModel):
    """Joint generator, the marginals it should reproduce, and the start they assume."""

    family: str
    generator: FamilyGenerator
    marginals: Tuple[FamilyGenerator, ...]
    start: Distribution


def build_weak_copula_candidate(family_name: str, **params: float) -> WeakCopulaCandidate:
    """Instantiate a registered weak-copula family with its target marginals.

    Raises:
        GeneratorError: unknown family or invalid parameters (c <= 0 for first_jump_shock)
    """
    if family_name not in WEAK_CANDIDATES:
        raise GeneratorError(
            f"'{family_name}' is not a registered weak copula family; known: {list(WEAK_CANDIDATES)}"
        )
    generator = FamilyGenerator.create(family_name, **params)
    logger.debug("weak_candidate_built", family=family_name, params=generator.params)
    return WeakCopulaCandidate(
        family=family_name,
        generator=generator,
        marginals=generator.closed_form_marginals(),
        start=Distribution.point_mass(generator.space, 0),
    )


class WeakClassification(str, Enum):
    WEAK_ONLY = "weak_only"
    ALSO_STRONG = "also_strong"
    NOT_WEAK = "not_weak"


class WeakCopulaVerification(BaseModel):
    passed: bool
    classification: WeakClassification
    validation: ValidationReport
    weak: List[WeakCheckResult] = Field(default_factory=list)
    marginal_gaps: Tuple[float, ...] = ()
    strong: List[StrongCheckResult] = Field(default_factory=list)
    failed_factors: List[int] = Field(default_factory=list)


def verify_weak_copula(
    candidate: GeneratorFunction,
    targets: Sequence[GeneratorFunction],
    mu0: Distribution,
    grid: Sequence[float],
    event_depth: int = 2,
) -> WeakCopulaVerification:
    """Check the weak-copula definition: a valid generator whose factors are each Markov in their
    own filtration with the target laws.

    Passing candidates are classified weak_only or also_strong by check_strong.

    Args:
        candidate: Joint generator
        targets: One target marginal generator per factor
        mu0: Initial law
        grid: Grid times for the checks
        event_depth: Path-event depth for check_weak
    """
    if len(targets) != candidate.space.n_factors:
        raise ValueError(f"need {candidate.space.n_factors} target marginals, got {len(targets)}")
    validation = validate_generator(candidate, [0.0, *grid])
    if not validation.ok:
        return WeakCopulaVerification(
            passed=False, classification=WeakClassification.NOT_WEAK, validation=validation
        )

    weak: List[WeakCheckResult] = []
    gaps: List[float] = []
    failed: List[int] = []
    for i, target in enumerate(targets):
        result = check_weak(candidate, mu0, i, grid, event_depth)
        weak.append(result)
        marginal: MarginalGenerator | None = result.marginal
        gap = marginal.max_difference(target) if marginal is not None else float("inf")
        gaps.append(gap)
        if result.verdict is not Verdict.WEAK_EVIDENCE or gap > MARGINAL_MATCH_TOLERANCE:
            failed.append(i)

    if failed:
        logger.info("weak_copula_rejected", failed_factors=failed)
        return WeakCopulaVerification(
            passed=False,
            classification=WeakClassification.NOT_WEAK,
            validation=validation,
            weak=weak,
            marginal_gaps=tuple(gaps),
            failed_factors=failed,
        )

    strong = [check_strong(candidate, mu0, grid, i) for i in range(candidate.space.n_factors)]
    classification = (
        WeakClassification.ALSO_STRONG if all(s.strong for s in strong) else WeakClassification.WEAK_ONLY
    )
    logger.info("weak_copula_verified", classification=classification.value)
    return WeakCopulaVerification(
        passed=True,
        classification=classification,
        validation=validation,
        weak=weak,
        marginal_gaps=tuple(gaps),
        strong=strong,
    )

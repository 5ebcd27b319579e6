"""Weak consistency falsification through path events, and the immersion verdict."""

import itertools
from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog

from config import settings
from kolmogorov import PathEvent, TransitionCache, path_event_law
from state_model import Distribution, GeneratorFunction, extension_matrix
from utils import fan_out

from .conditions import check_times, target_rate_sums
from .reports import (
    Certificate,
    ImmersionVerdict,
    MarginalGenerator,
    Verdict,
    WeakCheckResult,
    relative_gap,
    sorted_certificates,
)
from .strong import closed_form_marginal, extract_marginal

logger = structlog.get_logger()

WEAK_TOLERANCE = 1e-7
CROSS_CHECK_TOLERANCE = 1e-9
MAX_EVENT_DEPTH = 3


def projected_intensity(
    g: GeneratorFunction,
    mu0: Distribution,
    ev: PathEvent,
    i: int,
    x: int,
    y: int,
    cache: Optional[TransitionCache] = None,
) -> float:
    """Intensity of factor i jumping x -> y at the event's last time, given the event.

    Averages the joint rate sums over the conditional law of X at the last constraint
    time; this is the finite-event stand-in for the optional projection onto the
    factor's own history.
    """
    if ev.factor != i or ev.last_state != x:
        raise ValueError(f"event must end with factor {i} in state {x}, got {list(ev.constraints)}")
    if x == y:
        raise ValueError("projected intensity needs a jump target different from the current state")
    law = path_event_law(mu0, g, ev, cache).require_conditional()
    sums = target_rate_sums(g.matrix_at(ev.last_time), extension_matrix(g.space, i).matrix)
    return float(law.weights @ sums[:, y])


def event_family(i: int, t: float, x: int, size: int, depth: int) -> List[PathEvent]:
    """All events on factor i ending in (t, x) over the dyadic sub-grids t/2^(m-1) < ... < t.

    The single-constraint event comes first; it is the reference every other event is
    compared against.
    """
    events = [PathEvent.at(i, (t, x))]
    if t <= 0.0:
        return events
    for m in range(2, depth + 1):
        times = [t / 2 ** (m - 1 - k) for k in range(m)]
        for prefix in itertools.product(range(size), repeat=m - 1):
            events.append(PathEvent.at(i, *zip(times[:-1], prefix), (t, x)))
    return events


def describe(ev: PathEvent, g: GeneratorFunction) -> str:
    factor = g.space.factors[ev.factor]
    return ev.describe(factor.states, factor.name)


def worst_disagreement(intensities: Sequence[float]) -> Optional[Tuple[int, int, float]]:
    """Locate the largest disagreement among one event family's intensities.

    Index 0 is the reference event. Each other event is compared against it first; when
    none differs by more than WEAK_TOLERANCE (relative), the smallest and largest values
    of the whole family are compared with each other.

    Returns:
        (left index, right index, gap), or None when the family agrees
    """
    reference = intensities[0]
    found: Optional[Tuple[int, int, float]] = None
    for k, value in enumerate(intensities[1:], start=1):
        gap, scale = relative_gap(reference, value)
        if gap > WEAK_TOLERANCE * scale and (found is None or gap > found[2]):
            found = (0, k, gap)
    if found is not None or len(intensities) < 3:
        return found
    low = int(np.argmin(intensities))
    high = int(np.argmax(intensities))
    gap, scale = relative_gap(intensities[low], intensities[high])
    return (low, high, gap) if gap > WEAK_TOLERANCE * scale else None


GridOutcome = Tuple[List[Certificate], np.ndarray, int, List[str]]


def check_weak(
    g: GeneratorFunction,
    mu0: Distribution,
    i: int,
    grid: Sequence[float],
    event_depth: int = 2,
) -> WeakCheckResult:
    """Search for two histories of factor i that imply different jump intensities.

    For each grid time t and terminal state x, every factor-i pattern on the dyadic
    sub-grids up to ``event_depth`` constraint times is evaluated (events of probability
    <= EPS_REACH are pruned) and its projected intensity compared with the one given
    only {X^i_t = x}, then the family's extremes with each other (see
    ``worst_disagreement``). A gap above 1e-7 (relative) is a certificate that factor i is not
    Markov in its own filtration. Without one the verdict is only weak_evidence.

    Args:
        g: Joint generator
        mu0: Initial law
        i: Factor index (0-based)
        grid: Times at which to compare intensities
        event_depth: Maximum number of constraint times per event (1..3)

    Returns:
        Verdict, certificates and the marginal assembled from the reference intensities
    """
    if not 1 <= event_depth <= MAX_EVENT_DEPTH:
        raise ValueError(f"event_depth must be in 1..{MAX_EVENT_DEPTH}, got {event_depth}")
    space = g.space
    space.check_factor(i)
    times = check_times(grid)
    size = space.shape[i]
    labels = space.factors[i].states
    cache = TransitionCache(g)

    def at_time(t: float) -> GridOutcome:
        certificates: List[Certificate] = []
        notes: List[str] = []
        reference_rows = np.full((size, size), np.nan)
        evaluated = 0
        for x in range(size):
            events = event_family(i, t, x, size, event_depth)
            live = [ev for ev in events if path_event_law(mu0, g, ev, cache).defined]
            if not live or live[0] is not events[0]:
                notes.append(
                    f"t={t:g}: no event of positive probability ends in "
                    f"{space.factors[i].name}={labels[x]}"
                )
                continue
            evaluated += len(live)
            for y in range(size):
                if y == x:
                    continue
                intensities = [projected_intensity(g, mu0, ev, i, x, y, cache) for ev in live]
                reference_rows[x, y] = intensities[0]
                found = worst_disagreement(intensities)
                if found is not None:
                    left, right, gap = found
                    certificates.append(
                        Certificate(
                            kind="weak",
                            factor=i,
                            time=t,
                            from_state=labels[x],
                            to_state=labels[y],
                            left_context=describe(live[left], g),
                            right_context=describe(live[right], g),
                            left=intensities[left],
                            right=intensities[right],
                            gap=gap,
                        )
                    )
        return certificates, reference_rows, evaluated, notes

    outcomes = fan_out(at_time, times, settings.threads)
    certificates = sorted_certificates([c for outcome in outcomes for c in outcome[0]])
    evaluated = sum(outcome[2] for outcome in outcomes)
    notes = [note for outcome in outcomes for note in outcome[3]]

    if certificates:
        logger.info("weak_consistency_falsified", factor=i, certificates=len(certificates))
        return WeakCheckResult(
            factor=i,
            verdict=Verdict.INCONSISTENT,
            event_depth=event_depth,
            events_evaluated=evaluated,
            certificates=certificates,
            notes=notes,
        )

    marginal = MarginalGenerator.from_rows(
        i,
        space.factor_space(i),
        list(times),
        [outcome[1] for outcome in outcomes],
        closed_form_marginal(g, mu0, i),
    )
    drift = marginal.max_difference(extract_marginal(g, mu0, i, times))
    if drift > CROSS_CHECK_TOLERANCE:
        logger.warning("weak_marginal_cross_check_drift", factor=i, drift=drift)
        notes.append(f"reference intensities differ from the extracted marginal by {drift:.3g}")
    return WeakCheckResult(
        factor=i,
        verdict=Verdict.WEAK_EVIDENCE,
        event_depth=event_depth,
        events_evaluated=evaluated,
        marginal=marginal,
        notes=notes,
    )


def immersion_verdict(strong: Optional[bool], weak: Verdict, i: int) -> ImmersionVerdict:
    """Under weak consistency, immersion of the factor's filtration is equivalent to strong consistency.

    Args:
        strong: Outcome of check_strong for factor i (None when not run)
        weak: Verdict of check_weak for factor i
        i: Factor index, for logging

    Returns:
        holds, fails, or undetermined when weak consistency is not established
    """
    if weak is not Verdict.WEAK_EVIDENCE or strong is None:
        verdict = ImmersionVerdict.UNDETERMINED
    else:
        verdict = ImmersionVerdict.HOLDS if strong else ImmersionVerdict.FAILS
    logger.debug("immersion_verdict", factor=i, verdict=verdict.value)
    return verdict

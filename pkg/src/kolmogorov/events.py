"""Path events on one factor and the conditional laws they induce."""

from typing import Any, Optional, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from state_model import Distribution, GeneratorFunction
from state_model.generator import frozen_array

from .transition import TransitionCache, check_same_space, evolve

logger = structlog.get_logger()

EPS_REACH = 1e-12


class UndefinedConditionalError(ValueError):
    """Raised when a value is demanded from conditioning on a null event."""


class PathEvent(BaseModel):
    """Finite set of constraints {X^i_{t_k} = x_k} on factor ``factor``."""

    model_config = ConfigDict(frozen=True)

    factor: int = Field(..., ge=0)
    constraints: Tuple[Tuple[float, int], ...] = Field(..., min_length=1)

    @field_validator("constraints")
    @classmethod
    def check_constraints(cls, constraints: Tuple[Tuple[float, int], ...]) -> Tuple[Tuple[float, int], ...]:
        times = [t for t, _ in constraints]
        if any(t < 0 for t in times):
            raise ValueError(f"constraint times must be nonnegative, got {times}")
        if any(b <= a for a, b in zip(times[:-1], times[1:])):
            raise ValueError(f"constraint times must be strictly increasing, got {times}")
        if any(state < 0 for _, state in constraints):
            raise ValueError("constraint states must be nonnegative indices")
        return constraints

    @classmethod
    def at(cls, factor: int, *constraints: Tuple[float, int]) -> "PathEvent":
        return cls(factor=factor, constraints=tuple((float(t), int(x)) for t, x in constraints))

    @property
    def last_time(self) -> float:
        return self.constraints[-1][0]

    @property
    def last_state(self) -> int:
        return self.constraints[-1][1]

    @property
    def depth(self) -> int:
        return len(self.constraints)

    def describe(self, labels: Tuple[str, ...], factor_name: str) -> str:
        """Readable form such as 'X2(0.5)=1, X2(1)=0'."""
        return ", ".join(f"{factor_name}({t:g})={labels[x]}" for t, x in self.constraints)


class PathEventLaw(BaseModel):
    """Probability of a path event and the law of X at its last time given the event."""

    model_config = ConfigDict(frozen=True)

    event: PathEvent
    probability: float
    conditional: Optional[Distribution] = None

    @property
    def defined(self) -> bool:
        return self.conditional is not None

    def require_conditional(self) -> Distribution:
        if self.conditional is None:
            raise UndefinedConditionalError(
                f"event {list(self.event.constraints)} has probability {self.probability:.3g} <= {EPS_REACH}"
            )
        return self.conditional


def path_event_law(
    mu0: Distribution,
    g: GeneratorFunction,
    ev: PathEvent,
    cache: Optional[TransitionCache] = None,
) -> PathEventLaw:
    """Propagate mu0 through the event's constraint times, masking after each one.

    Args:
        mu0: Initial law at time 0
        g: Generator function
        ev: Path event on one factor
        cache: Optional memo of transition matrices shared across events

    Returns:
        Event probability and, when it exceeds EPS_REACH, the conditional law at the
        last constraint time
    """
    check_same_space(mu0, g)
    space = g.space
    space.check_factor(ev.factor)
    if any(x >= space.shape[ev.factor] for _, x in ev.constraints):
        raise ValueError(f"event states out of range for factor {ev.factor} of size {space.shape[ev.factor]}")

    cache = cache or TransitionCache(g)
    coords = space.coordinates[:, ev.factor]
    mass = mu0.weights.copy()
    now = 0.0
    for t, x in ev.constraints:
        mass = mass @ cache.get(now, t).entries
        mass[coords != x] = 0.0
        now = t

    probability = float(min(max(mass.sum(), 0.0), 1.0))
    if probability <= EPS_REACH:
        logger.debug("path_event_null", constraints=list(ev.constraints), probability=probability)
        return PathEventLaw(event=ev, probability=probability)
    return PathEventLaw(
        event=ev,
        probability=probability,
        conditional=Distribution.normalized(space, mass / probability),
    )


class ConditionalOperator(BaseModel):
    """Matrix of Q_t^i: entry (x^i, x) = P(X_t = x | X_t^i = x^i).

    Undefined rows (marginal probability <= EPS_REACH) are zero-filled and flagged in
    ``defined``.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    factor: int
    time: float
    matrix: np.ndarray
    defined: Tuple[bool, ...]

    @field_validator("matrix", mode="before")
    @classmethod
    def freeze_matrix(cls, value: Any) -> np.ndarray:
        return frozen_array(value, 2)

    @model_validator(mode="after")
    def check_rows(self) -> "ConditionalOperator":
        if len(self.defined) != self.matrix.shape[0]:
            raise ValueError("one defined flag per row is required")
        return self

    @classmethod
    def from_distribution(cls, law: Distribution, i: int, t: float) -> "ConditionalOperator":
        """Bayes restriction of the law of X_t to each slice {X_t^i = x^i}."""
        space = law.space
        coords = space.coordinates[:, i]
        marginal = law.marginal(i)
        matrix = np.zeros((space.shape[i], space.flat_size))
        defined = []
        for x in range(space.shape[i]):
            reachable = bool(marginal[x] > EPS_REACH)
            if reachable:
                in_slice = coords == x
                matrix[x, in_slice] = law.weights[in_slice] / marginal[x]
            defined.append(reachable)
        return cls(factor=i, time=t, matrix=matrix, defined=tuple(defined))

    def apply(self, f: np.ndarray) -> np.ndarray:
        """Q_t^i f with NaN on undefined rows."""
        result = self.matrix @ np.asarray(f, dtype=float)
        result[~np.array(self.defined)] = np.nan
        return result


def conditional_operator(mu0: Distribution, g: GeneratorFunction, i: int, t: float) -> ConditionalOperator:
    """Build Q_t^i from the law of X_t started at mu0."""
    g.space.check_factor(i)
    return ConditionalOperator.from_distribution(evolve(mu0, g, t), i, t)

"""Transition matrices, distribution evolution and path-event conditioning."""

from .events import (
    EPS_REACH,
    ConditionalOperator,
    PathEvent,
    PathEventLaw,
    UndefinedConditionalError,
    conditional_operator,
    path_event_law,
)
from .transition import TransitionCache, TransitionMatrix, evolve, transition_matrix

__all__ = [
    "EPS_REACH",
    "TransitionMatrix",
    "TransitionCache",
    "transition_matrix",
    "evolve",
    "PathEvent",
    "PathEventLaw",
    "path_event_law",
    "ConditionalOperator",
    "conditional_operator",
    "UndefinedConditionalError",
]

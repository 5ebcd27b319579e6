"""Strong and weak Markov copula construction."""

from .problem import (
    CopulaObjective,
    CopulaProblem,
    CopulaSolution,
    CopulaSolverError,
    ObjectiveKind,
    SolverStatus,
)
from .strong import ConstraintSystem, StrongCopulaVerification, build_strong_copula, verify_strong_copula
from .weak import (
    WEAK_CANDIDATES,
    WeakClassification,
    WeakCopulaCandidate,
    WeakCopulaVerification,
    build_weak_copula_candidate,
    verify_weak_copula,
)

__all__ = [
    "CopulaObjective",
    "CopulaProblem",
    "CopulaSolution",
    "CopulaSolverError",
    "ObjectiveKind",
    "SolverStatus",
    "ConstraintSystem",
    "build_strong_copula",
    "verify_strong_copula",
    "StrongCopulaVerification",
    "WEAK_CANDIDATES",
    "WeakClassification",
    "WeakCopulaCandidate",
    "WeakCopulaVerification",
    "build_weak_copula_candidate",
    "verify_weak_copula",
]

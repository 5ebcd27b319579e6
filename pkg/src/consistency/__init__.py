"""Strong and weak Markovian consistency checks with numeric certificates."""

from .audit import check_consistency, factor_verdict
from .conditions import check_condition_M, check_condition_N
from .reports import (
    Certificate,
    ConditionMResult,
    ConditionNResult,
    ConsistencyReport,
    FactorReport,
    ImmersionVerdict,
    MarginalGenerator,
    OperatorConditionResult,
    StrongCheckResult,
    Verdict,
    WeakCheckResult,
)
from .strong import check_operator_condition, check_strong, extract_marginal
from .weak import check_weak, event_family, immersion_verdict, projected_intensity

__all__ = [
    "Verdict",
    "ImmersionVerdict",
    "Certificate",
    "MarginalGenerator",
    "ConditionMResult",
    "ConditionNResult",
    "StrongCheckResult",
    "OperatorConditionResult",
    "WeakCheckResult",
    "FactorReport",
    "ConsistencyReport",
    "check_condition_M",
    "check_condition_N",
    "check_strong",
    "extract_marginal",
    "check_operator_condition",
    "projected_intensity",
    "event_family",
    "check_weak",
    "immersion_verdict",
    "check_consistency",
    "factor_verdict",
]

"""Verdicts, certificates and result models shared by the consistency checkers."""

from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from state_model import FactoredStateSpace, FamilyGenerator
from state_model.generator import frozen_array

DEFINED_ROW_TOLERANCE = 1e-9


class Verdict(str, Enum):
    """Per-factor consistency verdict."""

    STRONG = "strong"
    WEAK_EVIDENCE = "weak_evidence"
    INCONSISTENT = "inconsistent"
    UNDETERMINED = "undetermined"


class ImmersionVerdict(str, Enum):
    HOLDS = "holds"
    FAILS = "fails"
    UNDETERMINED = "undetermined"


class Certificate(BaseModel):
    """Numeric witness that two quantities required to agree do not.

    ``left_context``/``right_context`` say where each value was measured: a joint state
    label for rate-sum comparisons, an event description for path-event comparisons.
    """

    model_config = ConfigDict(frozen=True)

    kind: str
    factor: int
    time: float
    from_state: str
    to_state: str
    left_context: str
    right_context: str
    left: float
    right: float
    gap: float

    @property
    def sort_key(self) -> Tuple[Any, ...]:
        return (self.time, self.factor, self.from_state, self.to_state, self.left_context, self.right_context)


def sorted_certificates(certificates: List[Certificate]) -> List[Certificate]:
    return sorted(certificates, key=lambda c: c.sort_key)


def relative_gap(left: float, right: float) -> Tuple[float, float]:
    """Return (|left - right|, 1 + max(|left|, |right|)) for relative comparisons."""
    return abs(left - right), 1.0 + max(abs(left), abs(right))


class MarginalGenerator(BaseModel):
    """A factor's generator tabulated on a time grid.

    Rows whose conditioning state is unreachable are NaN and flagged in ``defined``.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    factor: int
    space: FactoredStateSpace
    times: Tuple[float, ...]
    matrices: Tuple[np.ndarray, ...]
    defined: Tuple[Tuple[bool, ...], ...]
    closed_form: Optional[FamilyGenerator] = None

    @field_validator("matrices", mode="before")
    @classmethod
    def freeze_matrices(cls, value: Any) -> Tuple[np.ndarray, ...]:
        return tuple(frozen_array(m, 2) for m in value)

    @model_validator(mode="after")
    def check_grid(self) -> "MarginalGenerator":
        k = self.space.flat_size
        if not (len(self.times) == len(self.matrices) == len(self.defined)):
            raise ValueError("times, matrices and defined flags must have equal length")
        for t, matrix, rows in zip(self.times, self.matrices, self.defined):
            if matrix.shape != (k, k) or len(rows) != k:
                raise ValueError(f"marginal matrix at t={t} does not match factor size {k}")
            for x in np.nonzero(rows)[0]:
                row = matrix[x]
                off = np.delete(row, x)
                if np.any(off < -DEFINED_ROW_TOLERANCE) or abs(row.sum()) > DEFINED_ROW_TOLERANCE * (
                    1.0 + np.abs(off).sum()
                ):
                    raise ValueError(f"marginal row {x} at t={t} is not a generator row")
        return self

    @classmethod
    def from_rows(
        cls,
        factor: int,
        space: FactoredStateSpace,
        times: List[float],
        off_diagonals: List[np.ndarray],
        closed_form: Optional[FamilyGenerator] = None,
    ) -> "MarginalGenerator":
        """Assemble from off-diagonal rates (NaN rows = undefined); diagonals by negative row sums."""
        matrices, defined = [], []
        for rates in off_diagonals:
            matrix = np.array(rates, dtype=float)
            np.fill_diagonal(matrix, 0.0)
            rows = ~np.any(np.isnan(matrix), axis=1)
            matrix[rows] = np.clip(matrix[rows], 0.0, None)
            np.fill_diagonal(matrix, np.where(rows, -matrix.sum(axis=1), np.nan))
            matrix[~rows] = np.nan
            matrices.append(matrix)
            defined.append(tuple(bool(r) for r in rows))
        return cls(
            factor=factor,
            space=space,
            times=tuple(float(t) for t in times),
            matrices=tuple(matrices),
            defined=tuple(defined),
            closed_form=closed_form,
        )

    def matrix_at(self, t: float) -> np.ndarray:
        """Matrix tabulated at grid time ``t`` (exact lookup)."""
        for time, matrix in zip(self.times, self.matrices):
            if time == t:
                return matrix
        raise KeyError(f"time {t} is not on the marginal grid {list(self.times)}")

    def max_difference(self, other: Any) -> float:
        """Max entry gap on defined rows against another MarginalGenerator or GeneratorFunction."""
        worst = 0.0
        for t, matrix, rows in zip(self.times, self.matrices, self.defined):
            reference = other.matrix_at(t)
            mask = np.array(rows)
            if mask.any():
                worst = max(worst, float(np.max(np.abs(matrix[mask] - reference[mask]))))
        return worst

    def is_constant(self, tolerance: float = 1e-12) -> bool:
        if not self.matrices:
            return True
        base = self.matrices[0]
        return all(np.allclose(m, base, rtol=0.0, atol=tolerance, equal_nan=True) for m in self.matrices[1:])

    def to_document(self) -> Dict[str, Any]:
        """Grid and values for reports; undefined rows become nulls when serialized."""
        return {
            "factor": self.factor,
            "name": self.space.factors[0].name,
            "times": list(self.times),
            "matrices": [m.tolist() for m in self.matrices],
            "closed_form": None if self.closed_form is None else self.closed_form.name,
        }


class ConditionMResult(BaseModel):
    """Outcome of the rate-sum invariance test, one flag per factor."""

    holds: Tuple[bool, ...]
    probe_times: Tuple[float, ...]
    violations: List[Certificate] = Field(default_factory=list)

    def holds_for(self, i: int) -> bool:
        return self.holds[i]


class ConditionNResult(BaseModel):
    """Operator form C^{i,*} Lambda^i = Lambda C^{i,*}; ``witness`` is Lambda^i per probe time."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    factor: int
    holds: bool
    max_residual: float
    probe_times: Tuple[float, ...]
    witness: Optional[Tuple[np.ndarray, ...]] = None


class StrongCheckResult(BaseModel):
    factor: int
    strong: bool
    probe_times: Tuple[float, ...]
    marginal: Optional[MarginalGenerator] = None
    certificates: List[Certificate] = Field(default_factory=list)
    notes: List[str] = Field(default_factory=list)

    @property
    def certificate(self) -> Optional[Certificate]:
        """The maximal-gap certificate, if the check failed."""
        return max(self.certificates, key=lambda c: c.gap) if self.certificates else None

    @property
    def verdict(self) -> Verdict:
        return Verdict.STRONG if self.strong else Verdict.INCONSISTENT


class OperatorConditionResult(BaseModel):
    factor: int
    passed: bool
    max_residual: float
    times: Tuple[float, ...]
    residuals: Tuple[float, ...]
    excluded: List[Tuple[float, str]] = Field(default_factory=list)


class WeakCheckResult(BaseModel):
    factor: int
    verdict: Verdict
    event_depth: int
    events_evaluated: int
    certificates: List[Certificate] = Field(default_factory=list)
    marginal: Optional[MarginalGenerator] = None
    notes: List[str] = Field(default_factory=list)

    @property
    def max_gap(self) -> float:
        return max((c.gap for c in self.certificates), default=0.0)


class FactorReport(BaseModel):
    """Everything checked for one factor."""

    factor: int
    name: str
    verdict: Verdict
    immersion: ImmersionVerdict
    strong: Optional[StrongCheckResult] = None
    weak: Optional[WeakCheckResult] = None
    operator: Optional[OperatorConditionResult] = None

    @property
    def marginal(self) -> Optional[MarginalGenerator]:
        if self.weak is not None and self.weak.marginal is not None:
            return self.weak.marginal
        return self.strong.marginal if self.strong is not None else None

    @property
    def certificates(self) -> List[Certificate]:
        found: List[Certificate] = []
        if self.strong is not None:
            found.extend(self.strong.certificates)
        if self.weak is not None:
            found.extend(self.weak.certificates)
        return found


class ConsistencyReport(BaseModel):
    """Per-factor verdicts, certificates, extracted marginals and immersion verdicts."""

    mode: str
    grid: Tuple[float, ...]
    event_depth: int
    factors: List[FactorReport]
    condition_m: Optional[ConditionMResult] = None

    @property
    def verdicts(self) -> Dict[int, Verdict]:
        return {f.factor: f.verdict for f in self.factors}

    @property
    def immersion(self) -> Dict[int, ImmersionVerdict]:
        return {f.factor: f.immersion for f in self.factors}

    @property
    def marginals(self) -> Dict[int, Optional[MarginalGenerator]]:
        return {f.factor: f.marginal for f in self.factors}

    @property
    def certificates(self) -> List[Certificate]:
        return sorted_certificates([c for f in self.factors for c in f.certificates])

    @property
    def passed(self) -> bool:
        """True when every requested verdict is strong or weak_evidence."""
        return all(f.verdict in (Verdict.STRONG, Verdict.WEAK_EVIDENCE) for f in self.factors)

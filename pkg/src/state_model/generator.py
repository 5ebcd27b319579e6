"""Generator matrices and time-dependent generator functions."""

from abc import ABC, abstractmethod
from bisect import bisect_right
from typing import Any, ClassVar, Dict, List, Optional, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .space import FactoredStateSpace, State

logger = structlog.get_logger()

ROW_SUM_RTOL = 1e-12
ENVELOPE_STEP = 1e-3


class GeneratorError(ValueError):
    """Raised for malformed generators: shape mismatch, bad family, invalid rates."""


def frozen_array(value: Any, ndim: int) -> np.ndarray:
    """Copy ``value`` into a read-only float array of the given rank."""
    array = np.array(value, dtype=float)
    if array.ndim != ndim:
        raise ValueError(f"expected a {ndim}-dimensional array, got shape {array.shape}")
    array.setflags(write=False)
    return array


def row_sum_tolerance(matrix: np.ndarray) -> float:
    scale = float(np.max(np.abs(matrix))) if matrix.size else 0.0
    return ROW_SUM_RTOL * max(1.0, scale)


class RateMatrix(BaseModel):
    """A validated generator matrix: off-diagonals >= 0, rows summing to 0."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    entries: np.ndarray

    @field_validator("entries", mode="before")
    @classmethod
    def freeze_array(cls, value: Any) -> np.ndarray:
        return frozen_array(value, 2)

    @model_validator(mode="after")
    def check_rates(self) -> "RateMatrix":
        problems = matrix_violations(self.entries)
        if problems:
            row, column, kind, magnitude = problems[0]
            raise GeneratorError(
                f"invalid rate matrix: {kind} at row {row}, column {column} ({magnitude:.3g})"
            )
        return self

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def matrix_violations(matrix: np.ndarray) -> List[Tuple[int, Optional[int], str, float]]:
    """List (row, column, kind, magnitude) for every generator-invariant breach."""
    dim = matrix.shape[0]
    if matrix.shape != (dim, dim):
        return [(0, None, "not_square", float(matrix.shape[1] if matrix.ndim == 2 else 0))]
    problems: List[Tuple[int, Optional[int], str, float]] = []
    if not np.all(np.isfinite(matrix)):
        for row, column in zip(*np.nonzero(~np.isfinite(matrix))):
            problems.append((int(row), int(column), "non_finite", float("nan")))
        return problems
    off_diagonal = matrix.copy()
    np.fill_diagonal(off_diagonal, 0.0)
    for row, column in zip(*np.nonzero(off_diagonal < 0.0)):
        problems.append((int(row), int(column), "negative_rate", float(matrix[row, column])))
    tolerance = row_sum_tolerance(matrix)
    sums = matrix.sum(axis=1)
    for row in np.nonzero(np.abs(sums) > tolerance)[0]:
        problems.append((int(row), None, "row_sum", float(sums[row])))
    return problems


class GeneratorFunction(BaseModel, ABC):
    """A generator matrix function t -> Lambda(t) on a factored state space."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: ClassVar[str]

    space: FactoredStateSpace

    @abstractmethod
    def matrix_at(self, t: float) -> np.ndarray:
        """Evaluate Lambda(t) as a read-only (dim, dim) array."""

    @property
    def dim(self) -> int:
        return self.space.flat_size

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        """Times at which a piecewise-constant generator may change value."""
        return ()

    @property
    def is_piecewise_constant(self) -> bool:
        return True

    def rate_matrix(self, t: float) -> RateMatrix:
        """Evaluate Lambda(t) and validate it."""
        return RateMatrix(entries=self.matrix_at(t))

    def segments(self, s: float, t: float) -> List[Tuple[float, float, np.ndarray]]:
        """Split [s, t] into intervals of constant rates (right-continuous pieces)."""
        if not self.is_piecewise_constant:
            raise GeneratorError(f"{self.kind} generator has no constant segments")
        if t < s:
            raise ValueError(f"segment end {t} precedes start {s}")
        cuts = [s] + [b for b in self.breakpoints if s < b < t] + [t]
        return [(a, b, self.matrix_at(a)) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]

    def exit_rate_envelope(self, s: float, t: float, step: float = ENVELOPE_STEP) -> np.ndarray:
        """Per-state maximum of the total exit rate -Lambda_vv over [s, t]."""
        if self.is_piecewise_constant:
            pieces = self.segments(s, t) or [(s, s, self.matrix_at(s))]
            return np.max([-np.diag(m) for _, _, m in pieces], axis=0)
        times = np.append(np.arange(s, t, step), t)
        return np.max([-np.diag(self.matrix_at(float(u))) for u in times], axis=0)

    def max_exit_rate(self, s: float, t: float) -> float:
        return float(np.max(self.exit_rate_envelope(s, t), initial=0.0))


class ConstantGenerator(GeneratorFunction):
    """Time-homogeneous generator."""

    kind: ClassVar[str] = "constant"

    rates: np.ndarray

    @field_validator("rates", mode="before")
    @classmethod
    def freeze_array(cls, value: Any) -> np.ndarray:
        return frozen_array(value, 2)

    @model_validator(mode="after")
    def check_shape(self) -> "ConstantGenerator":
        expected = (self.space.flat_size, self.space.flat_size)
        if self.rates.shape != expected:
            raise GeneratorError(f"rate matrix shape {self.rates.shape} does not match space {expected}")
        return self

    def matrix_at(self, t: float) -> np.ndarray:
        return self.rates


class PiecewiseConstantGenerator(GeneratorFunction):
    """Right-continuous piecewise-constant generator: matrices[k] on [t_k, t_{k+1})."""

    kind: ClassVar[str] = "piecewise_constant"

    times: Tuple[float, ...] = Field(..., min_length=1)
    matrices: Tuple[np.ndarray, ...]

    @field_validator("matrices", mode="before")
    @classmethod
    def freeze_array(cls, value: Any) -> Tuple[np.ndarray, ...]:
        return tuple(frozen_array(m, 2) for m in value)

    @model_validator(mode="after")
    def check_segments(self) -> "PiecewiseConstantGenerator":
        if self.times[0] != 0.0:
            raise GeneratorError(f"first breakpoint must be 0, got {self.times[0]}")
        if any(b <= a for a, b in zip(self.times[:-1], self.times[1:])):
            raise GeneratorError(f"breakpoints must be strictly increasing, got {list(self.times)}")
        if len(self.matrices) != len(self.times):
            raise GeneratorError(
                f"{len(self.times)} breakpoints need {len(self.times)} matrices, got {len(self.matrices)}"
            )
        expected = (self.space.flat_size, self.space.flat_size)
        for k, matrix in enumerate(self.matrices):
            if matrix.shape != expected:
                raise GeneratorError(
                    f"segment {k} matrix shape {matrix.shape} does not match space {expected}"
                )
        return self

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return self.times

    def matrix_at(self, t: float) -> np.ndarray:
        if t < 0:
            raise ValueError(f"time must be nonnegative, got {t}")
        return self.matrices[bisect_right(self.times, t) - 1]


class FamilyGenerator(GeneratorFunction):
    """Generator from the named closed-form family registry."""

    kind: ClassVar[str] = "family"

    name: str
    params: Dict[str, float]

    @model_validator(mode="after")
    def check_family(self) -> "FamilyGenerator":
        from .families import get_family

        family = get_family(self.name)
        family.check_params(self.params)
        if self.space.shape != family.factor_sizes:
            raise GeneratorError(
                f"family '{self.name}' lives on factors of sizes {family.factor_sizes}, "
                f"space has {self.space.shape}"
            )
        return self

    @classmethod
    def create(
        cls, name: str, space: Optional[FactoredStateSpace] = None, **params: float
    ) -> "FamilyGenerator":
        """Build a family generator, on its default space unless one is given."""
        from .families import get_family

        if space is None:
            space = FactoredStateSpace.from_sizes(get_family(name).factor_sizes)
        return cls(space=space, name=name, params={k: float(v) for k, v in params.items()})

    @property
    def is_piecewise_constant(self) -> bool:
        from .families import get_family

        return get_family(self.name).time_homogeneous

    def closed_form_marginals(self) -> Tuple["FamilyGenerator", ...]:
        """Registered marginal families, one per factor; empty when none are known."""
        from .families import get_family

        return tuple(
            FamilyGenerator(space=self.space.factor_space(i), name=name, params=dict(self.params))
            for i, name in enumerate(get_family(self.name).marginals)
        )

    def matrix_at(self, t: float) -> np.ndarray:
        from .families import get_family

        if t < 0:
            raise ValueError(f"time must be nonnegative, got {t}")
        return frozen_array(get_family(self.name).builder(float(t), self.params), 2)


class Violation(BaseModel):
    """One breach of the generator invariants at a probe time."""

    time: float
    row: int
    column: Optional[int] = None
    kind: str
    magnitude: float
    row_label: str
    column_label: Optional[str] = None


class ValidationReport(BaseModel):
    """Outcome of validate_generator."""

    ok: bool
    probe_times: Tuple[float, ...]
    violations: List[Violation] = Field(default_factory=list)


def validate_generator(g: GeneratorFunction, probe_times: List[float]) -> ValidationReport:
    """Check off-diagonal nonnegativity and zero row sums at every probe time.

    Args:
        g: Generator function to check
        probe_times: Nonempty list of nonnegative times

    Returns:
        Report listing every offending entry with its magnitude
    """
    times = tuple(float(t) for t in probe_times)
    if not times:
        raise ValueError("probe_times must be nonempty")
    if any(t < 0 for t in times):
        raise ValueError(f"probe_times must be nonnegative, got {list(times)}")

    violations: List[Violation] = []
    for t in times:
        matrix = g.matrix_at(t)
        if matrix.shape != (g.dim, g.dim):
            raise GeneratorError(f"generator evaluates to shape {matrix.shape}, space needs {(g.dim, g.dim)}")
        for row, column, kind, magnitude in matrix_violations(matrix):
            violations.append(
                Violation(
                    time=t,
                    row=row,
                    column=column,
                    kind=kind,
                    magnitude=magnitude,
                    row_label=g.space.label(row),
                    column_label=None if column is None else g.space.label(column),
                )
            )

    if violations:
        logger.info("generator_invalid", violations=len(violations), first=violations[0].kind)
    return ValidationReport(ok=not violations, probe_times=times, violations=violations)


def jump_intensity(g: GeneratorFunction, v: State, w: State, t: float) -> float:
    """Return the jump rate lambda_w^v(t) from state v to state w."""
    source, target = g.space.to_flat(v), g.space.to_flat(w)
    if source == target:
        raise ValueError(f"jump intensity needs distinct states, got {g.space.label(source)} twice")
    return float(g.matrix_at(t)[source, target])

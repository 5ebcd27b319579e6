"""Structural operators on product spaces: the extension C^{i,*} and the tensor sum."""

from functools import reduce
from typing import Any, ClassVar, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .generator import (
    ConstantGenerator,
    GeneratorError,
    GeneratorFunction,
    PiecewiseConstantGenerator,
    frozen_array,
    validate_generator,
)
from .space import FactoredStateSpace

logger = structlog.get_logger()


class ExtensionMatrix(BaseModel):
    """Matrix form of (C^{i,*} f)(x) = f(x^i): one 1 per row, at column x^i."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    factor: int
    matrix: np.ndarray

    @field_validator("matrix", mode="before")
    @classmethod
    def freeze_matrix(cls, value: Any) -> np.ndarray:
        return frozen_array(value, 2)

    def apply(self, f: np.ndarray) -> np.ndarray:
        """Lift a function on X^i to a function on the product space."""
        return self.matrix @ np.asarray(f, dtype=float)


def extension_matrix(space: FactoredStateSpace, i: int) -> ExtensionMatrix:
    """Build C^{i,*} for factor ``i`` (0-based)."""
    space.check_factor(i)
    matrix = np.zeros((space.flat_size, space.shape[i]))
    matrix[np.arange(space.flat_size), space.coordinates[:, i]] = 1.0
    return ExtensionMatrix(factor=i, matrix=matrix)


def kron_sum(matrices: Tuple[np.ndarray, ...]) -> np.ndarray:
    """Sum over i of I x ... x A_i x ... x I, first factor slowest."""
    sizes = [m.shape[0] for m in matrices]
    total = np.zeros((int(np.prod(sizes)),) * 2)
    for i, matrix in enumerate(matrices):
        parts = [np.eye(n) for n in sizes]
        parts[i] = matrix
        total += reduce(np.kron, parts)
    return total


class TensorSumGenerator(GeneratorFunction):
    """Independent coupling of time-dependent component generators."""

    kind: ClassVar[str] = "tensor_sum"

    components: Tuple[GeneratorFunction, ...]

    @model_validator(mode="after")
    def check_components(self) -> "TensorSumGenerator":
        expected = tuple(size for c in self.components for size in c.space.shape)
        if expected != self.space.shape:
            raise GeneratorError(f"component shapes {expected} do not match space {self.space.shape}")
        return self

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return tuple(sorted({b for c in self.components for b in c.breakpoints}))

    @property
    def is_piecewise_constant(self) -> bool:
        return all(c.is_piecewise_constant for c in self.components)

    def matrix_at(self, t: float) -> np.ndarray:
        return frozen_array(kron_sum(tuple(c.matrix_at(t) for c in self.components)), 2)


def tensor_sum(*generators: GeneratorFunction) -> GeneratorFunction:
    """Independent joint generator I x L2 + L1 x I (generalised to N components).

    Single-coordinate jumps carry the component rate, simultaneous jumps carry 0 and the
    diagonal is the sum of the component diagonals.

    Args:
        generators: Component generators, first one slowest in the flat order

    Returns:
        Constant or piecewise-constant generator when every input is, otherwise a
        TensorSumGenerator evaluated pointwise
    """
    if len(generators) < 2:
        raise ValueError("tensor_sum needs at least two component generators")
    for g in generators:
        report = validate_generator(g, [0.0, *g.breakpoints])
        if not report.ok:
            raise GeneratorError(f"component generator is invalid: {report.violations[0].kind}")

    space = FactoredStateSpace.product(*(g.space for g in generators))
    if all(isinstance(g, ConstantGenerator) for g in generators):
        return ConstantGenerator(space=space, rates=kron_sum(tuple(g.rates for g in generators)))

    coupled = TensorSumGenerator(space=space, components=tuple(generators))
    if coupled.is_piecewise_constant:
        times = (0.0,) + tuple(b for b in coupled.breakpoints if b > 0.0)
        logger.debug("tensor_sum_materialized", segments=len(times))
        if len(times) == 1:
            return ConstantGenerator(space=space, rates=coupled.matrix_at(0.0))
        return PiecewiseConstantGenerator(
            space=space, times=times, matrices=tuple(coupled.matrix_at(t) for t in times)
        )
    return coupled

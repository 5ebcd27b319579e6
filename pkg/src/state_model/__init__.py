"""State spaces, distributions, generator functions and structural operators."""

from .distribution import Distribution
from .families import FAMILIES, GeneratorFamily, get_family
from .generator import (
    ConstantGenerator,
    FamilyGenerator,
    GeneratorError,
    GeneratorFunction,
    PiecewiseConstantGenerator,
    RateMatrix,
    ValidationReport,
    Violation,
    jump_intensity,
    validate_generator,
)
from .operators import ExtensionMatrix, TensorSumGenerator, extension_matrix, kron_sum, tensor_sum
from .space import FactoredStateSpace, Factor, State

__all__ = [
    # Spaces and laws
    "Factor",
    "FactoredStateSpace",
    "State",
    "Distribution",
    # Generators
    "RateMatrix",
    "GeneratorFunction",
    "ConstantGenerator",
    "PiecewiseConstantGenerator",
    "FamilyGenerator",
    "TensorSumGenerator",
    "GeneratorError",
    "GeneratorFamily",
    "FAMILIES",
    "get_family",
    # Operations
    "validate_generator",
    "ValidationReport",
    "Violation",
    "jump_intensity",
    "ExtensionMatrix",
    "extension_matrix",
    "kron_sum",
    "tensor_sum",
]

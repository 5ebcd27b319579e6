"""Shared fixtures: the closed-form example chains and small model-file helpers."""

import functools
import json
from pathlib import Path
from typing import Any, Callable, Dict, Tuple

import numpy as np
import pytest

from state_model import (
    ConstantGenerator,
    Distribution,
    FactoredStateSpace,
    FamilyGenerator,
    tensor_sum,
)
from utils import setup_logging

COMMON_SHOCK = {"a": 0.5, "b": 0.3, "c": 0.2}
RECOVERING = {"a": 0.4, "b": 0.3, "c": 0.2, "d": 0.25, "e": 0.15, "f": 0.1, "g": 0.35}


@pytest.fixture(scope="session", autouse=True)
def quiet_logging():
    setup_logging(log_level="WARNING", log_format="console")


@pytest.fixture
def common_shock() -> FamilyGenerator:
    return FamilyGenerator.create("common_shock", **COMMON_SHOCK)


@pytest.fixture
def first_jump_shock() -> FamilyGenerator:
    return FamilyGenerator.create("first_jump_shock", **COMMON_SHOCK)


@pytest.fixture
def recovering_shock() -> FamilyGenerator:
    return FamilyGenerator.create("recovering_shock", **RECOVERING)


@pytest.fixture
def binary_pair() -> FactoredStateSpace:
    return FactoredStateSpace.from_sizes([2, 2])


@pytest.fixture
def origin(binary_pair) -> Distribution:
    return Distribution.point_mass(binary_pair, (0, 0))


def random_generator(rng: np.random.Generator, dim: int, scale: float = 2.0) -> np.ndarray:
    """Dense generator with off-diagonal rates uniform on [0, scale)."""
    rates = rng.uniform(0.0, scale, size=(dim, dim))
    np.fill_diagonal(rates, 0.0)
    np.fill_diagonal(rates, -rates.sum(axis=1))
    return rates


def independent_pair(rng: np.random.Generator, sizes: Tuple[int, ...] = (2, 3)):
    """Tensor sum of random constant chains started from a random product law.

    Returns the joint generator, the components, their initial laws and the joint initial law.
    """
    components = [
        ConstantGenerator(
            space=FactoredStateSpace.from_sizes([size], names=[f"X{k + 1}"]),
            rates=random_generator(rng, size),
        )
        for k, size in enumerate(sizes)
    ]
    laws = [rng.dirichlet(np.ones(size)) for size in sizes]
    g = tensor_sum(*components)
    weights = functools.reduce(np.kron, laws)
    return g, components, laws, Distribution(space=g.space, weights=weights)


def absorbing_matrix(rate: float) -> list:
    return [[-rate, rate], [0.0, 0.0]]


def binary_factor(name: str) -> FactoredStateSpace:
    return FactoredStateSpace.from_sizes([2], names=[name])


@pytest.fixture
def write_model(tmp_path: Path) -> Callable[..., str]:
    """Write a model document into tmp_path and return its path."""

    def write(name: str, document: Dict[str, Any]) -> str:
        path = tmp_path / name
        path.write_text(json.dumps(document, indent=2), encoding="utf-8")
        return str(path)

    return write


def family_model(name: str, params: Dict[str, float], factors: int = 2) -> Dict[str, Any]:
    return {
        "factors": [{"name": f"X{k + 1}", "states": ["0", "1"]} for k in range(factors)],
        "generator": {"kind": "family", "name": name, "params": params},
    }


def constant_model(name: str, matrix: list) -> Dict[str, Any]:
    return {
        "factors": [{"name": name, "states": ["0", "1"]}],
        "generator": {"kind": "constant", "matrix": matrix},
    }

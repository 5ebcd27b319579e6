"""Registry of closed-form generator families.

Every family is a pure function of time and a small parameter set, so evaluation stays
exact and auditable.

Binary factors use state 0 = "alive" and 1 = "absorbed/defaulted". Joint families live on
two binary factors with flat order (0,0), (0,1), (1,0), (1,1).
"""

import math
from typing import Callable, Dict, Mapping, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .generator import GeneratorError

Builder = Callable[[float, Mapping[str, float]], np.ndarray]


class GeneratorFamily(BaseModel):
    """A registered closed-form generator family."""

    model_config = ConfigDict(frozen=True)

    name: str
    parameters: Tuple[str, ...]
    positive: Tuple[str, ...] = ()
    factor_sizes: Tuple[int, ...]
    time_homogeneous: bool
    description: str
    builder: Builder
    marginals: Tuple[str, ...] = Field(
        default=(), description="Families giving the law of each factor, sharing this family's parameters"
    )
    marginals_need_origin: bool = Field(
        default=False, description="Marginal closed forms hold only when started from flat state 0"
    )

    def check_params(self, params: Mapping[str, float]) -> None:
        """Reject missing, unknown, non-finite or out-of-range parameters."""
        missing = [p for p in self.parameters if p not in params]
        unknown = [p for p in params if p not in self.parameters]
        if missing or unknown:
            raise GeneratorError(
                f"family '{self.name}' takes parameters {list(self.parameters)}; "
                f"missing {missing}, unknown {unknown}"
            )
        for key in self.parameters:
            value = float(params[key])
            if not math.isfinite(value) or value < 0:
                raise GeneratorError(
                    f"family '{self.name}': parameter {key} must be finite and >= 0, got {value}"
                )
            if key in self.positive and value <= 0:
                raise GeneratorError(f"family '{self.name}': parameter {key} must be > 0, got {value}")


def common_shock(t: float, p: Mapping[str, float]) -> np.ndarray:
    """Idiosyncratic rates a, b plus a common shock c hitting both names at once."""
    a, b, c = p["a"], p["b"], p["c"]
    return np.array(
        [
            [-(a + b + c), b, a, c],
            [0.0, -(a + c), 0.0, a + c],
            [0.0, 0.0, -(b + c), b + c],
            [0.0, 0.0, 0.0, 0.0],
        ]
    )


def absorbing(rate: float) -> np.ndarray:
    return np.array([[-rate, rate], [0.0, 0.0]])


def common_shock_marginal_1(t: float, p: Mapping[str, float]) -> np.ndarray:
    return absorbing(p["a"] + p["c"])


def common_shock_marginal_2(t: float, p: Mapping[str, float]) -> np.ndarray:
    return absorbing(p["b"] + p["c"])


def first_jump_shock(t: float, p: Mapping[str, float]) -> np.ndarray:
    """Common shock c available only before either component has jumped."""
    a, b, c = p["a"], p["b"], p["c"]
    return np.array(
        [
            [-(a + b + c), b, a, c],
            [0.0, -a, 0.0, a],
            [0.0, 0.0, -b, b],
            [0.0, 0.0, 0.0, 0.0],
        ]
    )


def shock_compensation(t: float, own: float, other: float, c: float) -> float:
    """Rate lost by one component of ``first_jump_shock`` through conditioning on itself.

    Equals c * P(other jumped alone | own still 0) when started from (0,0); written in a
    form that cannot underflow to 0/0 for large t.
    """
    rate = other + c
    share = other / rate if rate > 0 else 0.0
    alone = -math.expm1(-rate * t) * share
    return c * alone / (math.exp(-rate * t) + alone)


def first_jump_shock_marginal_1(t: float, p: Mapping[str, float]) -> np.ndarray:
    return absorbing(p["a"] + p["c"] - shock_compensation(t, p["a"], p["b"], p["c"]))


def first_jump_shock_marginal_2(t: float, p: Mapping[str, float]) -> np.ndarray:
    return absorbing(p["b"] + p["c"] - shock_compensation(t, p["b"], p["a"], p["c"]))


def recovering_shock(t: float, p: Mapping[str, float]) -> np.ndarray:
    """Chain whose second component can recover (g) once the first has jumped."""
    a, b, c, d, e, f, g = (p[k] for k in "abcdefg")
    return np.array(
        [
            [-(a + b + c), b, a, c],
            [0.0, -(d + e), d, e],
            [0.0, 0.0, -f, f],
            [0.0, 0.0, g, -g],
        ]
    )


FAMILIES: Dict[str, GeneratorFamily] = {
    family.name: family
    for family in (
        GeneratorFamily(
            name="common_shock",
            parameters=("a", "b", "c"),
            factor_sizes=(2, 2),
            time_homogeneous=True,
            description="two absorbing names with a simultaneous-default shock; strong copula",
            builder=common_shock,
            marginals=("common_shock_marginal_1", "common_shock_marginal_2"),
        ),
        GeneratorFamily(
            name="common_shock_marginal_1",
            parameters=("a", "b", "c"),
            factor_sizes=(2,),
            time_homogeneous=True,
            description="first name of common_shock: absorbing at rate a + c",
            builder=common_shock_marginal_1,
        ),
        GeneratorFamily(
            name="common_shock_marginal_2",
            parameters=("a", "b", "c"),
            factor_sizes=(2,),
            time_homogeneous=True,
            description="second name of common_shock: absorbing at rate b + c",
            builder=common_shock_marginal_2,
        ),
        GeneratorFamily(
            name="first_jump_shock",
            parameters=("a", "b", "c"),
            positive=("c",),
            factor_sizes=(2, 2),
            time_homogeneous=True,
            description="shock c only before the first jump; weak-only copula",
            builder=first_jump_shock,
            marginals=("first_jump_shock_marginal_1", "first_jump_shock_marginal_2"),
            marginals_need_origin=True,
        ),
        GeneratorFamily(
            name="first_jump_shock_marginal_1",
            parameters=("a", "b", "c"),
            factor_sizes=(2,),
            time_homogeneous=False,
            description="law of the first component of first_jump_shock started at (0,0)",
            builder=first_jump_shock_marginal_1,
        ),
        GeneratorFamily(
            name="first_jump_shock_marginal_2",
            parameters=("a", "b", "c"),
            factor_sizes=(2,),
            time_homogeneous=False,
            description="law of the second component of first_jump_shock started at (0,0)",
            builder=first_jump_shock_marginal_2,
        ),
        GeneratorFamily(
            name="recovering_shock",
            parameters=tuple("abcdefg"),
            factor_sizes=(2, 2),
            time_homogeneous=True,
            description="second component recovers after the first jumps; not weakly consistent",
            builder=recovering_shock,
        ),
    )
}


def get_family(name: str) -> GeneratorFamily:
    """Look up a registered family by name."""
    try:
        return FAMILIES[name]
    except KeyError:
        raise GeneratorError(f"unknown generator family '{name}'; known: {sorted(FAMILIES)}") from None

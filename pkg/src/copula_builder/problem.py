"""Copula problems, objectives and solutions."""

from enum import Enum
from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from state_model import Factor, FactoredStateSpace, GeneratorFunction


class CopulaSolverError(RuntimeError):
    """The LP solver proved a marginal constraint system infeasible.

    The independent coupling is always feasible, so this signals a solver fault.
    """


class ObjectiveKind(str, Enum):
    INDEPENDENT = "independent"
    MAXIMIZE_COMMON_JUMPS = "maximize_common_jumps"
    MINIMIZE_COMMON_JUMPS = "minimize_common_jumps"
    MAXIMIZE_WEIGHTED = "maximize_weighted"


class SolverStatus(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE_FALLBACK = "feasible_fallback"
    INFEASIBLE_REPORT = "infeasible_report"


class CopulaObjective(BaseModel):
    """Which of the many strong copulae to pick.

    ``weights`` maps (source, target) flat indices of simultaneous jumps to nonnegative
    weights and is only read by maximize_weighted.
    """

    model_config = ConfigDict(frozen=True)

    kind: ObjectiveKind = ObjectiveKind.INDEPENDENT
    weights: Dict[Tuple[int, int], float] = Field(default_factory=dict)

    @field_validator("weights")
    @classmethod
    def check_weights(cls, weights: Dict[Tuple[int, int], float]) -> Dict[Tuple[int, int], float]:
        for pair, weight in weights.items():
            if not np.isfinite(weight) or weight < 0:
                raise ValueError(f"objective weight for {pair} must be finite and >= 0, got {weight}")
        return weights

    @model_validator(mode="after")
    def check_kind(self) -> "CopulaObjective":
        if self.kind is ObjectiveKind.MAXIMIZE_WEIGHTED and not self.weights:
            raise ValueError("maximize_weighted needs at least one weight")
        return self


class CopulaProblem(BaseModel):
    """Marginal generators (one single-factor generator per component) plus an objective."""

    model_config = ConfigDict(frozen=True)

    marginals: Tuple[GeneratorFunction, ...] = Field(..., min_length=2)
    objective: CopulaObjective = Field(default_factory=CopulaObjective)
    probe_times: Tuple[float, ...] = (0.0,)

    @field_validator("marginals")
    @classmethod
    def check_marginals(cls, marginals: Tuple[GeneratorFunction, ...]) -> Tuple[GeneratorFunction, ...]:
        for k, marginal in enumerate(marginals):
            if marginal.space.n_factors != 1:
                raise ValueError(f"marginal {k} must live on a single factor, has {marginal.space.n_factors}")
        return marginals

    @field_validator("probe_times")
    @classmethod
    def check_probe_times(cls, times: Tuple[float, ...]) -> Tuple[float, ...]:
        if not times or any(t < 0 for t in times):
            raise ValueError(f"probe_times must be a nonempty tuple of nonnegative times, got {list(times)}")
        return times

    @property
    def factors(self) -> Tuple[Factor, ...]:
        """Marginal factors, renamed X1..XN when their names collide."""
        factors = tuple(m.space.factors[0] for m in self.marginals)
        if len({f.name for f in factors}) == len(factors):
            return factors
        return tuple(Factor(name=f"X{k + 1}", states=f.states) for k, f in enumerate(factors))

    @property
    def joint_space(self) -> FactoredStateSpace:
        return FactoredStateSpace(factors=self.factors)

    def component(self, i: int) -> GeneratorFunction:
        """Marginal i on its (possibly renamed) factor space."""
        space = FactoredStateSpace(factors=(self.factors[i],))
        return self.marginals[i].model_copy(update={"space": space})

    def solve_times(self) -> List[float]:
        """Exact breakpoints for piecewise-constant marginals, else 0 plus the probe times."""
        if all(m.is_piecewise_constant for m in self.marginals):
            return sorted({0.0, *(b for m in self.marginals for b in m.breakpoints)})
        return sorted({0.0, *self.probe_times})


class CopulaSolution(BaseModel):
    """Joint generator solving the marginal constraint system."""

    generator: GeneratorFunction
    times: Tuple[float, ...]
    objective_values: Tuple[float, ...]
    residual: float
    status: SolverStatus

    @property
    def objective_value(self) -> float:
        return self.objective_values[0]

"""Probability distributions over the flat states of a space."""

from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .generator import frozen_array
from .space import FactoredStateSpace, State

WEIGHT_TOLERANCE = 1e-12


class Distribution(BaseModel):
    """Nonnegative weights per flat state summing to one."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    space: FactoredStateSpace
    weights: np.ndarray

    @field_validator("weights", mode="before")
    @classmethod
    def freeze_weights(cls, value: Any) -> np.ndarray:
        return frozen_array(value, 1)

    @model_validator(mode="after")
    def check_weights(self) -> "Distribution":
        if self.weights.shape != (self.space.flat_size,):
            raise ValueError(f"{self.weights.shape[0]} weights for {self.space.flat_size} states")
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights < 0):
            raise ValueError("weights must be finite and nonnegative")
        total = float(self.weights.sum())
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError(f"weights sum to {total!r}, not 1")
        return self

    @classmethod
    def point_mass(cls, space: FactoredStateSpace, state: State = 0) -> "Distribution":
        weights = np.zeros(space.flat_size)
        weights[space.to_flat(state)] = 1.0
        return cls(space=space, weights=weights)

    @classmethod
    def normalized(cls, space: FactoredStateSpace, weights: np.ndarray) -> "Distribution":
        """Clip round-off negatives and renormalize (for propagated laws)."""
        clipped = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        return cls(space=space, weights=clipped / clipped.sum())

    @classmethod
    def product(cls, *marginals: "Distribution") -> "Distribution":
        """Independent joint law of several single-space distributions."""
        weights = np.ones(1)
        for marginal in marginals:
            weights = np.kron(weights, marginal.weights)
        space = FactoredStateSpace.product(*(m.space for m in marginals))
        return cls.normalized(space, weights)

    def marginal(self, i: int) -> np.ndarray:
        """Law of factor ``i`` as an array over its states."""
        self.space.check_factor(i)
        coords = self.space.coordinates[:, i]
        return np.bincount(coords, weights=self.weights, minlength=self.space.shape[i])

    def probability(self, state: State) -> float:
        return float(self.weights[self.space.to_flat(state)])

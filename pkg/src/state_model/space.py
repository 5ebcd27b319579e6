"""Finite product state spaces with a fixed flat indexing.

Flat indices are row-major with the first factor slowest, so two binary factors
enumerate as (0,0), (0,1), (1,0), (1,1).
"""

from functools import lru_cache
from typing import Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

State = Union[int, Tuple[int, ...]]


class Factor(BaseModel):
    """One coordinate of a product state space."""

    model_config = ConfigDict(frozen=True)

    name: str = Field(..., min_length=1, description="Factor name, e.g. 'X1'")
    states: Tuple[str, ...] = Field(..., description="Ordered state labels")

    @field_validator("states")
    @classmethod
    def check_states(cls, states: Tuple[str, ...]) -> Tuple[str, ...]:
        if len(states) < 2:
            raise ValueError("a factor needs at least 2 states")
        if len(set(states)) != len(states):
            raise ValueError(f"state labels must be distinct, got {list(states)}")
        return states

    @property
    def size(self) -> int:
        return len(self.states)


class FactoredStateSpace(BaseModel):
    """Product space X = X^1 x ... x X^N.

    A plain (unfactored) state space is a FactoredStateSpace with one factor.
    """

    model_config = ConfigDict(frozen=True)

    factors: Tuple[Factor, ...] = Field(..., min_length=1)

    @field_validator("factors")
    @classmethod
    def check_names(cls, factors: Tuple[Factor, ...]) -> Tuple[Factor, ...]:
        names = [f.name for f in factors]
        if len(set(names)) != len(names):
            raise ValueError(f"factor names must be distinct, got {names}")
        return factors

    @classmethod
    def from_sizes(cls, sizes: Sequence[int], names: Sequence[str] | None = None) -> "FactoredStateSpace":
        """Build a space whose factor i has states labelled '0'..'K_i - 1'."""
        names = list(names) if names is not None else [f"X{i + 1}" for i in range(len(sizes))]
        if len(names) != len(sizes):
            raise ValueError("one name per factor is required")
        return cls(
            factors=tuple(
                Factor(name=name, states=tuple(str(k) for k in range(size)))
                for name, size in zip(names, sizes)
            )
        )

    @classmethod
    def product(cls, *spaces: "FactoredStateSpace") -> "FactoredStateSpace":
        """Concatenate the factors of several spaces (first space slowest)."""
        return cls(factors=tuple(f for space in spaces for f in space.factors))

    @property
    def n_factors(self) -> int:
        return len(self.factors)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(f.size for f in self.factors)

    @property
    def flat_size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def coordinates(self) -> np.ndarray:
        """Integer array (flat_size, n_factors); row k is the tuple of flat state k."""
        return _coordinates(self.shape)

    def factor_space(self, i: int) -> "FactoredStateSpace":
        """Return the single-factor space of factor ``i``."""
        self.check_factor(i)
        return FactoredStateSpace(factors=(self.factors[i],))

    def check_factor(self, i: int) -> None:
        if not 0 <= i < self.n_factors:
            raise IndexError(f"factor index {i} out of range for {self.n_factors} factors")

    def to_flat(self, state: State) -> int:
        """Map a coordinate tuple (or a flat index) to its flat index."""
        if isinstance(state, (int, np.integer)):
            index = int(state)
            if not 0 <= index < self.flat_size:
                raise IndexError(f"flat index {index} out of range [0, {self.flat_size})")
            return index
        if len(state) != self.n_factors:
            raise ValueError(f"state {state} does not have {self.n_factors} coordinates")
        return int(np.ravel_multi_index(tuple(int(s) for s in state), self.shape))

    def to_tuple(self, index: int) -> Tuple[int, ...]:
        """Map a flat index to its coordinate tuple."""
        return tuple(int(c) for c in self.coordinates[self.to_flat(index)])

    def index_of_labels(self, labels: Sequence[str]) -> int:
        """Flat index of a state given by one label per factor."""
        if len(labels) != self.n_factors:
            raise ValueError(f"expected {self.n_factors} labels, got {list(labels)}")
        try:
            coords = tuple(f.states.index(str(lab)) for f, lab in zip(self.factors, labels))
        except ValueError as e:
            raise ValueError(f"unknown state labels {list(labels)}") from e
        return self.to_flat(coords)

    def label(self, state: State) -> str:
        """Human-readable label of a state, e.g. '(0,1)' or '0' for one factor."""
        coords = self.to_tuple(self.to_flat(state))
        labels = [f.states[c] for f, c in zip(self.factors, coords)]
        return labels[0] if self.n_factors == 1 else "(" + ",".join(labels) + ")"


@lru_cache(maxsize=64)
def _coordinates(shape: Tuple[int, ...]) -> np.ndarray:
    grid = np.indices(shape).reshape(len(shape), -1).T.copy()
    grid.setflags(write=False)
    return grid

"""Jump counts N_vw along a path and their compensators nu_vw."""

from typing import Any, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.integrate import quad_vec

from state_model import FactoredStateSpace, GeneratorError, GeneratorFunction, extension_matrix
from state_model.generator import frozen_array

from .simulation import SimulationPath

QUAD_EPSABS = 1e-11
QUAD_EPSREL = 1e-10


def off_diagonal_row(matrix: np.ndarray, v: int) -> np.ndarray:
    row = np.array(matrix[v], dtype=float)
    row[v] = 0.0
    return row


def integrated_rates(g: GeneratorFunction, v: int, a: float, b: float) -> np.ndarray:
    """Integral over [a, b] of the jump rates out of state v."""
    if b <= a:
        return np.zeros(g.dim)
    if g.is_piecewise_constant:
        total = np.zeros(g.dim)
        for lo, hi, matrix in g.segments(a, b):
            total += (hi - lo) * off_diagonal_row(matrix, v)
        return total
    value, _ = quad_vec(
        lambda s: off_diagonal_row(g.matrix_at(s), v), a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL
    )
    return np.asarray(value)


def accumulate(
    g: GeneratorFunction,
    jump_times: Sequence[float],
    states: Sequence[int],
    horizon: float,
    start: float,
    end: float,
    counts: np.ndarray,
    compensators: np.ndarray,
) -> None:
    """Add one trajectory's counts on (start, end] and compensators on [start, end] in place."""
    for k, t in enumerate(jump_times):
        if start < t <= end:
            counts[states[k], states[k + 1]] += 1
    bounds = (0.0, *jump_times, horizon)
    for k, state in enumerate(states):
        lo, hi = max(bounds[k], start), min(bounds[k + 1], end)
        if hi > lo:
            compensators[state] += integrated_rates(g, state, lo, hi)


def component_matrix(space: FactoredStateSpace, joint: np.ndarray, i: int) -> np.ndarray:
    """Aggregate a joint (v, w) table into factor i's (x, y) table, x != y."""
    extension = extension_matrix(space, i).matrix
    aggregated = extension.T @ joint @ extension
    np.fill_diagonal(aggregated, 0.0)
    return aggregated


class CountingStats(BaseModel):
    """N_vw and nu_vw over a time window of one path (diagonals are zero)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    space: FactoredStateSpace
    start: float
    end: float
    counts: np.ndarray
    compensators: np.ndarray

    @field_validator("counts", mode="before")
    @classmethod
    def freeze_counts(cls, value: Any) -> np.ndarray:
        array = np.array(value, dtype=np.int64)
        array.setflags(write=False)
        return array

    @field_validator("compensators", mode="before")
    @classmethod
    def freeze_compensators(cls, value: Any) -> np.ndarray:
        return frozen_array(value, 2)

    @model_validator(mode="after")
    def check_tables(self) -> "CountingStats":
        n = self.space.flat_size
        if self.counts.shape != (n, n) or self.compensators.shape != (n, n):
            raise ValueError(f"count and compensator tables must be ({n}, {n})")
        if np.any(self.counts < 0) or np.any(self.compensators < 0):
            raise ValueError("counts and compensators must be nonnegative")
        return self

    @property
    def total_jumps(self) -> int:
        return int(self.counts.sum())

    @property
    def residuals(self) -> np.ndarray:
        return self.counts - self.compensators

    def component_counts(self, i: int) -> np.ndarray:
        """N^i_{x y}: jumps of factor i from x to y, summed over the other coordinates."""
        return component_matrix(self.space, self.counts.astype(float), i).astype(np.int64)

    def component_compensators(self, i: int) -> np.ndarray:
        """nu^i_{x y}, the compensator of N^i_{x y}."""
        return component_matrix(self.space, self.compensators, i)


def counting_stats(
    path: SimulationPath, g: GeneratorFunction, start: float = 0.0, end: Optional[float] = None
) -> CountingStats:
    """Count the path's jumps per ordered pair and integrate the matching compensators.

    Compensators are exact per constant segment and computed by adaptive quadrature
    (quad_vec) for time-dependent families.

    Args:
        path: Simulated trajectory
        g: Generator whose rates define the compensator (normally the simulating one)
        start: Window start
        end: Window end (defaults to the path horizon)
    """
    if path.space.shape != g.space.shape:
        raise GeneratorError(f"path lives on shape {path.space.shape}, generator on {g.space.shape}")
    end = path.horizon if end is None else end
    if not 0.0 <= start <= end <= path.horizon:
        raise ValueError(f"window [{start}, {end}] must lie inside [0, {path.horizon}]")
    n = g.dim
    counts = np.zeros((n, n), dtype=np.int64)
    compensators = np.zeros((n, n))
    accumulate(g, path.jump_times, path.states, path.horizon, start, end, counts, compensators)
    return CountingStats(space=g.space, start=start, end=end, counts=counts, compensators=compensators)

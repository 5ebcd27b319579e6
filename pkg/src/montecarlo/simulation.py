"""Seeded path simulation of continuous-time Markov chains."""

from bisect import bisect_right
from typing import Iterator, List, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator

from config import settings
from state_model import Distribution, FactoredStateSpace, GeneratorError, GeneratorFunction
from state_model.generator import ENVELOPE_STEP, matrix_violations
from utils import fan_out

from .rng import chunks, path_rng

logger = structlog.get_logger()

ENVELOPE_SAFETY = 1.01

Trajectory = Tuple[List[float], List[int]]


class SimulationPath(BaseModel):
    """Right-continuous trajectory: states[k] holds on [jump_times[k-1], jump_times[k])."""

    model_config = ConfigDict(frozen=True)

    space: FactoredStateSpace
    horizon: float = Field(..., gt=0)
    jump_times: Tuple[float, ...]
    states: Tuple[int, ...]

    @model_validator(mode="after")
    def check_trajectory(self) -> "SimulationPath":
        if len(self.states) != len(self.jump_times) + 1:
            raise ValueError("a path needs exactly one more state than jumps")
        times = self.jump_times
        if any(t <= 0 or t > self.horizon for t in times):
            raise ValueError("jump times must lie in (0, horizon]")
        if any(b <= a for a, b in zip(times[:-1], times[1:])):
            raise ValueError("jump times must be strictly increasing")
        if any(a == b for a, b in zip(self.states[:-1], self.states[1:])):
            raise ValueError("consecutive states must differ")
        if any(not 0 <= s < self.space.flat_size for s in self.states):
            raise ValueError("state index out of range")
        return self

    @property
    def n_jumps(self) -> int:
        return len(self.jump_times)

    def state_at(self, t: float) -> int:
        if not 0 <= t <= self.horizon:
            raise ValueError(f"time {t} outside [0, {self.horizon}]")
        return self.states[bisect_right(self.jump_times, t)]

    def sojourns(self) -> Iterator[Tuple[float, float, int]]:
        """Yield (entry time, exit time, state) up to the horizon."""
        bounds = (0.0, *self.jump_times, self.horizon)
        for k, state in enumerate(self.states):
            yield bounds[k], bounds[k + 1], state


def pick(cumulative: np.ndarray, rng: np.random.Generator) -> int:
    """Draw an index with probability proportional to the increments of ``cumulative``."""
    index = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    return min(index, len(cumulative) - 1)


def jump_table(matrix: np.ndarray) -> np.ndarray:
    """Row-wise cumulative off-diagonal rates."""
    off = np.array(matrix, dtype=float)
    np.fill_diagonal(off, 0.0)
    return np.cumsum(off, axis=1)


class PathSampler:
    """Prepared sampler for one generator and horizon, shareable across threads.

    Piecewise-constant generators are sampled exactly (holding times redrawn at each
    segment boundary); time-dependent families by thinning against a per-state exit-rate
    envelope scanned on a 1e-3 grid and inflated by 1%.
    """

    def __init__(self, g: GeneratorFunction, horizon: float):
        if horizon <= 0:
            raise ValueError(f"horizon must be positive, got {horizon}")
        self.g = g
        self.horizon = float(horizon)
        self.exact = g.is_piecewise_constant
        if self.exact:
            self.pieces = []
            for a, b, matrix in g.segments(0.0, self.horizon):
                problems = matrix_violations(matrix)
                if problems:
                    raise GeneratorError(f"cannot simulate an invalid generator: {problems[0][2]} at t={a}")
                self.pieces.append((b, -np.diag(matrix), jump_table(matrix)))
        else:
            envelope = g.exit_rate_envelope(0.0, self.horizon, ENVELOPE_STEP) * ENVELOPE_SAFETY
            if not np.all(np.isfinite(envelope)):
                raise GeneratorError("exit-rate envelope is unbounded on the simulation horizon")
            self.envelope = envelope

    def sample(self, initial: np.ndarray, rng: np.random.Generator) -> Trajectory:
        """Draw one trajectory; ``initial`` is the cumulative initial law."""
        state = pick(initial, rng)
        if self.exact:
            return self.sample_exact(state, rng)
        return self.sample_thinned(state, rng)

    def sample_exact(self, state: int, rng: np.random.Generator) -> Trajectory:
        times: List[float] = []
        states = [state]
        t = 0.0
        for end, exits, table in self.pieces:
            while exits[state] > 0:
                t += rng.exponential(1.0 / exits[state])
                if t >= end:
                    break
                state = pick(table[state], rng)
                times.append(t)
                states.append(state)
            t = end
        return times, states

    def sample_thinned(self, state: int, rng: np.random.Generator) -> Trajectory:
        times: List[float] = []
        states = [state]
        t = 0.0
        while self.envelope[state] > 0:
            bound = self.envelope[state]
            t += rng.exponential(1.0 / bound)
            if t > self.horizon:
                break
            matrix = self.g.matrix_at(t)
            rate = -matrix[state, state]
            if rate > bound:
                raise GeneratorError(f"exit rate {rate:.6g} exceeds thinning envelope {bound:.6g} at t={t}")
            if rng.random() * bound < rate:
                state = pick(jump_table(matrix)[state], rng)
                times.append(t)
                states.append(state)
        return times, states


def initial_table(mu0: Distribution, g: GeneratorFunction) -> np.ndarray:
    if mu0.space.shape != g.space.shape:
        raise GeneratorError(f"distribution lives on shape {mu0.space.shape}, generator on {g.space.shape}")
    return np.cumsum(mu0.weights)


def simulate(
    g: GeneratorFunction, mu0: Distribution, T: float, seed: int, path_index: int = 0
) -> SimulationPath:
    """Simulate one path on [0, T]; deterministic in (seed, path_index)."""
    sampler = PathSampler(g, T)
    times, states = sampler.sample(initial_table(mu0, g), path_rng(seed, path_index))
    return SimulationPath(space=g.space, horizon=T, jump_times=tuple(times), states=tuple(states))


def simulate_batch(
    g: GeneratorFunction, mu0: Distribution, T: float, n_paths: int, seed: int
) -> List[SimulationPath]:
    """Simulate paths 0..n_paths-1, fanned out over workers, returned in path order."""
    if n_paths <= 0:
        raise ValueError(f"n_paths must be positive, got {n_paths}")
    sampler = PathSampler(g, T)
    initial = initial_table(mu0, g)

    def run(indices: range) -> List[SimulationPath]:
        paths = []
        for k in indices:
            times, states = sampler.sample(initial, path_rng(seed, k))
            paths.append(
                SimulationPath(
                    space=g.space, horizon=T, jump_times=tuple(times), states=tuple(states)
                )
            )
        return paths

    batches = fan_out(run, chunks(n_paths), settings.threads)
    logger.debug("paths_simulated", n_paths=n_paths, seed=seed, exact=sampler.exact)
    return [path for batch in batches for path in batch]

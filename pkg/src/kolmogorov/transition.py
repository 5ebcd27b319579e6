"""Forward-equation transition matrices P(s, t) and distribution evolution."""

import math
from typing import Any, Dict, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.linalg import expm

from state_model import Distribution, FactoredStateSpace, GeneratorError, GeneratorFunction
from state_model.generator import frozen_array, matrix_violations

logger = structlog.get_logger()

ROW_SUM_TOLERANCE = 1e-9
ENTRY_SLACK = 1e-12
RK4_TARGET = 1e-9
RK4_MAX_STEP = 1e-3
RK4_MAX_HALVINGS = 8


class TransitionMatrix(BaseModel):
    """Row-stochastic P(s, t) with P[v, w] = P(X_t = w | X_s = v)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    space: FactoredStateSpace
    s: float
    t: float
    entries: np.ndarray

    @field_validator("entries", mode="before")
    @classmethod
    def freeze_entries(cls, value: Any) -> np.ndarray:
        return frozen_array(value, 2)

    @model_validator(mode="after")
    def check_stochastic(self) -> "TransitionMatrix":
        if self.t < self.s:
            raise ValueError(f"end time {self.t} precedes start time {self.s}")
        n = self.space.flat_size
        if self.entries.shape != (n, n):
            raise ValueError(f"transition matrix shape {self.entries.shape} does not match space ({n}, {n})")
        if np.any(self.entries < 0.0) or np.any(self.entries > 1.0):
            raise ValueError("transition probabilities must lie in [0, 1]")
        worst = float(np.max(np.abs(self.entries.sum(axis=1) - 1.0)))
        if worst > ROW_SUM_TOLERANCE:
            raise ValueError(f"transition rows sum to 1 only within {worst:.3g}")
        return self

    def probability(self, v: Any, w: Any) -> float:
        return float(self.entries[self.space.to_flat(v), self.space.to_flat(w)])


def check_times(s: float, t: float) -> None:
    if s < 0 or t < s:
        raise ValueError(f"need 0 <= s <= t, got s={s}, t={t}")


def check_same_space(mu0: Distribution, g: GeneratorFunction) -> None:
    if mu0.space.shape != g.space.shape:
        raise GeneratorError(f"distribution lives on shape {mu0.space.shape}, generator on {g.space.shape}")


def piecewise_exponential(g: GeneratorFunction, s: float, t: float) -> np.ndarray:
    """Ordered product of exp((b - a) Lambda_k) over the constant segments of [s, t]."""
    result = np.eye(g.dim)
    for a, b, matrix in g.segments(s, t):
        problems = matrix_violations(matrix)
        if problems:
            row, column, kind, magnitude = problems[0]
            raise GeneratorError(
                f"invalid generator at t={a}: {kind} at row {row}, column {column} ({magnitude:.3g})"
            )
        result = result @ expm((b - a) * matrix)
    return result


def rk4_propagate(g: GeneratorFunction, s: float, t: float, steps: int) -> np.ndarray:
    """Integrate dP/du = P Lambda(u) from P(s, s) = I with ``steps`` classical RK4 steps."""
    h = (t - s) / steps
    p = np.eye(g.dim)
    u = s
    for _ in range(steps):
        mid = g.matrix_at(u + 0.5 * h)
        k1 = p @ g.matrix_at(u)
        k2 = (p + 0.5 * h * k1) @ mid
        k3 = (p + 0.5 * h * k2) @ mid
        k4 = (p + h * k3) @ g.matrix_at(u + h)
        p = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        u += h
    return p


def integrate_family(g: GeneratorFunction, s: float, t: float) -> np.ndarray:
    """Fixed-step RK4 with step <= min(1e-3, 0.05 / rho), halved until two solves agree."""
    start_matrix = g.matrix_at(s)
    problems = matrix_violations(start_matrix)
    if problems:
        row, column, kind, magnitude = problems[0]
        raise GeneratorError(
            f"invalid generator at t={s}: {kind} at row {row}, column {column} ({magnitude:.3g})"
        )

    rho = g.max_exit_rate(s, t)
    step = RK4_MAX_STEP if rho <= 0 else min(RK4_MAX_STEP, 0.05 / rho)
    steps = max(1, math.ceil((t - s) / step))
    coarse = rk4_propagate(g, s, t, steps)
    for _ in range(RK4_MAX_HALVINGS):
        steps *= 2
        fine = rk4_propagate(g, s, t, steps)
        error = float(np.max(np.abs(fine - coarse)))
        if error <= RK4_TARGET:
            logger.debug("rk4_converged", s=s, t=t, steps=steps, error=error)
            return fine
        coarse = fine
    logger.warning("rk4_not_converged", s=s, t=t, steps=steps, error=error)
    return coarse


def transition_matrix(g: GeneratorFunction, s: float, t: float) -> TransitionMatrix:
    """Solve the forward equation dP/du = P Lambda(u) on [s, t].

    Constant and piecewise-constant generators (including time-homogeneous families) use
    one matrix exponential per segment; time-dependent families use the RK4 integrator.

    Args:
        g: Generator function
        s: Start time (>= 0)
        t: End time (>= s)

    Returns:
        The transition matrix P(s, t), clamped to [0, 1]
    """
    check_times(s, t)
    if t == s:
        return TransitionMatrix(space=g.space, s=s, t=t, entries=np.eye(g.dim))

    if g.is_piecewise_constant:
        raw = piecewise_exponential(g, s, t)
        method = "expm"
    else:
        raw = integrate_family(g, s, t)
        method = "rk4"

    excursion = max(float(-raw.min()), float(raw.max()) - 1.0, 0.0)
    if excursion > ENTRY_SLACK:
        logger.debug("transition_entries_clamped", method=method, excursion=excursion)
    return TransitionMatrix(space=g.space, s=s, t=t, entries=np.clip(raw, 0.0, 1.0))


def evolve(mu0: Distribution, g: GeneratorFunction, t: float) -> Distribution:
    """Return the law of X_t, i.e. mu0 P(0, t)."""
    check_same_space(mu0, g)
    p = transition_matrix(g, 0.0, t)
    return Distribution.normalized(mu0.space, mu0.weights @ p.entries)


class TransitionCache:
    """Memo of P(s, t) for one generator; filling it is idempotent."""

    def __init__(self, g: GeneratorFunction):
        self.g = g
        self._matrices: Dict[Tuple[float, float], TransitionMatrix] = {}

    def get(self, s: float, t: float) -> TransitionMatrix:
        key = (float(s), float(t))
        cached = self._matrices.get(key)
        if cached is None:
            cached = transition_matrix(self.g, *key)
            self._matrices[key] = cached
        return cached

    def __len__(self) -> int:
        return len(self._matrices)

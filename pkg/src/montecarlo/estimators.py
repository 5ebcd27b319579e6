"""Monte Carlo estimators: martingale residual z-test and empirical transition laws."""

from typing import List, Optional, Tuple, Union

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field

from config import settings
from state_model import Distribution, FactoredStateSpace, GeneratorError, GeneratorFunction
from utils import fan_out

from .counting import accumulate
from .rng import chunks, path_rng
from .simulation import PathSampler, initial_table

logger = structlog.get_logger()

Z_THRESHOLD = 4.0
MIN_RESIDUAL_PATHS = 1000


class PairResidual(BaseModel):
    """Mean of N_vw(T) - nu_vw(T) across paths with its standard error."""

    source: str
    target: str
    source_index: int
    target_index: int
    mean: float
    std_error: float
    z: float


class MartingaleResidualReport(BaseModel):
    horizon: float
    n_paths: int
    seed: int
    threshold: float
    pairs: List[PairResidual] = Field(default_factory=list)

    @property
    def max_abs_z(self) -> float:
        return max((abs(p.z) for p in self.pairs), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_abs_z <= self.threshold

    def pair(self, v: int, w: int) -> PairResidual:
        for entry in self.pairs:
            if entry.source_index == v and entry.target_index == w:
                return entry
        raise KeyError(f"no residual for pair ({v}, {w})")


def z_score(mean: float, std_error: float) -> float:
    if std_error > 0:
        return mean / std_error
    return 0.0 if mean == 0 else float(np.copysign(np.inf, mean))


def martingale_residual_test(
    g: GeneratorFunction,
    mu0: Distribution,
    T: float,
    n_paths: int,
    seed: int,
    compensator: Optional[GeneratorFunction] = None,
    threshold: float = Z_THRESHOLD,
) -> MartingaleResidualReport:
    """z-test that every N_vw(T) - nu_vw(T) has mean zero.

    Paths are simulated under ``g``; compensators use ``compensator`` when given (to
    measure the test's power against a wrong model), else ``g``. Sums are reduced in
    fixed path-index chunks, so the report does not depend on the worker count.

    Args:
        g: Simulating generator
        mu0: Initial law
        T: Horizon
        n_paths: Number of paths (>= 1000)
        seed: Base seed
        compensator: Generator defining nu (defaults to g)
        threshold: Largest acceptable |z|
    """
    if n_paths < MIN_RESIDUAL_PATHS:
        raise ValueError(f"martingale residual test needs at least {MIN_RESIDUAL_PATHS} paths, got {n_paths}")
    reference = compensator or g
    if reference.space.shape != g.space.shape:
        raise GeneratorError("compensator generator must live on the simulated space")
    sampler = PathSampler(g, T)
    initial = initial_table(mu0, g)
    n = g.dim

    def run(indices: range) -> Tuple[np.ndarray, np.ndarray]:
        total = np.zeros((n, n))
        squares = np.zeros((n, n))
        for k in indices:
            times, states = sampler.sample(initial, path_rng(seed, k))
            counts = np.zeros((n, n))
            nu = np.zeros((n, n))
            accumulate(reference, times, states, T, 0.0, T, counts, nu)
            residual = counts - nu
            total += residual
            squares += residual**2
        return total, squares

    partials = fan_out(run, chunks(n_paths), settings.threads)
    total = sum((p[0] for p in partials), np.zeros((n, n)))
    squares = sum((p[1] for p in partials), np.zeros((n, n)))
    mean = total / n_paths
    variance = np.clip((squares - n_paths * mean**2) / (n_paths - 1), 0.0, None)
    std_error = np.sqrt(variance / n_paths)

    space: FactoredStateSpace = g.space
    pairs = [
        PairResidual(
            source=space.label(v),
            target=space.label(w),
            source_index=v,
            target_index=w,
            mean=float(mean[v, w]),
            std_error=float(std_error[v, w]),
            z=z_score(float(mean[v, w]), float(std_error[v, w])),
        )
        for v in range(n)
        for w in range(n)
        if v != w
    ]
    report = MartingaleResidualReport(horizon=T, n_paths=n_paths, seed=seed, threshold=threshold, pairs=pairs)
    logger.info("martingale_residual_test", n_paths=n_paths, max_abs_z=report.max_abs_z, passed=report.passed)
    return report


class EmpiricalTransition(BaseModel):
    """Frequencies of X_t over simulated paths with binomial standard errors.

    ``frequencies`` is a vector over flat states (shape ``(space.flat_size,)``): the empirical
    counterpart of mu0 P(0, t), not a full transition matrix. Starting from a point mass
    it estimates one row of P(0, t).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    space: FactoredStateSpace
    time: float
    n_paths: int
    frequencies: np.ndarray
    std_errors: np.ndarray


def empirical_transition(
    g: GeneratorFunction, mu0: Distribution, t: float, n_paths: int, seed: int
) -> EmpiricalTransition:
    """Estimate the law of X_t under mu0 by simulation; t = 0 returns mu0 exactly.

    Returns a frequency vector over flat states, one entry per joint state.
    """
    if n_paths <= 0:
        raise ValueError(f"n_paths must be positive, got {n_paths}")
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    if t == 0:
        return EmpiricalTransition(
            space=g.space, time=t, n_paths=n_paths, frequencies=mu0.weights.copy(), std_errors=np.zeros(g.dim)
        )

    sampler = PathSampler(g, t)
    initial = initial_table(mu0, g)

    def run(indices: range) -> np.ndarray:
        hits = np.zeros(g.dim, dtype=np.int64)
        for k in indices:
            _, states = sampler.sample(initial, path_rng(seed, k))
            hits[states[-1]] += 1
        return hits

    hits = sum(fan_out(run, chunks(n_paths), settings.threads), np.zeros(g.dim, dtype=np.int64))
    frequencies = hits / n_paths
    return EmpiricalTransition(
        space=g.space,
        time=t,
        n_paths=n_paths,
        frequencies=frequencies,
        std_errors=np.sqrt(frequencies * (1.0 - frequencies) / n_paths),
    )


class EmpiricalComparison(BaseModel):
    """Per-state z-scores of empirical frequencies against expected probabilities."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    n_sigma: float
    expected: np.ndarray
    z_scores: np.ndarray

    @property
    def max_abs_z(self) -> float:
        return float(np.max(np.abs(self.z_scores), initial=0.0))

    @property
    def passed(self) -> bool:
        return self.max_abs_z <= self.n_sigma


def compare_empirical(
    empirical: EmpiricalTransition,
    expected: Union[Distribution, np.ndarray],
    n_sigma: float = Z_THRESHOLD,
) -> EmpiricalComparison:
    """Check each frequency against the forward-equation probability within n_sigma binomial sigmas.

    The band uses the expected probability p, sigma = sqrt(p (1 - p) / n); entries with
    p in {0, 1} must match exactly.
    """
    p = np.asarray(expected.weights if isinstance(expected, Distribution) else expected, dtype=float)
    if p.shape != empirical.frequencies.shape:
        raise ValueError(f"expected law has shape {p.shape}, empirical has {empirical.frequencies.shape}")
    sigma = np.sqrt(p * (1.0 - p) / empirical.n_paths)
    gap = empirical.frequencies - p
    z = np.array(
        [
            z_score(float(d), float(s)) if s > 0 else (0.0 if abs(d) < 1e-15 else np.inf)
            for d, s in zip(gap, sigma)
        ]
    )
    return EmpiricalComparison(n_sigma=n_sigma, expected=p, z_scores=z)

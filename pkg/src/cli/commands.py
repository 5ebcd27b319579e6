"""The validate, check, build and simulate commands."""

import time
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence

import numpy as np
from pydantic import Field, field_validator

from config import settings
from consistency import ConsistencyReport, check_consistency
from copula_builder import (
    CopulaObjective,
    CopulaProblem,
    CopulaSolution,
    ObjectiveKind,
    SolverStatus,
    build_strong_copula,
    verify_strong_copula,
)
from kolmogorov import evolve
from montecarlo import compare_empirical, empirical_transition, martingale_residual_test
from state_model import Distribution, GeneratorFunction, validate_generator

from .base_command import EXIT_FAIL, EXIT_PASS, BaseCommand, CommandInput, CommandOutput
from .model_file import LoadedModel, ModelFile, load_model
from .report import InputDigest, ReportFile


def default_grid(generators: Sequence[GeneratorFunction], breakpoints: bool = False) -> List[float]:
    """Log-spaced probe times in [min, max] (settings) scaled by 1 / max exit rate.

    With ``breakpoints`` the generators' breakpoints (and 0) are added, so that every
    constant segment is probed.
    """
    rate = max(g.max_exit_rate(0.0, settings.default_probe_max) for g in generators)
    scale = 1.0 / rate if rate > 0 else 1.0
    times = np.geomspace(settings.default_probe_min, settings.default_probe_max, settings.default_probe_count)
    grid = {float(t) * scale for t in times}
    if breakpoints:
        grid |= {0.0, *(b for g in generators for b in g.breakpoints)}
    return sorted(grid)


def finish(
    command: BaseCommand,
    input_data: CommandInput,
    report: ReportFile,
    lines: List[str],
) -> CommandOutput:
    """Write the report to --out (when given) and wrap it as the command output."""
    if input_data.out:
        report.write(input_data.out)
    command.log_execution("report_ready", exit_code=report.exit_code, out=input_data.out)
    return CommandOutput(
        success=True,
        exit_code=report.exit_code,
        message=report.summary,
        lines=lines,
        data=report.document(),
    )


def digests(models: Sequence[LoadedModel]) -> List[InputDigest]:
    return [InputDigest(path=m.source, sha256=m.digest) for m in models]


class ValidateInput(CommandInput):
    """Input for validating a model's generator."""

    model: str = Field(..., description="Path of the model file")
    grid: Optional[List[float]] = Field(default=None, description="Probe times (default: log-spaced grid)")


class ValidateCommand(BaseCommand):
    """Check that a model's generator is a valid rate matrix at every probe time."""

    def __init__(self):
        super().__init__(name="validate", description="Validate a model's generator on a probe grid")

    @property
    def input_model(self) -> type[CommandInput]:
        return ValidateInput

    def execute(self, input_data: ValidateInput) -> CommandOutput:
        try:
            self.log_execution("validate", model=input_data.model)
            started = time.perf_counter()
            model = load_model(input_data.model)
            g = model.generator
            times = input_data.grid or default_grid([g], breakpoints=True)
            result = validate_generator(g, times)
        except Exception as e:
            return self.handle_error(e, "validate")

        lines = [
            f"t={v.time:g} row {v.row_label}"
            + (f" column {v.column_label}" if v.column_label is not None else "")
            + f": {v.kind} ({v.magnitude:.6g})"
            for v in result.violations
        ]
        summary = (
            f"valid generator on {len(times)} probe times"
            if result.ok
            else f"invalid generator: {len(result.violations)} violation(s)"
        )
        report = ReportFile(
            command=input_data.command,
            inputs=digests([model]),
            exit_code=EXIT_PASS if result.ok else EXIT_FAIL,
            summary=summary,
            verdicts={"valid": result.ok},
            certificates=[v.model_dump() for v in result.violations],
            residuals={"probe_times": list(result.probe_times)},
        ).with_timing(total=time.perf_counter() - started)
        return finish(self, input_data, report, lines)


class CheckInput(CommandInput):
    """Input for auditing a joint model for Markovian consistency."""

    model: str = Field(..., description="Path of the model file")
    mode: Literal["strong", "weak", "both"] = Field(default="both", description="Which checks to run")
    grid: Optional[List[float]] = Field(default=None, description="Probe/grid times")
    depth: int = Field(default_factory=lambda: settings.default_event_depth, ge=1, le=3)
    factor: str = Field(default="all", description="1-based factor index or 'all'")

    @field_validator("factor")
    @classmethod
    def check_factor(cls, value: str) -> str:
        if value != "all" and not (value.isdigit() and int(value) >= 1):
            raise ValueError(f"factor must be a 1-based index or 'all', got '{value}'")
        return value


def verdict_lines(report: ConsistencyReport) -> List[str]:
    lines = []
    for f in report.factors:
        lines.append(f"{f.name}: {f.verdict.value} (immersion {f.immersion.value})")
        for c in f.certificates:
            lines.append(
                f"  {c.kind} at t={c.time:g}, {c.from_state}->{c.to_state}: "
                f"{c.left:.10g} [{c.left_context}] vs {c.right:.10g} [{c.right_context}], gap {c.gap:.3g}"
            )
        notes = [*(f.strong.notes if f.strong else []), *(f.weak.notes if f.weak else [])]
        lines.extend(f"  note: {n}" for n in notes)
    return lines


def residual_tables(report: ConsistencyReport) -> Dict[str, Any]:
    tables: Dict[str, Any] = {}
    for f in report.factors:
        if f.operator is not None:
            tables[f.name] = {
                "operator_condition": {
                    "passed": f.operator.passed,
                    "max_residual": f.operator.max_residual,
                    "times": list(f.operator.times),
                    "residuals": list(f.operator.residuals),
                }
            }
    return tables


class CheckCommand(BaseCommand):
    """Audit a joint generator for strong and weak Markovian consistency."""

    def __init__(self):
        super().__init__(name="check", description="Audit a model for strong/weak Markovian consistency")

    @property
    def input_model(self) -> type[CommandInput]:
        return CheckInput

    def execute(self, input_data: CheckInput) -> CommandOutput:
        try:
            self.log_execution(
                "check", model=input_data.model, mode=input_data.mode, factor=input_data.factor
            )
            started = time.perf_counter()
            model = load_model(input_data.model)
            g = model.generator
            factors = None
            if input_data.factor != "all":
                index = int(input_data.factor) - 1
                if index >= g.space.n_factors:
                    raise ValueError(
                        f"--factor {input_data.factor} out of range for {g.space.n_factors} factors"
                    )
                factors = [index]
            grid = input_data.grid or default_grid([g])
            result = check_consistency(g, model.initial, grid, input_data.mode, input_data.depth, factors)
        except Exception as e:
            return self.handle_error(e, "check")

        verdicts: Dict[str, Any] = {
            f.name: {"verdict": f.verdict.value, "immersion": f.immersion.value} for f in result.factors
        }
        if result.condition_m is not None:
            verdicts["condition_M"] = [bool(h) for h in result.condition_m.holds]
        report = ReportFile(
            command=input_data.command,
            inputs=digests([model]),
            exit_code=EXIT_PASS if result.passed else EXIT_FAIL,
            summary=f"mode {result.mode}: "
            + ", ".join(f"{f.name} {f.verdict.value}" for f in result.factors),
            verdicts=verdicts,
            certificates=[c.model_dump() for c in result.certificates],
            marginals={f.name: f.marginal.to_document() for f in result.factors if f.marginal is not None},
            residuals={
                "grid": list(result.grid),
                "event_depth": result.event_depth,
                **residual_tables(result),
            },
        ).with_timing(total=time.perf_counter() - started)
        return finish(self, input_data, report, verdict_lines(result))


class BuildInput(CommandInput):
    """Input for building a strong copula from marginal models."""

    marginals: List[str] = Field(..., min_length=2, description="Paths of single-factor marginal models")
    objective: ObjectiveKind = Field(default=ObjectiveKind.INDEPENDENT, description="Copula selection rule")
    grid: Optional[List[float]] = Field(default=None, description="Probe times for time-dependent marginals")
    model_out: Optional[str] = Field(default=None, description="Path of the emitted joint model")

    @field_validator("objective")
    @classmethod
    def check_objective(cls, value: ObjectiveKind) -> ObjectiveKind:
        if value is ObjectiveKind.MAXIMIZE_WEIGHTED:
            raise ValueError("maximize_weighted needs pair weights and is only available from the Python API")
        return value


def joint_initial(models: Sequence[LoadedModel], g: GeneratorFunction) -> Optional[Distribution]:
    """Independent product of the marginals' initial laws, or None when all use the default."""
    if all(m.document.initial is None for m in models):
        return None
    weights = np.ones(1)
    for m in models:
        weights = np.kron(weights, m.initial.weights)
    return Distribution.normalized(g.space, weights)


class BuildCommand(BaseCommand):
    """Solve for a joint generator with the given Markov marginals."""

    def __init__(self):
        super().__init__(name="build", description="Build a strong Markov copula from marginal models")

    @property
    def input_model(self) -> type[CommandInput]:
        return BuildInput

    def execute(self, input_data: BuildInput) -> CommandOutput:
        try:
            self.log_execution("build", marginals=input_data.marginals, objective=input_data.objective.value)
            started = time.perf_counter()
            models = [load_model(path) for path in input_data.marginals]
            marginals = tuple(m.generator for m in models)
            probe_times = tuple(input_data.grid or default_grid(marginals))
            problem = CopulaProblem(
                marginals=marginals,
                objective=CopulaObjective(kind=input_data.objective),
                probe_times=probe_times,
            )
            solution = build_strong_copula(problem)
            components = [problem.component(i) for i in range(len(marginals))]
            verification = verify_strong_copula(solution.generator, components, solution.times)
            document = ModelFile.from_model(solution.generator, joint_initial(models, solution.generator))
            text = document.dumps()
            if input_data.model_out:
                Path(input_data.model_out).write_text(text, encoding="utf-8")
        except Exception as e:
            return self.handle_error(e, "build")

        report = ReportFile(
            command=input_data.command,
            inputs=digests(models),
            exit_code=EXIT_PASS if verification.passed else EXIT_FAIL,
            summary=solution_summary(solution, verification.passed),
            verdicts={"status": solution.status.value, "marginals_reproduced": verification.passed},
            marginals={"model": document.model_dump(exclude_none=True)},
            residuals={
                "times": list(solution.times),
                "objective_values": list(solution.objective_values),
                "residual": solution.residual,
                "verification_residuals": list(verification.residuals),
            },
        ).with_timing(total=time.perf_counter() - started)
        lines = [f"t={t:g}: objective {v:.10g}" for t, v in zip(solution.times, solution.objective_values)]
        if not input_data.model_out:
            lines.extend(text.rstrip("\n").splitlines())
        return finish(self, input_data, report, lines)


def solution_summary(solution: CopulaSolution, reproduced: bool) -> str:
    status = solution.status.value
    if solution.status is SolverStatus.FEASIBLE_FALLBACK:
        status += " (independent coupling used where the LP was rejected)"
    outcome = "marginals reproduced" if reproduced else "marginal constraints violated"
    return f"{solution.generator.kind} copula, {status}, {outcome}, residual {solution.residual:.3g}"


class SimulateInput(CommandInput):
    """Input for Monte Carlo checks of a model."""

    model: str = Field(..., description="Path of the model file")
    t: float = Field(..., gt=0, description="Horizon")
    paths: int = Field(default_factory=lambda: settings.default_paths, ge=1, description="Number of paths")
    seed: int = Field(default_factory=lambda: settings.default_seed, ge=0, description="Base seed")
    report: Literal["stats", "empirical", "both"] = Field(default="stats", description="Which estimators")


class SimulateCommand(BaseCommand):
    """Simulate paths and test them against the model."""

    def __init__(self):
        super().__init__(
            name="simulate", description="Monte Carlo martingale residual and empirical-law checks"
        )

    @property
    def input_model(self) -> type[CommandInput]:
        return SimulateInput

    def execute(self, input_data: SimulateInput) -> CommandOutput:
        try:
            self.log_execution(
                "simulate", model=input_data.model, paths=input_data.paths, seed=input_data.seed
            )
            started = time.perf_counter()
            model = load_model(input_data.model)
            g, mu0 = model.generator, model.initial
            verdicts: Dict[str, Any] = {}
            residuals: Dict[str, Any] = {
                "horizon": input_data.t,
                "paths": input_data.paths,
                "seed": input_data.seed,
            }
            lines: List[str] = []

            if input_data.report in ("stats", "both"):
                stats = martingale_residual_test(g, mu0, input_data.t, input_data.paths, input_data.seed)
                verdicts["martingale_residuals"] = stats.passed
                residuals["martingale"] = {
                    "threshold": stats.threshold,
                    "max_abs_z": stats.max_abs_z,
                    "pairs": [p.model_dump() for p in stats.pairs],
                }
                lines.append(
                    f"martingale residuals: max |z| = {stats.max_abs_z:.3f} (threshold {stats.threshold:g})"
                )

            if input_data.report in ("empirical", "both"):
                empirical = empirical_transition(g, mu0, input_data.t, input_data.paths, input_data.seed)
                comparison = compare_empirical(empirical, evolve(mu0, g, input_data.t))
                verdicts["empirical_law"] = comparison.passed
                residuals["empirical"] = {
                    "states": [g.space.label(v) for v in range(g.dim)],
                    "frequencies": empirical.frequencies,
                    "std_errors": empirical.std_errors,
                    "expected": comparison.expected,
                    "z_scores": comparison.z_scores,
                }
                lines.append(f"empirical law at t={input_data.t:g}: max |z| = {comparison.max_abs_z:.3f}")
        except Exception as e:
            return self.handle_error(e, "simulate")

        passed = all(verdicts.values())
        report = ReportFile(
            command=input_data.command,
            inputs=digests([model]),
            exit_code=EXIT_PASS if passed else EXIT_FAIL,
            summary=f"{input_data.paths} paths to t={input_data.t:g}: "
            + ("consistent" if passed else "rejected"),
            verdicts=verdicts,
            residuals=residuals,
        ).with_timing(total=time.perf_counter() - started)
        return finish(self, input_data, report, lines)


COMMANDS = {
    command.name: command
    for command in (ValidateCommand(), CheckCommand(), BuildCommand(), SimulateCommand())
}

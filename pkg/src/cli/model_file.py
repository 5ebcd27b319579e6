"""JSON model documents: factors, optional initial law and a kind-tagged generator."""

import json
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Union

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from state_model import (
    ConstantGenerator,
    Distribution,
    Factor,
    FactoredStateSpace,
    FamilyGenerator,
    GeneratorError,
    GeneratorFunction,
    PiecewiseConstantGenerator,
    TensorSumGenerator,
)
from utils import dump_json, input_digest

logger = structlog.get_logger()

MODEL_FORMAT = "markov-copula/model"


class ModelParseError(ValueError):
    """A model document could not be read; the message carries its position."""

    def __init__(self, source: str, position: str, reason: str):
        self.source = source
        self.position = position
        self.reason = reason
        super().__init__(f"{source}: {position}: {reason}")


class FactorDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    states: List[str] = Field(..., min_length=1)


class ConstantDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["constant"] = "constant"
    matrix: List[List[float]]


class PiecewiseDocument(BaseModel):
    """Segment k holds matrices[k] on [breakpoints[k], breakpoints[k+1])."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["piecewise_constant"] = "piecewise_constant"
    breakpoints: List[float] = Field(..., min_length=1)
    matrices: List[List[List[float]]]


class FamilyDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["family"] = "family"
    name: str
    params: Dict[str, float] = Field(default_factory=dict)


ComponentGenerator = Annotated[
    Union[ConstantDocument, PiecewiseDocument, FamilyDocument], Field(discriminator="kind")
]


class ComponentDocument(BaseModel):
    """One independent block of a tensor sum, spanning ``factors`` consecutive factors."""

    model_config = ConfigDict(extra="forbid")

    factors: int = Field(..., ge=1)
    generator: ComponentGenerator


class TensorSumDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["tensor_sum"] = "tensor_sum"
    components: List[ComponentDocument] = Field(..., min_length=2)


GeneratorDocument = Annotated[
    Union[ConstantDocument, PiecewiseDocument, FamilyDocument, TensorSumDocument],
    Field(discriminator="kind"),
]


class InitialDocument(BaseModel):
    """Initial law: a single state (one label per factor) or a full weight vector."""

    model_config = ConfigDict(extra="forbid")

    state: Optional[List[str]] = None
    weights: Optional[List[float]] = None

    @model_validator(mode="after")
    def check_one_form(self) -> "InitialDocument":
        if (self.state is None) == (self.weights is None):
            raise ValueError("initial needs exactly one of 'state' or 'weights'")
        return self


class ModelFile(BaseModel):
    """Self-describing model document; matrix rows follow the flat state order."""

    model_config = ConfigDict(extra="forbid")

    format: Literal["markov-copula/model"] = MODEL_FORMAT
    factors: List[FactorDocument] = Field(..., min_length=1)
    initial: Optional[InitialDocument] = None
    generator: GeneratorDocument

    def space(self) -> FactoredStateSpace:
        factors = tuple(Factor(name=f.name, states=tuple(f.states)) for f in self.factors)
        return FactoredStateSpace(factors=factors)

    def to_generator(self) -> GeneratorFunction:
        return build_generator(self.generator, self.space())

    def to_distribution(self) -> Distribution:
        space = self.space()
        if self.initial is None:
            return Distribution.point_mass(space)
        if self.initial.state is not None:
            return Distribution.point_mass(space, space.index_of_labels(self.initial.state))
        return Distribution(space=space, weights=self.initial.weights)

    @classmethod
    def from_model(cls, g: GeneratorFunction, mu0: Optional[Distribution] = None) -> "ModelFile":
        """Describe a generator (and optionally its initial law) as a document."""
        factors = [FactorDocument(name=f.name, states=list(f.states)) for f in g.space.factors]
        initial = None if mu0 is None else InitialDocument(weights=[float(w) for w in mu0.weights])
        return cls(factors=factors, initial=initial, generator=describe_generator(g))

    def dumps(self) -> str:
        return dump_json(self.model_dump(exclude_none=True))


def build_generator(document: Any, space: FactoredStateSpace) -> GeneratorFunction:
    if isinstance(document, ConstantDocument):
        return ConstantGenerator(space=space, rates=np.array(document.matrix, dtype=float))
    if isinstance(document, PiecewiseDocument):
        return PiecewiseConstantGenerator(
            space=space,
            times=tuple(document.breakpoints),
            matrices=tuple(np.array(m, dtype=float) for m in document.matrices),
        )
    if isinstance(document, FamilyDocument):
        return FamilyGenerator(space=space, name=document.name, params=dict(document.params))

    components = []
    start = 0
    for component in document.components:
        stop = start + component.factors
        if stop > space.n_factors:
            raise GeneratorError(f"tensor_sum components span {stop} factors, model has {space.n_factors}")
        block = FactoredStateSpace(factors=space.factors[start:stop])
        components.append(build_generator(component.generator, block))
        start = stop
    if start != space.n_factors:
        raise GeneratorError(f"tensor_sum components span {start} factors, model has {space.n_factors}")
    return TensorSumGenerator(space=space, components=tuple(components))


def matrix_rows(matrix: np.ndarray) -> List[List[float]]:
    return [[float(x) for x in row] for row in matrix]


def describe_generator(g: GeneratorFunction) -> Any:
    if isinstance(g, ConstantGenerator):
        return ConstantDocument(matrix=matrix_rows(g.rates))
    if isinstance(g, PiecewiseConstantGenerator):
        return PiecewiseDocument(breakpoints=list(g.times), matrices=[matrix_rows(m) for m in g.matrices])
    if isinstance(g, FamilyGenerator):
        return FamilyDocument(name=g.name, params=dict(g.params))
    if isinstance(g, TensorSumGenerator):
        return TensorSumDocument(
            components=[
                ComponentDocument(factors=c.space.n_factors, generator=describe_generator(c))
                for c in g.components
            ]
        )
    raise GeneratorError(f"cannot describe a '{g.kind}' generator as a model document")


def field_path(location: tuple) -> str:
    path = ""
    for part in location:
        path += f"[{part}]" if isinstance(part, int) else (f".{part}" if path else str(part))
    return path or "<document>"


class LoadedModel(BaseModel):
    """A parsed model together with the digest of the bytes it came from."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    source: str
    digest: str
    document: ModelFile
    generator: GeneratorFunction
    initial: Distribution


def parse_model(text: str, source: str = "<model>") -> LoadedModel:
    """Parse model text into domain objects.

    Raises:
        ModelParseError: with "line L, column C" for JSON syntax errors, the field path
            for schema errors, or the offending section for invalid content
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelParseError(source, f"line {e.lineno}, column {e.colno}", e.msg) from e
    try:
        document = ModelFile.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        raise ModelParseError(source, f"field {field_path(first['loc'])}", first["msg"]) from e
    try:
        generator = document.to_generator()
    except (GeneratorError, ValueError) as e:
        raise ModelParseError(source, "field generator", str(e)) from e
    try:
        initial = document.to_distribution()
    except ValueError as e:
        raise ModelParseError(source, "field initial", str(e)) from e
    return LoadedModel(
        source=source,
        digest=input_digest(text.encode("utf-8")),
        document=document,
        generator=generator,
        initial=initial,
    )


def load_model(path: Union[str, Path]) -> LoadedModel:
    """Read and parse a UTF-8 model file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ModelParseError(str(path), "file", str(e)) from e
    model = parse_model(text, str(path))
    logger.debug("model_loaded", source=str(path), kind=model.generator.kind, dim=model.generator.dim)
    return model


def write_model(path: Union[str, Path], g: GeneratorFunction, mu0: Optional[Distribution] = None) -> str:
    """Write a generator as a model document; returns the text written."""
    text = ModelFile.from_model(g, mu0).dumps()
    Path(path).write_text(text, encoding="utf-8")
    return text

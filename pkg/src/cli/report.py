"""Machine-readable command reports."""

from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from config import __version__, settings
from utils import dump_json

REPORT_FORMAT = "markov-copula/report"


class InputDigest(BaseModel):
    path: str
    sha256: str


class ReportFile(BaseModel):
    """One command's outcome: verdicts, certificates, marginals and residual tables.

    Serialization sorts keys and uses shortest round-trip floats, so identical inputs
    and seeds give byte-identical reports. Timing is only recorded when
    ``report_include_timing`` is set.
    """

    format: str = REPORT_FORMAT
    command: List[str]
    version: str = __version__
    inputs: List[InputDigest] = Field(default_factory=list)
    exit_code: int
    summary: str
    verdicts: Dict[str, Any] = Field(default_factory=dict)
    certificates: List[Dict[str, Any]] = Field(default_factory=list)
    marginals: Dict[str, Any] = Field(default_factory=dict)
    residuals: Dict[str, Any] = Field(default_factory=dict)
    timing: Optional[Dict[str, float]] = None

    def with_timing(self, **seconds: float) -> "ReportFile":
        if not settings.report_include_timing:
            return self
        return self.model_copy(update={"timing": dict(seconds)})

    def document(self) -> Dict[str, Any]:
        return self.model_dump(exclude={"timing"} if self.timing is None else None)

    def dumps(self) -> str:
        return dump_json(self.document())

    def write(self, path: str) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

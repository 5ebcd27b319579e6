"""Utility functions for the application."""

import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterable, List, TypeVar

import numpy as np
import structlog

T = TypeVar("T")
R = TypeVar("R")


def setup_logging(log_level: str = "WARNING", log_format: str = "console") -> None:
    """Route structlog through stdlib logging on stderr.

    Standard output is reserved for reports and model documents.

    Args:
        log_level: Logging level name
        log_format: "json" or "console"
    """
    logging.basicConfig(
        format="%(message)s",
        level=getattr(logging, log_level.upper()),
        stream=sys.stderr,
        force=True,
    )

    processors = [
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.stdlib.PositionalArgumentsFormatter(),
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        structlog.processors.UnicodeDecoder(),
    ]

    if log_format == "json":
        processors.append(structlog.processors.JSONRenderer())
    else:
        processors.append(structlog.dev.ConsoleRenderer())

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )


def to_jsonable(value: Any) -> Any:
    """Convert numpy containers and scalars into plain JSON types.

    Args:
        value: Arbitrary nested value

    Returns:
        Value made of dicts, lists, str, int, float, bool and None only
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        # JSON has no NaN/inf; absent entries are reported as null
        return value if np.isfinite(value) else None
    if hasattr(value, "model_dump"):
        return to_jsonable(value.model_dump())
    return value


def dump_json(document: Any) -> str:
    """Serialize a document deterministically (sorted keys, full float precision).

    Args:
        document: Report or model document

    Returns:
        JSON text terminated by a newline
    """
    return json.dumps(to_jsonable(document), indent=2, sort_keys=True, allow_nan=False) + "\n"


def input_digest(payload: bytes) -> str:
    """Return the SHA-256 hex digest identifying an input document."""
    return hashlib.sha256(payload).hexdigest()


def worker_count(threads: int) -> int:
    """Resolve a configured thread cap (0 = auto) to a worker count."""
    if threads < 0:
        raise ValueError(f"threads must be >= 0, got {threads}")
    if threads == 0:
        return os.cpu_count() or 1
    return threads


def fan_out(func: Callable[[T], R], items: Iterable[T], threads: int = 0) -> List[R]:
    """Apply ``func`` to every item, possibly concurrently, preserving input order.

    Args:
        func: Pure function of one item
        items: Work items
        threads: Worker cap (0 = auto)

    Returns:
        Results in the order of ``items``
    """
    work = list(items)
    workers = min(worker_count(threads), len(work))
    if workers <= 1:
        return [func(item) for item in work]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, work))

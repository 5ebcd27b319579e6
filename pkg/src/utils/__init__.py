"""Utilities module."""

from .helpers import (
    setup_logging,
    dump_json,
    to_jsonable,
    input_digest,
    worker_count,
    fan_out,
)

__all__ = [
    "setup_logging",
    "dump_json",
    "to_jsonable",
    "input_digest",
    "worker_count",
    "fan_out",
]

#!/usr/bin/env python3
"""
LA Tools
Logging adapter and small helpers shared by every package
"""

import csv
import logging
from functools import wraps
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence


class ContextAdapter(logging.LoggerAdapter):
    LOG_KWARGS = ["exc_info", "stack_info", "stacklevel"]

    def process(self, msg, kwargs):
        extra = kwargs.pop("extra", {})
        preserved_kwargs = {k: kwargs[k] for k in ContextAdapter.LOG_KWARGS if k in kwargs}

        msg_vars = ", ".join(f"{k}={v}" for k, v in extra.items())

        if msg_vars:
            msg = f"{msg} | {msg_vars}"

        # Restore preserved kwargs and update with extra
        kwargs.update(preserved_kwargs)
        kwargs["extra"] = extra

        return msg, kwargs


def get_logger(name: str) -> ContextAdapter:
    return ContextAdapter(logging.getLogger(name))


logger = get_logger("LATools")


def safe_output(default_value=None):
    """
    Decorator that catches all exceptions and returns a default value.
    Logs the exception for debugging purposes.
    """

    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except Exception as e:
                logger.error(f"Error in {func.__qualname__}: {e}", exc_info=True)
                return default_value

        return wrapper

    return decorator


def write_csv(path: str | Path, rows: Iterable[Dict[str, Any]], fieldnames: Sequence[str] | None = None, append: bool = False) -> int:
    """
    Write dict rows to a CSV file. Header is written when the file is new or not appending.

    Returns:
        Number of rows written
    """
    rows = list(rows)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    if fieldnames is None:
        fieldnames = list(rows[0].keys()) if rows else []

    write_header = not append or not path.exists() or path.stat().st_size == 0
    with open(path, "a" if append else "w", newline="") as file:
        writer = csv.DictWriter(file, fieldnames=list(fieldnames), extrasaction="ignore")
        if write_header:
            writer.writeheader()
        writer.writerows(rows)

    return len(rows)


def read_csv(path: str | Path) -> List[Dict[str, str]]:
    with open(path, newline="") as file:
        return list(csv.DictReader(file))

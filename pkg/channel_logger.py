#!/usr/bin/env python3
"""
Channel Logger
Unified logging system for multi-channel run telemetry
"""

import logging
import threading
from pathlib import Path
from typing import Any, Dict, List, Optional

from la_tools import write_csv


class ChannelLogFormatter(logging.Formatter):
    CHANNEL_NAMES = {
        0: "ACTORS",
        1: "LEARNER",
        2: "REPLAY",
        3: "SIM",
        4: "BENCH",
        8: "LOGS",
    }

    def format(self, record):
        """
        Format the log record with additional context

        Adds:
        - Channel name
        - Run ID (if available)
        """
        channel_id = getattr(record, "channel", "UNKNOWN")

        if isinstance(channel_id, int):
            channel_name = self.CHANNEL_NAMES.get(channel_id, f"CHANNEL_{channel_id}")
        else:
            channel_name = str(channel_id)

        record.channel_name = channel_name

        run_id = getattr(record, "run_id", "-")

        return f"[{channel_name}] [Run: {run_id}] - {record.getMessage()}"


logger = logging.getLogger("ChannelLogger")
console_handler = logging.StreamHandler()
console_handler.setLevel(logging.INFO)
console_handler.setFormatter(ChannelLogFormatter())
logger.addHandler(console_handler)
logger.propagate = False


class ChannelLogger:
    """Buffers telemetry rows per channel and flushes them to CSV sinks"""

    # Channel IDs as constants
    ACTORS = 0
    LEARNER = 1
    REPLAY = 2
    SIM = 3
    BENCH = 4
    LOGS = 8

    DEFAULT_SINKS = {
        ACTORS: "runstats.csv",
        LEARNER: "learner.csv",
        REPLAY: "replay_audit.csv",
        SIM: "trace.csv",
        BENCH: "metrics.csv",
    }

    def __init__(self, out_dir: str | Path | None, run_id: str = "-", sinks: Optional[Dict[int, str]] = None):
        """Initialize the channel logger

        Args:
            out_dir: Directory for CSV sinks, None keeps everything in memory
            run_id: Identifier attached to console lines
            sinks: Channel to file name overrides
        """
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.run_id = run_id
        self.sinks = {**self.DEFAULT_SINKS, **(sinks or {})}
        self.flushed_rows: Dict[int, int] = {}
        self._lock = threading.Lock()

        self.logs_buffer: Dict[int, List[Dict[str, Any]]] = {
            self.ACTORS: [],
            self.LEARNER: [],
            self.REPLAY: [],
            self.SIM: [],
            self.BENCH: [],
            self.LOGS: [],
        }

    def log_to_actors(self, row: Dict[str, Any]):
        self.buffer_log(self.ACTORS, row)

    def log_to_learner(self, row: Dict[str, Any]):
        self.buffer_log(self.LEARNER, row)

    def log_to_replay(self, row: Dict[str, Any]):
        self.buffer_log(self.REPLAY, row)

    def log_to_sim(self, row: Dict[str, Any]):
        self.buffer_log(self.SIM, row)

    def log_to_bench(self, row: Dict[str, Any]):
        self.buffer_log(self.BENCH, row)

    def log_to_logs(self, content: str):
        """Log to Logs channel (8), echoed on the console"""
        logger.info(content, extra=dict(channel=self.LOGS, run_id=self.run_id))
        self.buffer_log(self.LOGS, {"message": content})

    def log_error(self, error: str, traceback: Optional[str] = None):
        error_content = f"ERROR: {error}"
        if traceback:
            error_content += f"\n=== TRACEBACK ===\n{traceback}"
        self.log_to_logs(error_content)
        logging.error(f"Logged error: {error}")

    def buffer_log(self, channel: int, row: Dict[str, Any]):
        """Add a row to the channel buffer instead of writing immediately"""
        with self._lock:
            if channel in self.logs_buffer:
                self.logs_buffer[channel].append(row)

    def rows(self, channel: int) -> List[Dict[str, Any]]:
        with self._lock:
            return list(self.logs_buffer.get(channel, []))

    def flush_buffer(self, channel: int):
        """Flush buffer for a specific channel (LOGS is console only)"""
        if self.out_dir is None:
            return

        with self._lock:
            rows = self.logs_buffer.get(channel, [])
            if not rows or channel == self.LOGS:
                return
            self.logs_buffer[channel] = []

        try:
            fieldnames = sorted({key for row in rows for key in row})
            written = write_csv(self.out_dir / self.sinks[channel], rows, fieldnames=fieldnames, append=True)
            self.flushed_rows[channel] = self.flushed_rows.get(channel, 0) + written
        except Exception as e:
            # If we can't write, keep going with the console
            print(f"Failed to flush channel {channel}: {str(e)}")

    def flush_all_buffers(self):
        for channel in list(self.logs_buffer):
            self.flush_buffer(channel)
        with self._lock:
            self.logs_buffer[self.LOGS] = []

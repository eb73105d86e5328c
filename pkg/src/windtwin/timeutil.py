"""UTC time helpers.

All timestamps in the library are floats: seconds since the UNIX epoch,
UTC. Wire formats use ISO-8601 with a trailing Z. Grid instants are
integer multiples of the grid step counted from the epoch.
"""

from __future__ import annotations

import math
from datetime import datetime, timezone


def iso_format(epoch: float) -> str:
    """Format an epoch timestamp as ISO-8601 UTC (microsecond precision)."""
    dt = datetime.fromtimestamp(epoch, tz=timezone.utc)
    if dt.microsecond:
        return dt.strftime("%Y-%m-%dT%H:%M:%S.%f") + "Z"
    return dt.strftime("%Y-%m-%dT%H:%M:%S") + "Z"


def iso_parse(text: str) -> float:
    """Parse ISO-8601 (with Z or offset) or a bare epoch number to epoch seconds."""
    s = text.strip()
    try:
        return float(s)
    except ValueError:
        pass
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def grid_floor(t: float, step: float) -> float:
    """Largest grid instant (multiple of step from epoch) <= t."""
    return math.floor(t / step + 1e-9) * step


def grid_ceil(t: float, step: float) -> float:
    """Smallest grid instant (multiple of step from epoch) >= t."""
    return math.ceil(t / step - 1e-9) * step

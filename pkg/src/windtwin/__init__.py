"""windtwin: digital-twin backend for a floating offshore wind turbine.

Data flows through four stages, each usable on its own:

* catalog   - the turbine's parameter universe (ids, nodes, bounds)
* store     - telemetry ingestion, ordered queries, causal resampling
* simulator - seeded synthetic telemetry standing in for the real feed
* forecast  - persistence / DNN / LSTM multi-step predictors + benchmark

plus a weather-field client, an HTTP server tying the stages together,
and the `windtwin` command line.
"""

from .catalog import Catalog, LogicalNode, ParameterDef, load_catalog
from .errors import TwinError
from .store import (
    FrameSeries,
    IngestReport,
    NormalizationStats,
    TelemetryRecord,
    TimeseriesStore,
    read_records,
    write_records,
)

__version__ = "0.1.0"

__all__ = [
    "Catalog",
    "LogicalNode",
    "ParameterDef",
    "load_catalog",
    "TwinError",
    "FrameSeries",
    "IngestReport",
    "NormalizationStats",
    "TelemetryRecord",
    "TimeseriesStore",
    "read_records",
    "write_records",
    "__version__",
]

"""Turbine parameter catalog.

The catalog is the parameter universe every other component works
against: stable ids, logical-node grouping, units, physical validity
bounds used for ingest-time outlier rejection, and the default set of
forecastable parameters. It is loaded once from a versioned plain-text
table and is immutable afterwards, so concurrent reads need no locking.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import ParseError, UnknownParameter

NODE_DESCRIPTIONS = {
    "WMET": "met-ocean conditions: wind, waves, temperature",
    "WROT": "rotor: blade pitch and rotor speed",
    "WYAW": "yaw system",
    "WTOW": "tower motion, 6 degrees of freedom",
    "WTRM": "drive train: shaft bearing, brakes, gearbox oil",
    "WTUR": "turbine production and operation",
    "WGEN": "generator",
    "WCNV": "converter / grid frequency",
    "WTRF": "transformer electrics and oil",
    "WSTR": "floater structure: ballast",
    "WPPD": "plant control system",
    "WAVL": "availability and operation bookkeeping",
}


@dataclass(frozen=True)
class LogicalNode:
    code: str
    description: str


@dataclass(frozen=True)
class ParameterDef:
    """Definition of one catalog parameter.

    For continuous parameters `lower_bound`/`upper_bound` are the inclusive
    physical validity limits and `codes` is None. For status parameters the
    bounds are None and `codes` is the set of legal integer codes.
    """

    id: str
    node: LogicalNode
    unit: str
    kind: str  # "continuous" | "status"
    lower_bound: float | None
    upper_bound: float | None
    codes: frozenset[int] | None
    forecast_rank: int

    @property
    def forecastable(self) -> bool:
        return self.forecast_rank > 0

    def is_physical(self, value: float) -> bool:
        if self.kind == "status":
            return float(value) == int(value) and int(value) in self.codes
        return self.lower_bound <= value <= self.upper_bound


class Catalog:
    """Immutable parameter catalog loaded from one versioned table."""

    def __init__(self, params: list[ParameterDef], version: str):
        self.version = version
        self._params: dict[str, ParameterDef] = {}
        for p in params:
            if p.id in self._params:
                raise ParseError(f"duplicate parameter id {p.id!r}")
            self._params[p.id] = p
        self._order = [p.id for p in params]

    def lookup(self, param_id: str) -> ParameterDef:
        try:
            return self._params[param_id]
        except KeyError:
            raise UnknownParameter(f"unknown parameter {param_id!r}") from None

    def __contains__(self, param_id: str) -> bool:
        return param_id in self._params

    def is_physical(self, param_id: str, value: float) -> bool:
        return self.lookup(param_id).is_physical(value)

    def parameters(self) -> list[ParameterDef]:
        return [self._params[i] for i in self._order]

    def ids(self) -> list[str]:
        return list(self._order)

    def nodes(self) -> list[LogicalNode]:
        seen: dict[str, LogicalNode] = {}
        for p in self.parameters():
            seen.setdefault(p.node.code, p.node)
        return list(seen.values())

    def node_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for p in self.parameters():
            counts[p.node.code] = counts.get(p.node.code, 0) + 1
        return counts

    def forecast_set(self) -> list[str]:
        """Default forecast parameters, ordered by their catalog rank.

        The order is fixed by the forecast_rank column of the data file and
        is stable across runs: production, rotor speed, met-ocean, blade
        pitch, yaw angle, then the six tower DOFs.
        """
        ranked = [p for p in self.parameters() if p.forecast_rank > 0]
        ranked.sort(key=lambda p: p.forecast_rank)
        return [p.id for p in ranked]


def _parse_table(text: str, version: str) -> Catalog:
    params: list[ParameterDef] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 8:
            raise ParseError(f"catalog line {lineno}: expected 8 columns, got {len(cols)}")
        pid, node_code, unit, kind, lower, upper, codes, rank = cols
        if kind not in ("continuous", "status"):
            raise ParseError(f"catalog line {lineno}: bad kind {kind!r}")
        node = LogicalNode(node_code, NODE_DESCRIPTIONS.get(node_code, node_code))
        if kind == "continuous":
            lo, hi = float(lower), float(upper)
            if not lo < hi:
                raise ParseError(f"catalog line {lineno}: lower must be < upper")
            params.append(ParameterDef(pid, node, unit, kind, lo, hi, None, int(rank)))
        else:
            code_set = frozenset(int(c) for c in codes.split("|"))
            if not code_set:
                raise ParseError(f"catalog line {lineno}: status row needs codes")
            params.append(ParameterDef(pid, node, unit, kind, None, None, code_set, int(rank)))
    return Catalog(params, version)


def load_catalog(path: str | Path | None = None) -> Catalog:
    """Load a catalog from `path`, or the packaged default table."""
    if path is not None:
        return _parse_table(Path(path).read_text(), version=str(path))
    return _default_catalog()


@lru_cache(maxsize=1)
def _default_catalog() -> Catalog:
    text = resources.files("windtwin.data").joinpath("parameters_v1.tsv").read_text()
    return _parse_table(text, version="parameters_v1")

"""Cross-evaluation of designs against models (design x model phi tables)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Mapping, Sequence

from . import _kernels
from .criterion import DEFAULT_REL_TOL, ESTIMABILITY_TOL, evaluate_design
from .layout import FieldLayout
from .model import MODEL_NAMES, Design, ModelSpec
from .network import NetworkGraph


def _fmt(phi: float):
    # repr keeps 17 significant digits; JSON has no infinity literal
    return phi if math.isfinite(phi) else "inf"


def _unfmt(value) -> float:
    return math.inf if value == "inf" else float(value)


@dataclass
class EvaluationReport:
    phi_table: dict[str, dict[str, float]]
    efficiency_table: dict[str, dict[str, float | None]]
    designs: dict[str, str]
    meta: dict = field(default_factory=dict)

    @property
    def columns(self) -> list[str]:
        first = next(iter(self.phi_table.values()), {})
        return list(first)

    def column_best(self, column: str) -> float:
        return min((row[column] for row in self.phi_table.values()), default=math.inf)

    def to_dict(self) -> dict:
        return {
            "meta": self.meta,
            "phi_table": {d: {c: _fmt(v) for c, v in row.items()} for d, row in self.phi_table.items()},
            "efficiency_table": self.efficiency_table,
            "designs": self.designs,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def from_dict(cls, data: dict) -> "EvaluationReport":
        phi = {d: {c: _unfmt(v) for c, v in row.items()} for d, row in data["phi_table"].items()}
        return cls(phi, data["efficiency_table"], data["designs"], data.get("meta", {}))

    def format_text(self) -> str:
        cols = self.columns
        width = max([len(d) for d in self.phi_table] + [6])
        cw = max([len(c) for c in cols] + [8]) + 2
        lines = [" " * width + "".join(f"{c:>{cw}s}" for c in cols)]
        for name, row in self.phi_table.items():
            cells = "".join(f"{row[c]:{cw}.2f}" if math.isfinite(row[c]) else f"{'inf':>{cw}s}" for c in cols)
            lines.append(f"{name:<{width}s}{cells}")
        return "\n".join(lines)


def evaluate_table(
    designs: Mapping[str, Design],
    layout: FieldLayout,
    graphs: Mapping[str, NetworkGraph],
    models: Sequence[str] = MODEL_NAMES,
    rowcol_coding: str = "position",
    sources: Mapping[str, str] | None = None,
    seed: int | None = None,
) -> EvaluationReport:
    """phi for every design under every model.

    Network models get one column per graph; with a single graph the column
    is just the model name, otherwise ``MODEL@graph``.
    """
    specs = [ModelSpec.from_name(m, rowcol_coding) for m in models]
    columns: list[tuple[str, ModelSpec, NetworkGraph | None]] = []
    for spec in specs:
        if spec.include_network:
            for label, g in graphs.items():
                key = spec.name if len(graphs) == 1 else f"{spec.name}@{label}"
                columns.append((key, spec, g))
        else:
            columns.append((spec.name, spec, None))

    phi_table = {
        name: {key: evaluate_design(spec, layout, g, d).phi for key, spec, g in columns}
        for name, d in designs.items()
    }
    efficiency = {}
    for name, row in phi_table.items():
        efficiency[name] = {}
        for key, *_ in columns:
            best = min(r[key] for r in phi_table.values())
            v = row[key]
            efficiency[name][key] = best / v if math.isfinite(v) and math.isfinite(best) else None
    meta = {
        "seed": seed,
        "rel_tol": DEFAULT_REL_TOL,
        "estimability_tol": ESTIMABILITY_TOL,
        "graphs": {label: g.label for label, g in graphs.items()},
        "rowcol_coding": rowcol_coding,
        "backend": _kernels.BACKEND,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    src = dict(sources or {})
    return EvaluationReport(phi_table, efficiency, {d: src.get(d, d) for d in designs}, meta)

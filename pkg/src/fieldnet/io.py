"""Design CSV files and the flat ``key = value`` run configuration."""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .layout import ConfigurationError, FieldLayout, build_layout
from .model import MODEL_NAMES, ROWCOL_CODINGS, Design
from .optimizer import MODES


class DesignFormatError(ValueError):
    pass


DESIGN_HEADER = ["plot", "global_row", "global_col", "treatment"]
AUDIT_COLUMNS = ["superrow", "supercol", "block"]


def write_design(design: Design, layout: FieldLayout, path) -> None:
    if design.n != layout.n:
        raise DesignFormatError(f"design has {design.n} units, layout has {layout.n}")
    f = layout.factor_arrays()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DESIGN_HEADER + AUDIT_COLUMNS)
        for v in range(layout.n):
            w.writerow(
                [v + 1, f["global_row"][v], f["global_col"][v], design.assignment[v]]
                + [f[c][v] for c in AUDIT_COLUMNS]
            )


def read_design(path, layout: FieldLayout | None = None, m: int | None = None) -> Design:
    """Read a design CSV; plots must be 1..n, each listed exactly once.

    ``m`` defaults to the largest treatment label in the file.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in DESIGN_HEADER if c not in (reader.fieldnames or [])]
        if missing:
            raise DesignFormatError(f"{path}: missing column(s) {', '.join(missing)}")
        rows = {}
        for lineno, rec in enumerate(reader, start=2):
            try:
                plot, grow, gcol, trt = (int(rec[c]) for c in DESIGN_HEADER)
            except (TypeError, ValueError):
                raise DesignFormatError(f"{path}: line {lineno}: non-integer field") from None
            if plot in rows:
                raise DesignFormatError(f"{path}: duplicate plot {plot}")
            rows[plot] = (grow, gcol, trt)
    n = layout.n if layout is not None else max(rows, default=0)
    for plot in rows:
        if not 1 <= plot <= n:
            raise DesignFormatError(f"{path}: plot {plot} outside 1..{n}")
    for plot in range(1, n + 1):
        if plot not in rows:
            raise DesignFormatError(f"{path}: missing plot {plot}")
    if layout is not None:
        for plot, (grow, gcol, _) in rows.items():
            if not _in_grid(layout, grow, gcol) or layout.unit_at(grow, gcol) != plot:
                raise DesignFormatError(
                    f"{path}: plot {plot} listed at ({grow}, {gcol}), layout puts it elsewhere"
                )
    assignment = np.array([rows[p][2] for p in range(1, n + 1)], dtype=np.int64)
    if m is None:
        m = int(assignment.max()) if n else 1
    bad = np.flatnonzero((assignment < 1) | (assignment > m))
    if bad.size:
        p = int(bad[0]) + 1
        raise DesignFormatError(f"{path}: plot {p} has treatment {assignment[bad[0]]} outside 1..{m}")
    return Design(assignment, m)


def _in_grid(layout: FieldLayout, row: int, col: int) -> bool:
    return 1 <= row <= layout.n_rows and 1 <= col <= layout.n_cols


@dataclass
class RunConfig:
    rows: int = 14
    cols: int = 6
    superrows: tuple[int, ...] = (7, 7)
    supercols: tuple[int, ...] = (3, 3)
    row_spacing_m: float = 1.75
    col_spacing_m: float = 1.5
    model: str = "BRCNM"
    graph: str = "king"
    drill_direction: str = "down"
    spray_direction: str = "right"
    mode: str = "resolved"
    restarts: int = 10
    max_passes: int = 50
    seed: int = 0
    treatments: int | None = None
    rowcol_coding: str = "position"

    def layout(self) -> FieldLayout:
        return build_layout(
            self.rows, self.cols, self.superrows, self.supercols, self.row_spacing_m, self.col_spacing_m
        )

    def n_treatments(self) -> int:
        if self.treatments is not None:
            return self.treatments
        layout = self.layout()
        sizes = set(np.bincount(layout.factor_arrays()["block"])[1:].tolist())
        if len(sizes) != 1:
            raise ConfigurationError("blocks have unequal sizes; set 'treatments' explicitly")
        return sizes.pop()

    def validate(self) -> "RunConfig":
        self.layout()
        if self.model.upper() not in MODEL_NAMES:
            raise ConfigurationError(f"unknown model {self.model!r}; valid models: {', '.join(MODEL_NAMES)}")
        self.model = self.model.upper()
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}; valid modes: {', '.join(MODES)}")
        if self.rowcol_coding not in ROWCOL_CODINGS:
            raise ConfigurationError(
                f"unknown rowcol_coding {self.rowcol_coding!r}; valid: {', '.join(ROWCOL_CODINGS)}"
            )
        if self.drill_direction not in ("down", "up"):
            raise ConfigurationError(f"drill_direction must be down or up, got {self.drill_direction!r}")
        if self.spray_direction not in ("right", "left"):
            raise ConfigurationError(f"spray_direction must be right or left, got {self.spray_direction!r}")
        if self.restarts < 1 or self.max_passes < 1:
            raise ConfigurationError("restarts and max_passes must be positive")
        return self

    def with_overrides(self, **overrides) -> "RunConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


def _parse_value(key: str, raw: str):
    try:
        if key in ("superrows", "supercols"):
            return tuple(int(x) for x in raw.split(",") if x.strip())
        if key in ("row_spacing_m", "col_spacing_m"):
            return float(raw)
        if key in ("rows", "cols", "restarts", "max_passes", "seed", "treatments"):
            return int(raw)
    except ValueError:
        raise ConfigurationError(f"config key {key!r}: cannot parse {raw!r}") from None
    return raw


def load_config(path) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}: line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigurationError(f"{path}: line {lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, value)
    return RunConfig(**values).validate()

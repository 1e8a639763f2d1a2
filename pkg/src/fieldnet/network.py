"""Interference graphs between plots and their edge-list file format.

``weights[v, u]`` is the influence of the treatment on unit ``u`` on the
response of unit ``v`` (0-based indices internally, 1-based in files).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .layout import FieldLayout


class GraphFormatError(ValueError):
    """Malformed or invalid graph file / matrix."""


@dataclass(frozen=True, eq=False)
class NetworkGraph:
    weights: np.ndarray
    directed: bool = False
    label: str = ""

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise GraphFormatError(f"adjacency must be square, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise GraphFormatError("adjacency has non-finite entries")
        if np.any(w < 0):
            raise GraphFormatError("adjacency has negative weights")
        if np.any(np.diag(w) != 0):
            raise GraphFormatError("adjacency has nonzero diagonal (self loop)")
        if not self.directed and not np.array_equal(w, w.T):
            raise GraphFormatError("undirected adjacency must be symmetric")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def in_degree(self) -> np.ndarray:
        return np.count_nonzero(self.weights, axis=1)


def zero_graph(n: int, label: str = "zero") -> NetworkGraph:
    return NetworkGraph(np.zeros((n, n)), directed=False, label=label)


def build_king_graph(layout: FieldLayout) -> NetworkGraph:
    """8-neighbourhood graph weighted by inverse centroid distance."""
    f = layout.factor_arrays()
    rows, cols = f["global_row"], f["global_col"]
    xy = layout.centroids()
    near = (np.abs(rows[:, None] - rows[None, :]) <= 1) & (np.abs(cols[:, None] - cols[None, :]) <= 1)
    np.fill_diagonal(near, False)
    dist = np.sqrt(((xy[:, None, :] - xy[None, :, :]) ** 2).sum(axis=-1))
    w = np.zeros((layout.n, layout.n))
    w[near] = 1.0 / dist[near]
    return NetworkGraph(w, directed=False, label="king")


def build_farmer_graph(
    layout: FieldLayout, drill_direction: str = "down", spray_direction: str = "right"
) -> NetworkGraph:
    """Directed 0/1 graph of machinery order.

    Columns are drilled in one pass and rows sprayed in one pass; each plot
    receives an edge from the plot handled immediately before it.
    """
    if drill_direction not in ("down", "up"):
        raise ValueError(f"drill_direction must be 'down' or 'up', got {drill_direction!r}")
    if spray_direction not in ("right", "left"):
        raise ValueError(f"spray_direction must be 'right' or 'left', got {spray_direction!r}")
    dr = 1 if drill_direction == "down" else -1
    dc = 1 if spray_direction == "right" else -1
    w = np.zeros((layout.n, layout.n))
    for row in range(1, layout.n_rows + 1):
        for col in range(1, layout.n_cols + 1):
            v = layout.unit_at(row, col) - 1
            if 1 <= row - dr <= layout.n_rows:
                w[v, layout.unit_at(row - dr, col) - 1] = 1.0
            if 1 <= col - dc <= layout.n_cols:
                w[v, layout.unit_at(row, col - dc) - 1] = 1.0
    return NetworkGraph(w, directed=True, label=f"farmer(drill={drill_direction},spray={spray_direction})")


def save_graph(graph: NetworkGraph, path) -> None:
    """Write ``from,to,weight`` records; an edge u->v means weights[v, u]."""
    w = graph.weights
    lines = [f"n={graph.n},directed={'true' if graph.directed else 'false'}"]
    if graph.label:
        lines.insert(0, f"# {graph.label}")
    for v, u in zip(*np.nonzero(w)):
        if not graph.directed and u > v:
            continue
        lines.append(f"{u + 1},{v + 1},{float(w[v, u])!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_graph(path, label: str | None = None) -> NetworkGraph:
    text = Path(path).read_text(encoding="utf-8")
    n = directed = None
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if n is None:
            try:
                fields = dict(part.split("=", 1) for part in line.split(","))
                n = int(fields["n"])
                directed = {"true": True, "false": False}[fields["directed"].strip().lower()]
            except (KeyError, ValueError) as exc:
                raise GraphFormatError(f"line {lineno}: bad header {line!r}, expected n=<count>,directed=<true|false>") from exc
            if n < 1:
                raise GraphFormatError(f"line {lineno}: n must be >= 1")
            continue
        parts = line.split(",")
        try:
            if len(parts) != 3:
                raise ValueError
            u, v, wt = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise GraphFormatError(f"line {lineno}: expected from,to,weight, got {line!r}") from None
        if not (1 <= u <= n and 1 <= v <= n):
            raise GraphFormatError(f"line {lineno}: vertex index outside 1..{n}")
        if u == v:
            raise GraphFormatError(f"line {lineno}: self loop on vertex {u}")
        if not np.isfinite(wt) or wt < 0:
            raise GraphFormatError(f"line {lineno}: weight must be finite and >= 0, got {wt}")
        records.append((u - 1, v - 1, wt))
    if n is None:
        raise GraphFormatError("missing header line n=<count>,directed=<true|false>")
    w = np.zeros((n, n))
    for u, v, wt in records:
        w[v, u] = wt
        if not directed:
            w[u, v] = wt
    if label is None:
        label = Path(path).stem
    return NetworkGraph(w, directed=directed, label=label)

"""Model matrices for the eight nested block/row-column/network models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layout import ConfigurationError, FieldLayout
from .network import NetworkGraph


class StructuralError(ValueError):
    """Dimension mismatch between layout, graph and design."""


@dataclass(frozen=True, eq=False)
class Design:
    """Treatment ``assignment[v]`` in 1..m for unit ``v + 1``."""

    assignment: np.ndarray
    m: int

    def __post_init__(self):
        a = np.array(self.assignment, dtype=np.int64).ravel()
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if a.size and (a.min() < 1 or a.max() > self.m):
            raise ValueError(f"treatments must lie in 1..{self.m}")
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)

    @property
    def n(self) -> int:
        return self.assignment.size

    def replication(self) -> np.ndarray:
        return np.bincount(self.assignment - 1, minlength=self.m)

    def __eq__(self, other):
        if not isinstance(other, Design):
            return NotImplemented
        return self.m == other.m and np.array_equal(self.assignment, other.assignment)

    def __hash__(self):
        return hash((self.m, self.assignment.tobytes()))


ROWCOL_CODINGS = ("position", "nested")


@dataclass(frozen=True)
class ModelSpec:
    """Which terms enter the model.

    ``rowcol_coding`` only matters when superblocks and rows/columns are both
    present (BRCM, BRCNM). ``"position"`` indexes r by the row's position
    inside its superrow and c by the column's position inside its
    supercolumn, so r, rC and Rc are shared across replicate blocks; this is
    the coding that reproduces the published optimum values. ``"nested"``
    uses global rows and columns, making rC and Rc the rows and columns
    within each block.
    """

    include_network: bool = False
    include_superblocks: bool = False
    include_rowcol: bool = False
    rowcol_coding: str = "position"

    def __post_init__(self):
        if self.rowcol_coding not in ROWCOL_CODINGS:
            raise ConfigurationError(
                f"unknown rowcol_coding {self.rowcol_coding!r}; valid: {', '.join(ROWCOL_CODINGS)}"
            )

    @property
    def name(self) -> str:
        return _SPEC_TO_NAME[(self.include_network, self.include_superblocks, self.include_rowcol)]

    @classmethod
    def from_name(cls, name: str, rowcol_coding: str = "position") -> "ModelSpec":
        try:
            return cls(*_NAME_TO_SPEC[name.strip().upper()], rowcol_coding=rowcol_coding)
        except KeyError:
            raise ConfigurationError(
                f"unknown model {name!r}; valid models: {', '.join(MODEL_NAMES)}"
            ) from None

    def block_names(self) -> list[str]:
        names = ["mu", "tau"]
        if self.include_network:
            names.append("gamma")
        names += nuisance_block_names(self)[1:]
        return names


# (network, superblocks, rowcol) for each model
_NAME_TO_SPEC = {
    "CRM": (False, False, False),
    "RBM": (False, True, False),
    "RCM": (False, False, True),
    "BRCM": (False, True, True),
    "LNM": (True, False, False),
    "BNM": (True, True, False),
    "RCNM": (True, False, True),
    "BRCNM": (True, True, True),
}
_SPEC_TO_NAME = {v: k for k, v in _NAME_TO_SPEC.items()}
MODEL_NAMES = tuple(_NAME_TO_SPEC)


def nuisance_block_names(spec: ModelSpec) -> list[str]:
    names = ["mu"]
    if spec.include_superblocks:
        names += ["R", "C", "RC"]
    if spec.include_rowcol:
        names += ["r", "c"]
        if spec.include_superblocks:
            names += ["rC", "Rc"]
    return names


def _indicators(labels: np.ndarray, n_levels: int) -> np.ndarray:
    out = np.zeros((labels.size, n_levels))
    out[np.arange(labels.size), labels - 1] = 1.0
    return out


def treatment_indicators(design: Design) -> np.ndarray:
    return _indicators(design.assignment, design.m)


def blocking_columns(spec: ModelSpec, layout: FieldLayout) -> dict[str, np.ndarray]:
    """Named indicator blocks for mu and every blocking term of ``spec``."""
    f = layout.factor_arrays()
    b1, b2 = layout.n_superrows, layout.n_supercols
    sr, sc = f["superrow"], f["supercol"]
    if spec.include_superblocks and spec.rowcol_coding == "position":
        row, col = f["row_in_superrow"], f["col_in_supercol"]
        k1, k2 = max(layout.superrow_sizes), max(layout.supercol_sizes)
    else:
        row, col = f["global_row"], f["global_col"]
        k1, k2 = layout.n_rows, layout.n_cols
    level = {
        "R": (sr, b1),
        "C": (sc, b2),
        "RC": (f["block"], b1 * b2),
        "r": (row, k1),
        "c": (col, k2),
        "rC": ((row - 1) * b2 + sc, k1 * b2),
        "Rc": ((sr - 1) * k2 + col, k2 * b1),
    }
    out = {"mu": np.ones((layout.n, 1))}
    for name in nuisance_block_names(spec)[1:]:
        out[name] = _indicators(*level[name])
    return out


def nuisance_matrix(spec: ModelSpec, layout: FieldLayout) -> np.ndarray:
    """mu and blocking columns only (no treatment or network columns)."""
    return np.hstack(list(blocking_columns(spec, layout).values()))


@dataclass(frozen=True, eq=False)
class ModelMatrix:
    X: np.ndarray
    column_blocks: dict[str, slice]
    spec: ModelSpec

    @property
    def treatment_columns(self) -> slice:
        return self.column_blocks["tau"]


def _check_inputs(spec, layout, graph, design):
    if design.n != layout.n:
        raise StructuralError(f"design has {design.n} units, layout has {layout.n}")
    if spec.include_network:
        if graph is None:
            raise ConfigurationError(f"model {spec.name} needs a network graph")
        if graph.n != layout.n:
            raise StructuralError(f"graph has {graph.n} vertices, layout has {layout.n}")


def build_model_matrix(
    spec: ModelSpec, layout: FieldLayout, graph: NetworkGraph | None, design: Design
) -> ModelMatrix:
    _check_inputs(spec, layout, graph, design)
    blocking = blocking_columns(spec, layout)
    x_tau = treatment_indicators(design)
    parts = [("mu", blocking.pop("mu")), ("tau", x_tau)]
    if spec.include_network:
        parts.append(("gamma", graph.weights @ x_tau))
    parts += list(blocking.items())

    column_blocks, start = {}, 0
    for name, block in parts:
        column_blocks[name] = slice(start, start + block.shape[1])
        start += block.shape[1]
    return ModelMatrix(np.hstack([b for _, b in parts]), column_blocks, spec)


def information_matrix(model: ModelMatrix | np.ndarray) -> np.ndarray:
    X = model.X if isinstance(model, ModelMatrix) else np.asarray(model, dtype=float)
    M = X.T @ X
    return 0.5 * (M + M.T)


def nuisance_rank(
    spec: ModelSpec,
    layout: FieldLayout,
    graph: NetworkGraph | None = None,
    design: Design | None = None,
    rel_tol: float = 1e-9,
) -> int:
    """Numerical rank of the mu + blocking columns (the unit-structure df)."""
    if design is not None:
        _check_inputs(spec, layout, graph, design)
    N = nuisance_matrix(spec, layout)
    s = np.linalg.svd(N, compute_uv=False)
    # eigenvalues of N^T N are s**2; same relative threshold as pseudo_inverse
    return int(np.sum(s**2 > rel_tol * s[0] ** 2)) if s.size else 0

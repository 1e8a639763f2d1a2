"""Rectangular field layouts with superrow/supercolumn blocking."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np


class ConfigurationError(ValueError):
    """Raised when layout, model or run parameters are inconsistent."""


class FactorLabels(NamedTuple):
    unit_id: int
    superrow: int
    supercol: int
    block: int
    global_row: int
    global_col: int


def _group_index(sizes: Sequence[int]) -> np.ndarray:
    # 1-based group label for each position covered by the size sequence
    return np.repeat(np.arange(1, len(sizes) + 1), sizes)


@dataclass(frozen=True)
class FieldLayout:
    """Grid of ``n_rows x n_cols`` plots, units labelled row-major from 1.

    Superrows and supercolumns are contiguous runs of rows and columns given
    by their sizes; each superrow x supercolumn cell is one block.
    """

    n_rows: int
    n_cols: int
    superrow_sizes: tuple[int, ...]
    supercol_sizes: tuple[int, ...]
    row_spacing: float = 1.0
    col_spacing: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "superrow_sizes", tuple(int(s) for s in self.superrow_sizes))
        object.__setattr__(self, "supercol_sizes", tuple(int(s) for s in self.supercol_sizes))
        if self.n_rows < 1:
            raise ConfigurationError(f"n_rows must be >= 1, got {self.n_rows}")
        if self.n_cols < 1:
            raise ConfigurationError(f"n_cols must be >= 1, got {self.n_cols}")
        if not self.superrow_sizes or min(self.superrow_sizes) < 1:
            raise ConfigurationError(f"superrow_sizes must be positive, got {list(self.superrow_sizes)}")
        if not self.supercol_sizes or min(self.supercol_sizes) < 1:
            raise ConfigurationError(f"supercol_sizes must be positive, got {list(self.supercol_sizes)}")
        if sum(self.superrow_sizes) != self.n_rows:
            raise ConfigurationError(
                f"superrow_sizes sum to {sum(self.superrow_sizes)} != n_rows={self.n_rows}"
            )
        if sum(self.supercol_sizes) != self.n_cols:
            raise ConfigurationError(
                f"supercol_sizes sum to {sum(self.supercol_sizes)} != n_cols={self.n_cols}"
            )
        if not (np.isfinite(self.row_spacing) and self.row_spacing > 0):
            raise ConfigurationError(f"row_spacing must be > 0, got {self.row_spacing}")
        if not (np.isfinite(self.col_spacing) and self.col_spacing > 0):
            raise ConfigurationError(f"col_spacing must be > 0, got {self.col_spacing}")

    @property
    def n(self) -> int:
        return self.n_rows * self.n_cols

    @property
    def n_superrows(self) -> int:
        return len(self.superrow_sizes)

    @property
    def n_supercols(self) -> int:
        return len(self.supercol_sizes)

    @property
    def n_blocks(self) -> int:
        return self.n_superrows * self.n_supercols

    def _check_unit(self, unit_id: int) -> None:
        if not 1 <= unit_id <= self.n:
            raise IndexError(f"unit_id {unit_id} outside 1..{self.n}")

    def unit_factors(self, unit_id: int) -> FactorLabels:
        self._check_unit(unit_id)
        row, col = divmod(unit_id - 1, self.n_cols)
        superrow = int(_group_index(self.superrow_sizes)[row])
        supercol = int(_group_index(self.supercol_sizes)[col])
        block = (superrow - 1) * self.n_supercols + supercol
        return FactorLabels(unit_id, superrow, supercol, block, row + 1, col + 1)

    def unit_at(self, global_row: int, global_col: int) -> int:
        if not (1 <= global_row <= self.n_rows and 1 <= global_col <= self.n_cols):
            raise IndexError(f"cell ({global_row}, {global_col}) outside the {self.n_rows}x{self.n_cols} grid")
        return (global_row - 1) * self.n_cols + global_col

    def centroid(self, unit_id: int) -> tuple[float, float]:
        """Plot centre in metres; x grows rightward, y downward."""
        self._check_unit(unit_id)
        row, col = divmod(unit_id - 1, self.n_cols)
        return col * self.col_spacing, row * self.row_spacing

    def factor_arrays(self) -> dict[str, np.ndarray]:
        """1-based factor labels for all units, indexed by ``unit_id - 1``."""
        rows = np.repeat(np.arange(1, self.n_rows + 1), self.n_cols)
        cols = np.tile(np.arange(1, self.n_cols + 1), self.n_rows)
        superrow = _group_index(self.superrow_sizes)[rows - 1]
        supercol = _group_index(self.supercol_sizes)[cols - 1]
        row_start = np.concatenate([[0], np.cumsum(self.superrow_sizes)])[superrow - 1]
        col_start = np.concatenate([[0], np.cumsum(self.supercol_sizes)])[supercol - 1]
        return {
            "global_row": rows,
            "global_col": cols,
            "superrow": superrow,
            "supercol": supercol,
            "block": (superrow - 1) * self.n_supercols + supercol,
            "row_in_superrow": rows - row_start,
            "col_in_supercol": cols - col_start,
        }

    def centroids(self) -> np.ndarray:
        f = self.factor_arrays()
        return np.column_stack(
            [(f["global_col"] - 1) * self.col_spacing, (f["global_row"] - 1) * self.row_spacing]
        )


def build_layout(
    n_rows: int,
    n_cols: int,
    superrow_sizes: Sequence[int],
    supercol_sizes: Sequence[int],
    row_spacing: float = 1.0,
    col_spacing: float = 1.0,
) -> FieldLayout:
    return FieldLayout(n_rows, n_cols, tuple(superrow_sizes), tuple(supercol_sizes), row_spacing, col_spacing)


def rothamsted_layout() -> FieldLayout:
    """The 14 x 6 aphid trial: 2 x 2 blocks of 7 x 3 plots, 1 m plots with
    0.75 m / 0.5 m gaps, giving 1.75 m / 1.5 m centroid spacing."""
    return build_layout(14, 6, [7, 7], [3, 3], row_spacing=1.75, col_spacing=1.5)


def unit_factors(layout: FieldLayout, unit_id: int) -> FactorLabels:
    return layout.unit_factors(unit_id)


def centroid(layout: FieldLayout, unit_id: int) -> tuple[float, float]:
    return layout.centroid(unit_id)

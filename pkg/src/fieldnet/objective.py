"""Reduced A_s evaluation used inside the search loop.

Projecting out the blocking columns once per layout leaves the treatment
information as a Schur complement of size m x m, so each candidate design
costs two m x m eigendecompositions instead of one p x p pseudo-inverse.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from . import _kernels
from .criterion import DEFAULT_REL_TOL
from .layout import ConfigurationError, FieldLayout
from .model import Design, ModelSpec, StructuralError, nuisance_matrix
from .network import NetworkGraph


def residual_projector(N: np.ndarray, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """I - P where P projects onto the column span of ``N``."""
    U, s, _ = np.linalg.svd(N, full_matrices=False)
    keep = s**2 > rel_tol * s[0] ** 2
    U = U[:, keep]
    Q = np.eye(N.shape[0]) - U @ U.T
    return 0.5 * (Q + Q.T)


class ModelContext:
    """Everything about (model, layout, graph, m) that does not depend on the design."""

    def __init__(
        self,
        spec: ModelSpec,
        layout: FieldLayout,
        graph: NetworkGraph | None,
        m: int,
        rel_tol: float = DEFAULT_REL_TOL,
    ):
        if spec.include_network:
            if graph is None:
                raise ConfigurationError(f"model {spec.name} needs a network graph")
            if graph.n != layout.n:
                raise StructuralError(f"graph has {graph.n} vertices, layout has {layout.n}")
        self.spec = spec
        self.layout = layout
        self.graph = graph
        self.m = int(m)
        self.n = layout.n
        self.rel_tol = rel_tol
        self.has_net = bool(spec.include_network)
        self.Q = np.ascontiguousarray(residual_projector(nuisance_matrix(spec, layout), rel_tol))
        if self.has_net:
            self.QAT = np.ascontiguousarray((self.Q @ graph.weights).T)
        else:
            self.QAT = np.zeros((0, 0))
        self.blocks = layout.factor_arrays()["block"]
        # fixed scales for the rank cut-offs: ||X_tau||_F^2 = n, ||A||_F^2
        self.z_scale = float(self.n)
        self.w_scale = float(np.sum(graph.weights**2)) if self.has_net else 0.0

    def sums(self, t0: np.ndarray):
        return _kernels.treatment_sums(t0, self.Q, self.QAT if self.has_net else self.Q, self.m, self.has_net)

    def phi_zero_based(self, t0: np.ndarray) -> float:
        if self.m < 2:
            return 0.0
        Z, W = self.sums(t0)
        return float(_kernels.phi_from_sums(Z, W, self.has_net, self.rel_tol, self.z_scale, self.w_scale))

    def phi(self, design: Design | np.ndarray) -> float:
        a = design.assignment if isinstance(design, Design) else np.asarray(design)
        if a.size != self.n:
            raise StructuralError(f"design has {a.size} units, layout has {self.n}")
        return self.phi_zero_based(np.ascontiguousarray(a, dtype=np.int64) - 1)

    def pair_list(self, scope: str) -> list[np.ndarray]:
        """Candidate interchange pairs (0-based), one array per block for
        ``within_block`` or a single array for ``global``."""
        if scope == "global":
            groups = [np.arange(self.n)]
        elif scope == "within_block":
            groups = [np.flatnonzero(self.blocks == b) for b in np.unique(self.blocks)]
        else:
            raise ValueError(f"scope must be 'within_block' or 'global', got {scope!r}")
        out = []
        for units in groups:
            pairs = np.array(list(combinations(units.tolist(), 2)), dtype=np.int64).reshape(-1, 2)
            out.append(pairs)
        return out

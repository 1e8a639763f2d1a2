"""A_s criterion from the full information matrix.

This is the reference route: assemble M = X'X, take the Moore-Penrose
inverse by eigendecomposition and sum s' M^- s over every pairwise
treatment contrast. The optimizer uses the reduced kernel in
:mod:`fieldnet.objective`, which is checked against this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

DEFAULT_REL_TOL = 1e-9
ESTIMABILITY_TOL = 1e-8


class NumericError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class CriterionResult:
    phi: float
    estimable: bool
    pair_variances: np.ndarray = field(repr=False)
    pairs: tuple[tuple[int, int], ...] = field(default=(), repr=False)


def pseudo_inverse(M, rel_tol: float = DEFAULT_REL_TOL) -> tuple[np.ndarray, int]:
    """Moore-Penrose inverse of a symmetric matrix and its numerical rank.

    Eigenvalues at or below ``rel_tol * max(eigenvalue)`` count as zero.
    """
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise NumericError("matrix has non-finite entries")
    M = 0.5 * (M + M.T)
    if M.size == 0:
        return M.copy(), 0
    lam, V = np.linalg.eigh(M)
    top = lam.max()
    if top <= 0:
        return np.zeros_like(M), 0
    keep = lam > rel_tol * top
    Vk = V[:, keep]
    return (Vk / lam[keep]) @ Vk.T, int(keep.sum())


def contrast_matrix(p: int, treatment_columns: slice | range) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Columns are the full-length +1/-1 vectors for each treatment pair."""
    cols = list(range(p)[treatment_columns])
    pairs = list(combinations(range(len(cols)), 2))
    S = np.zeros((p, len(pairs)))
    for j, (a, b) in enumerate(pairs):
        S[cols[a], j] = 1.0
        S[cols[b], j] = -1.0
    return S, [(a + 1, b + 1) for a, b in pairs]


def as_criterion(
    M,
    treatment_columns: slice | range,
    rel_tol: float = DEFAULT_REL_TOL,
    estimability_tol: float = ESTIMABILITY_TOL,
    M_minus: np.ndarray | None = None,
) -> CriterionResult:
    M = np.asarray(M, dtype=float)
    if M_minus is None:
        M_minus, _ = pseudo_inverse(M, rel_tol)
    S, pairs = contrast_matrix(M.shape[0], treatment_columns)
    if not pairs:
        return CriterionResult(0.0, True, np.zeros(0), ())
    V = M_minus @ S
    variances = np.einsum("ij,ij->j", S, V)
    residual = np.linalg.norm(M @ V - S, axis=0)
    estimable = bool(np.all(residual <= estimability_tol * np.linalg.norm(S, axis=0)))
    phi = float(variances.sum()) if estimable else float("inf")
    return CriterionResult(phi, estimable, variances, tuple(pairs))


def relative_efficiency(phi_1: float, phi_2: float) -> float:
    """Eff(xi_1, xi_2) = phi(xi_1) / phi(xi_2); below 1 when xi_1 is better."""
    for name, v in (("phi_1", phi_1), ("phi_2", phi_2)):
        if not np.isfinite(v) or v <= 0:
            raise ValueError(f"{name} must be finite and > 0, got {v}")
    return float(phi_1) / float(phi_2)


def evaluate_design(spec, layout, graph, design, rel_tol: float = DEFAULT_REL_TOL) -> CriterionResult:
    from .model import build_model_matrix, information_matrix

    mm = build_model_matrix(spec, layout, graph, design)
    return as_criterion(information_matrix(mm), mm.treatment_columns, rel_tol)

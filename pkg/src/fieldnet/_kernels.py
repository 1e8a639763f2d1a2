"""Inner loops of the interchange/exchange search.

Every kernel is written once in numba-compatible numpy. With numba available
and ``FIELDNET_NUMBA`` unset or truthy they are compiled with ``@njit``;
``FIELDNET_NUMBA=0`` runs the same code as plain Python/numpy.

State layout: ``Z[s]`` and ``W[s]`` (shape ``(m, n)``) are the sums of the
rows of ``Q`` and ``QAT`` over the units carrying treatment ``s``, where
``Q`` projects out the blocking columns and ``QAT = (Q @ A).T``.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("FIELDNET_NUMBA", "1").strip().lower()
NUMBA_REQUESTED = _FLAG not in ("0", "false", "no", "off")

try:
    if not NUMBA_REQUESTED:
        raise ImportError
    from numba import njit

    USE_NUMBA = True
except ImportError:
    USE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f


BACKEND = "numba" if USE_NUMBA else "numpy"


@njit(cache=True)
def phi_from_sums(Z, W, has_net, rel_tol, z_scale, w_scale):
    """Sum of pairwise contrast variances, or inf if any pair is inestimable.

    Eigenvalues are cut at ``rel_tol`` times the larger of the spectrum top
    and a fixed scale, so matrices that are pure roundoff have rank zero.
    """
    m = Z.shape[0]
    C = Z @ Z.T
    if has_net:
        lam, V = np.linalg.eigh(W @ W.T)
        top = max(lam[m - 1], w_scale)
        if lam[m - 1] > rel_tol * top:
            keep = 0
            for k in range(m):
                if lam[k] > rel_tol * top:
                    keep += 1
            # orthonormal basis of span(W rows), one row per kept direction
            B = np.empty((keep, m))
            j = 0
            for k in range(m):
                if lam[k] > rel_tol * top:
                    B[j] = V[:, k] / np.sqrt(lam[k])
                    j += 1
            P = Z @ (B @ W).T
            C = C - P @ P.T
    C = 0.5 * (C + C.T)
    lam, V = np.linalg.eigh(C)
    top = max(lam[m - 1], z_scale)
    count = 0
    phi = 0.0
    for k in range(m):
        if lam[k] > rel_tol * top:
            count += 1
            s = V[:, k].sum()
            phi += (m - s * s) / lam[k]
    if count < m - 1:
        return np.inf
    return phi


@njit(cache=True)
def treatment_sums(t, Q, QAT, m, has_net):
    n = t.shape[0]
    Z = np.zeros((m, n))
    W = np.zeros((m, n))
    for u in range(n):
        Z[t[u]] += Q[u]
        if has_net:
            W[t[u]] += QAT[u]
    return Z, W


@njit(cache=True)
def _apply_swap(t, Z, W, Q, QAT, i, j, has_net):
    a = t[i]
    b = t[j]
    Z[a] += Q[j] - Q[i]
    Z[b] += Q[i] - Q[j]
    if has_net:
        W[a] += QAT[j] - QAT[i]
        W[b] += QAT[i] - QAT[j]
    t[i] = b
    t[j] = a


@njit(cache=True)
def sweep_interchanges(t, Q, QAT, Z, W, pairs, has_net, phi, improve_tol, rel_tol, z_scale, w_scale):
    """One systematic sweep over ``pairs``; swaps are kept on strict improvement.

    Returns ``(phi, n_accepted, n_evaluations)``; ``t``, ``Z``, ``W`` are
    updated in place.
    """
    m = Z.shape[0]
    za = np.empty(Z.shape[1])
    zb = np.empty(Z.shape[1])
    wa = np.empty(W.shape[1])
    wb = np.empty(W.shape[1])
    accepted = 0
    evals = 0
    for k in range(pairs.shape[0]):
        i = pairs[k, 0]
        j = pairs[k, 1]
        a = t[i]
        b = t[j]
        if a == b:
            continue
        za[:] = Z[a]
        zb[:] = Z[b]
        if has_net:
            wa[:] = W[a]
            wb[:] = W[b]
        _apply_swap(t, Z, W, Q, QAT, i, j, has_net)
        new = phi_from_sums(Z, W, has_net, rel_tol, z_scale, w_scale)
        evals += 1
        if new < phi * (1.0 - improve_tol):
            phi = new
            accepted += 1
        else:
            t[i] = a
            t[j] = b
            Z[a] = za
            Z[b] = zb
            if has_net:
                W[a] = wa
                W[b] = wb
    return phi, accepted, evals


@njit(cache=True)
def sweep_exchanges(t, Q, QAT, Z, W, has_net, phi, improve_tol, rel_tol, z_scale, w_scale):
    """Visit units in order; give each the best strictly improving treatment.

    Ties between candidate treatments go to the lowest label.
    """
    m = Z.shape[0]
    n = t.shape[0]
    accepted = 0
    evals = 0
    for i in range(n):
        a = t[i]
        best = phi
        best_s = -1
        for s in range(m):
            if s == a:
                continue
            Z[a] -= Q[i]
            Z[s] += Q[i]
            if has_net:
                W[a] -= QAT[i]
                W[s] += QAT[i]
            new = phi_from_sums(Z, W, has_net, rel_tol, z_scale, w_scale)
            evals += 1
            Z[a] += Q[i]
            Z[s] -= Q[i]
            if has_net:
                W[a] += QAT[i]
                W[s] -= QAT[i]
            if new < best * (1.0 - improve_tol) and new < phi * (1.0 - improve_tol):
                best = new
                best_s = s
        if best_s >= 0:
            Z[a] -= Q[i]
            Z[best_s] += Q[i]
            if has_net:
                W[a] -= QAT[i]
                W[best_s] += QAT[i]
            t[i] = best_s
            phi = best
            accepted += 1
    return phi, accepted, evals

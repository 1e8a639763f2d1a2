"""Multi-start interchange/exchange search for A_s-optimal designs.

Three design classes:

* ``resolved``: every block holds each treatment once; swaps stay inside
  a block and the search cycles block by block.
* ``equal_replicated``: swaps between any two plots.
* ``unrestricted``: a sweep of single-plot treatment exchanges followed by a
  sweep of global swaps, repeated until neither changes anything.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from . import _kernels
from .criterion import evaluate_design
from .layout import ConfigurationError, FieldLayout
from .model import Design, ModelSpec
from .network import NetworkGraph
from .objective import ModelContext

MODES = ("resolved", "equal_replicated", "unrestricted")
MAX_INIT_DRAWS = 100
BRUTE_FORCE_LIMIT = 10**7


class InitializationError(RuntimeError):
    """No estimable starting design could be drawn."""


class SearchSpaceTooLarge(RuntimeError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    m: int
    mode: str = "resolved"
    n_restarts: int = 10
    max_passes: int = 50
    seed: int = 0
    improvement_tol: float = 1e-10
    n_jobs: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}; valid modes: {', '.join(MODES)}")
        if self.m < 2:
            raise ConfigurationError(f"need at least 2 treatments, got m={self.m}")
        if self.n_restarts < 1 or self.max_passes < 1:
            raise ConfigurationError("n_restarts and max_passes must be positive")


@dataclass
class OptimizerResult:
    best_design: Design | None
    best_phi: float
    per_restart_phi: list[float] = field(default_factory=list)
    passes_used: list[int] = field(default_factory=list)
    evaluations: int = 0

    @property
    def success(self) -> bool:
        return self.best_design is not None and math.isfinite(self.best_phi)


def check_mode(layout: FieldLayout, m: int, mode: str) -> None:
    if mode not in MODES:
        raise ConfigurationError(f"unknown mode {mode!r}; valid modes: {', '.join(MODES)}")
    if m > layout.n:
        raise InitializationError(f"cannot place {m} treatments on {layout.n} plots")
    if mode == "resolved":
        sizes = np.bincount(layout.factor_arrays()["block"])[1:]
        if np.any(sizes != m):
            raise InitializationError(
                f"resolved mode needs every block to hold exactly m={m} plots, block sizes are {sizes.tolist()}"
            )
    elif mode == "equal_replicated" and layout.n % m:
        raise InitializationError(f"equal replication needs n={layout.n} divisible by m={m}")


def _draw(layout: FieldLayout, m: int, mode: str, rng: np.random.Generator) -> np.ndarray:
    n = layout.n
    if mode == "resolved":
        t = np.empty(n, dtype=np.int64)
        blocks = layout.factor_arrays()["block"]
        for b in np.unique(blocks):
            t[blocks == b] = rng.permutation(m)
        return t
    # unrestricted starts as (near-)equal replication so every treatment is present
    return rng.permutation(np.arange(n, dtype=np.int64) % m)


def random_design(
    layout: FieldLayout,
    m: int,
    mode: str,
    rng: np.random.Generator,
    context: ModelContext | None = None,
) -> Design:
    """Random starting design for ``mode``, redrawn until estimable under ``context``."""
    check_mode(layout, m, mode)
    for _ in range(MAX_INIT_DRAWS):
        t = _draw(layout, m, mode, rng)
        if context is None or math.isfinite(context.phi_zero_based(t)):
            return Design(t + 1, m)
    model = context.spec.name if context is not None else "?"
    raise InitializationError(
        f"no estimable {mode} design for model {model} in {MAX_INIT_DRAWS} random draws"
    )


def _interchange_sweeps(t, context, scope, phi, improvement_tol, max_block_sweeps, pair_lists):
    Z, W = context.sums(t)
    QAT = context.QAT if context.has_net else context.Q
    improved, evals = False, 0
    for pairs in pair_lists:
        for _ in range(max_block_sweeps):
            phi, accepted, e = _kernels.sweep_interchanges(
                t, context.Q, QAT, Z, W, pairs, context.has_net, phi, improvement_tol, context.rel_tol,
                context.z_scale, context.w_scale,
            )
            evals += e
            improved |= accepted > 0
            if accepted == 0 or scope == "global":
                break
    return phi, improved, evals


def _exchange_sweep(t, context, phi, improvement_tol):
    Z, W = context.sums(t)
    QAT = context.QAT if context.has_net else context.Q
    phi, accepted, evals = _kernels.sweep_exchanges(
        t, context.Q, QAT, Z, W, context.has_net, phi, improvement_tol, context.rel_tol,
        context.z_scale, context.w_scale,
    )
    return phi, accepted > 0, evals


def interchange_pass(
    design: Design,
    context: ModelContext,
    scope: str,
    current_phi: float | None = None,
    improvement_tol: float = 1e-10,
    max_block_sweeps: int = 50,
) -> tuple[Design, float, bool]:
    """One pass of pairwise swaps; a swap is kept only if phi strictly drops.

    ``within_block`` sweeps each block repeatedly until it stops improving
    before moving on; ``global`` makes one sweep over all unit pairs.
    Returns ``(design, phi, improved)``.
    """
    t = np.array(design.assignment - 1, dtype=np.int64)
    phi = context.phi_zero_based(t) if current_phi is None else current_phi
    if not math.isfinite(phi):
        raise ValueError("interchange_pass needs an estimable starting design")
    phi, improved, _ = _interchange_sweeps(
        t, context, scope, phi, improvement_tol, max_block_sweeps, context.pair_list(scope)
    )
    return Design(t + 1, design.m), phi, improved


def exchange_pass(
    design: Design,
    context: ModelContext,
    current_phi: float | None = None,
    improvement_tol: float = 1e-10,
) -> tuple[Design, float, bool]:
    """Visit units in order, moving each to its best strictly improving treatment.

    An inestimable start is allowed: any finite candidate improves on it.
    """
    t = np.array(design.assignment - 1, dtype=np.int64)
    phi = context.phi_zero_based(t) if current_phi is None else current_phi
    phi, improved, _ = _exchange_sweep(t, context, phi, improvement_tol)
    return Design(t + 1, design.m), phi, improved


def _run_restart(context: ModelContext, config: OptimizerConfig, rng, pair_lists):
    try:
        start = random_design(context.layout, config.m, config.mode, rng, context)
    except InitializationError:
        return None, math.inf, 0, 0
    t = np.ascontiguousarray(start.assignment - 1)
    phi = context.phi_zero_based(t)
    evals = 1
    passes = 0
    tol = config.improvement_tol
    while passes < config.max_passes:
        passes += 1
        if config.mode == "resolved":
            phi, improved, e = _interchange_sweeps(t, context, "within_block", phi, tol, config.max_passes, pair_lists)
        elif config.mode == "equal_replicated":
            phi, improved, e = _interchange_sweeps(t, context, "global", phi, tol, 1, pair_lists)
        else:
            phi, improved_x, e1 = _exchange_sweep(t, context, phi, tol)
            phi, improved_i, e2 = _interchange_sweeps(t, context, "global", phi, tol, 1, pair_lists)
            improved, e = improved_x or improved_i, e1 + e2
        evals += e
        if not improved:
            break
    # drop drift from incremental updates
    phi = context.phi_zero_based(t)
    return Design(t + 1, config.m), phi, passes, evals + 1


def optimize(
    spec: ModelSpec,
    layout: FieldLayout,
    graph: NetworkGraph | None,
    config: OptimizerConfig,
    context: ModelContext | None = None,
) -> OptimizerResult:
    if context is None:
        context = ModelContext(spec, layout, graph, config.m)
    check_mode(layout, config.m, config.mode)
    scope = "within_block" if config.mode == "resolved" else "global"
    pair_lists = context.pair_list(scope)
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(config.n_restarts)]

    def job(rng):
        return _run_restart(context, config, rng, pair_lists)

    if config.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=config.n_jobs) as pool:
            runs = list(pool.map(job, streams))
    else:
        runs = [job(rng) for rng in streams]

    result = OptimizerResult(None, math.inf)
    for design, phi, passes, evals in runs:
        result.per_restart_phi.append(phi)
        result.passes_used.append(passes)
        result.evaluations += evals
        if design is not None and phi < result.best_phi:
            result.best_design, result.best_phi = design, phi
    if result.best_design is None:
        raise InitializationError(
            f"all {config.n_restarts} restarts failed to initialise for model {spec.name}, mode {config.mode}"
        )
    return result


# --- exhaustive oracle --------------------------------------------------------


def _canonical_multiset(counts: list[int], n: int):
    """Assignments with the given treatment counts, labels in first-use order."""
    m = len(counts)
    t = [0] * n
    left = counts[:]

    def rec(pos, used):
        if pos == n:
            yield tuple(t)
            return
        for s in range(min(used + 1, m)):
            if left[s] == 0:
                continue
            left[s] -= 1
            t[pos] = s
            yield from rec(pos + 1, max(used, s + 1))
            left[s] += 1

    yield from rec(0, 0)


def _canonical_partitions(n: int, m: int):
    """Restricted growth strings of length n using exactly m labels."""
    t = [0] * n

    def rec(pos, used):
        if pos == n:
            if used == m:
                yield tuple(t)
            return
        if m - used > n - pos:
            return
        for s in range(min(used + 1, m)):
            t[pos] = s
            yield from rec(pos + 1, max(used, s + 1))

    yield from rec(0, 0)


def _stirling2(n: int, k: int) -> int:
    return sum((-1) ** j * math.comb(k, j) * (k - j) ** n for j in range(k + 1)) // math.factorial(k)


def search_space_size(layout: FieldLayout, m: int, mode: str) -> int:
    """Number of assignments enumerated by :func:`brute_force_optimum`."""
    n = layout.n
    if mode == "resolved":
        return math.factorial(m) ** (layout.n_blocks - 1)
    if mode == "equal_replicated":
        r = n // m
        return math.factorial(n) // (math.factorial(r) ** m * math.factorial(m))
    return _stirling2(n, m)


def brute_force_optimum(
    spec: ModelSpec,
    layout: FieldLayout,
    graph: NetworkGraph | None,
    mode: str,
    m: int,
    limit: int = BRUTE_FORCE_LIMIT,
) -> OptimizerResult:
    """Global minimum by enumeration, each candidate scored on the full X'X route.

    Designs equal up to treatment relabelling are enumerated once.
    """
    check_mode(layout, m, mode)
    count = search_space_size(layout, m, mode)
    if count > limit:
        raise SearchSpaceTooLarge(f"{count} candidate designs exceed the limit of {limit}")
    n = layout.n
    if mode == "equal_replicated":
        candidates = _canonical_multiset([n // m] * m, n)
    elif mode == "unrestricted":
        candidates = _canonical_partitions(n, m)
    else:
        blocks = layout.factor_arrays()["block"]
        idx = [np.flatnonzero(blocks == b) for b in np.unique(blocks)]

        def resolved():
            t = np.empty(n, dtype=np.int64)
            t[idx[0]] = np.arange(m)
            for perms in _product_perms(m, len(idx) - 1):
                for units, p in zip(idx[1:], perms):
                    t[units] = p
                yield tuple(t)

        candidates = resolved()

    best, best_phi, evals = None, math.inf, 0
    for t in candidates:
        d = Design(np.asarray(t) + 1, m)
        phi = evaluate_design(spec, layout, graph, d).phi
        evals += 1
        if phi < best_phi:
            best, best_phi = d, phi
    return OptimizerResult(best, best_phi, [best_phi], [0], evals)


def _product_perms(m: int, k: int):
    if k == 0:
        yield ()
        return
    for head in permutations(range(m)):
        for tail in _product_perms(m, k - 1):
            yield (head,) + tail

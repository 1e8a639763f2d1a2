"""Acceptance criteria on the 14 x 6 motivating layout.

Each test prints one ``[ACCEPT]`` line with its verdict, so the run log
doubles as the acceptance report.
"""

import json
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from fieldnet import (
    MODEL_NAMES,
    Design,
    ModelContext,
    ModelSpec,
    OptimizerConfig,
    brute_force_optimum,
    build_farmer_graph,
    build_king_graph,
    build_layout,
    build_model_matrix,
    evaluate_design,
    information_matrix,
    interchange_pass,
    nuisance_rank,
    optimize,
    pseudo_inverse,
    random_design,
    relative_efficiency,
    zero_graph,
)

from .conftest import equi_design
from .test_optimizer import ORACLES

SEED = 2024
RESTARTS = 10

# (graph, mode, model, best value printed in the tables)
PAPER_CELLS = [
    ("king", "unrestricted", "LNM", 130),
    ("king", "unrestricted", "BNM", 144),
    ("king", "unrestricted", "RCNM", 239),
    ("king", "unrestricted", "BRCNM", 254),
    ("king", "equal_replicated", "LNM", 140),
    ("king", "equal_replicated", "BNM", 146),
    ("king", "equal_replicated", "RCNM", 311),
    ("king", "equal_replicated", "BRCNM", 315),
    ("king", "resolved", "BNM", 148),
    ("king", "resolved", "BRCNM", 318),
    ("farmer", "unrestricted", "LNM", 130),
    ("farmer", "unrestricted", "BNM", 132),
    ("farmer", "unrestricted", "RCNM", 170),
    ("farmer", "unrestricted", "BRCNM", 174),
    ("farmer", "resolved", "BNM", 136),
    ("farmer", "resolved", "BRCNM", 189),
    (None, "unrestricted", "RCM", 126),
    (None, "unrestricted", "BRCM", 126),
]
CRITERION_OF = {"king": "C2", "farmer": "C3", None: "C4"}


@pytest.fixture
def accept(capsys):
    def report(tag, ok, detail=""):
        with capsys.disabled():
            print(f"\n[ACCEPT] {tag:<5s} {'PASS' if ok else 'FAIL'}  {detail}", flush=True)

    return report


# --- 1. analytic exactness -------------------------------------------------------


def test_c1_analytic_105(layout, rng, accept):
    t0 = time.perf_counter()
    crm = [evaluate_design(ModelSpec.from_name("CRM"), layout, None, equi_design(rng)).phi for _ in range(10)]
    res = optimize(ModelSpec.from_name("RBM"), layout, None, OptimizerConfig(m=21, mode="resolved", n_restarts=1))
    rbm = evaluate_design(ModelSpec.from_name("RBM"), layout, None, res.best_design).phi
    elapsed = time.perf_counter() - t0
    err = max(abs(v - 105.0) for v in crm + [rbm, res.best_phi])
    ok = err <= 1e-9 and elapsed < 1.0
    accept("C1", ok, f"CRM/RBM phi=105, max abs error {err:.1e}, {elapsed:.2f}s")
    assert err <= 1e-9
    assert elapsed < 1.0


# --- 2-4. optimiser against the published optima ---------------------------------


@pytest.fixture(scope="module")
def paper_runs(layout, king, farmer):
    graphs = {"king": king, "farmer": farmer, None: None}
    runs = {}
    t0 = time.perf_counter()
    for graph, mode, model, target in PAPER_CELLS:
        t = time.perf_counter()
        res = optimize(
            ModelSpec.from_name(model), layout, graphs[graph],
            OptimizerConfig(m=21, mode=mode, n_restarts=RESTARTS, seed=SEED),
        )
        runs[(graph, mode, model)] = (res, time.perf_counter() - t)
    runs["total"] = time.perf_counter() - t0
    return runs


@pytest.mark.slow
@pytest.mark.parametrize("graph,mode,model,target", PAPER_CELLS)
def test_c2_c4_optimizer_cells(paper_runs, layout, king, farmer, graph, mode, model, target, accept):
    res, secs = paper_runs[(graph, mode, model)]
    g = {"king": king, "farmer": farmer, None: None}[graph]
    # the reported value is the real phi of the returned design
    full = evaluate_design(ModelSpec.from_name(model), layout, g, res.best_design).phi
    ratio = res.best_phi / target
    ok = ratio <= 1.05 and full == pytest.approx(res.best_phi, rel=1e-9)
    accept(
        CRITERION_OF[graph], ok,
        f"{graph or '-'} {mode} {model}: best {res.best_phi:.2f} vs {target} (x{ratio:.3f}), {secs:.0f}s",
    )
    assert full == pytest.approx(res.best_phi, rel=1e-9)
    assert ratio <= 1.05


@pytest.mark.slow
def test_c2_c4_runtime_budget(paper_runs, accept):
    total = paper_runs["total"]
    accept("C2-4", total <= 1800, f"18 cells x {RESTARTS} restarts in {total:.0f}s (budget 1800s)")
    assert total <= 1800


@pytest.mark.slow
def test_c2_resolved_structure(paper_runs, layout, accept):
    blocks = layout.factor_arrays()["block"]
    ok = True
    for (graph, mode, model), (res, _) in ((k, v) for k, v in paper_runs.items() if k != "total"):
        a = res.best_design.assignment
        if mode == "resolved":
            ok &= all(sorted(a[blocks == b]) == list(range(1, 22)) for b in range(1, 5))
        elif mode == "equal_replicated":
            ok &= bool(np.all(res.best_design.replication() == 4))
    accept("C2-4", ok, "returned designs belong to their design class")
    assert ok


# --- 5. oracle equivalence ----------------------------------------------------------


def _instance(shape, graph):
    L = build_layout(*shape)
    return L, (build_king_graph(L) if graph == "king" else build_farmer_graph(L))


def test_c5_oracle_equivalence(accept):
    # instances where a single restart lands in the optimum's basin more often than not
    chosen = [o for o in ORACLES if o[-1] > 0.5]
    t0 = time.perf_counter()
    hits, graphs = 0, set()
    for shape, graph, model, m, mode, expected, _ in chosen:
        L, G = _instance(shape, graph)
        spec = ModelSpec.from_name(model)
        bf = brute_force_optimum(spec, L, G, mode, m).best_phi
        op = optimize(spec, L, G, OptimizerConfig(m=m, mode=mode, n_restarts=5, seed=SEED)).best_phi
        if op == pytest.approx(bf, rel=1e-9, abs=1e-12) and bf == pytest.approx(expected, rel=1e-9):
            hits += 1
            graphs.add(graph)
    elapsed = time.perf_counter() - t0
    ok = hits == len(chosen) and len(chosen) >= 3 and graphs == {"king", "farmer"} and elapsed < 60
    accept("C5", ok, f"{hits}/{len(chosen)} tiny instances match enumeration with 5 restarts, {elapsed:.1f}s")
    assert ok


def test_c5_report_narrow_basins(accept):
    # report only: instances where pair swaps often stall in a local optimum
    lines = [f"{s[0]}x{s[1]} {g} {mod} {mode}: {rate:.0%} of restarts" for s, g, mod, _, mode, _, rate in ORACLES if rate <= 0.5]
    accept("C5*", True, "narrow basins (not part of C5): " + "; ".join(lines))


# --- 6. efficiency arithmetic -----------------------------------------------------------


def _sig2(x):
    return float(f"{x:.2g}")


@pytest.mark.parametrize(
    "num,den,quoted",
    [(254, 642, 0.40), (239, 373, 0.88), (318, 513, 0.62), (189, 282, 0.67)],
)
def test_c6_efficiency_ratios(num, den, quoted, accept):
    eff = relative_efficiency(num, den)
    ok = _sig2(eff) == quoted
    accept("C6", ok, f"{num}/{den} = {eff:.4f} -> {_sig2(eff):.2f}, quoted {quoted:.2f}")
    assert _sig2(eff) == quoted


# --- 7. property suites --------------------------------------------------------------------


def test_c7a_generalised_inverse(layout, king, rng, accept):
    worst = 0.0
    for _ in range(100):
        d = equi_design(rng)
        for name in MODEL_NAMES:
            M = information_matrix(build_model_matrix(ModelSpec.from_name(name), layout, king, d))
            Mm, _ = pseudo_inverse(M)
            worst = max(worst, np.linalg.norm(M @ Mm @ M - M) / np.linalg.norm(M))
    accept("C7a", worst <= 1e-8, f"max ||MM^-M - M||/||M|| = {worst:.1e} over 100 designs x 8 models")
    assert worst <= 1e-8


def test_c7b_relabelling_invariance(layout, king, rng, accept):
    spec = ModelSpec.from_name("BRCNM")
    d = equi_design(rng)
    base = evaluate_design(spec, layout, king, d).phi
    worst = 0.0
    for _ in range(100):
        perm = rng.permutation(21) + 1
        other = Design(perm[d.assignment - 1], 21)
        worst = max(worst, abs(evaluate_design(spec, layout, king, other).phi - base) / base)
    accept("C7b", worst <= 1e-9, f"max relative change {worst:.1e} over 100 relabellings")
    assert worst <= 1e-9


def test_c7c_nesting_monotonicity(layout, king, farmer, rng, accept):
    chains = [("CRM", "RBM", "BRCM"), ("CRM", "LNM", "BNM", "BRCNM")]
    violations = 0
    for g in (king, farmer):
        for _ in range(20):
            d = equi_design(rng)
            for chain in chains:
                phis = [evaluate_design(ModelSpec.from_name(c), layout, g, d).phi for c in chain]
                violations += sum(b < a * (1 - 1e-9) for a, b in zip(phis, phis[1:]))
    accept("C7c", violations == 0, f"{violations} decreases along nested model chains (40 designs)")
    assert violations == 0


def test_c7d_interchange_preserves_structure(layout, king, rng, accept):
    blocks = layout.factor_arrays()["block"]
    ok = True
    ctx = ModelContext(ModelSpec.from_name("BRCNM"), layout, king, 21)
    d0 = random_design(layout, 21, "resolved", rng, ctx)
    d, _, _ = interchange_pass(d0, ctx, "within_block", max_block_sweeps=1)
    ok &= all(sorted(d.assignment[blocks == b]) == list(range(1, 22)) for b in range(1, 5))
    d0 = equi_design(rng)
    d, _, _ = interchange_pass(d0, ctx, "global")
    ok &= bool(np.array_equal(d.replication(), d0.replication()))
    accept("C7d", ok, "within-block and global passes keep resolution and replication")
    assert ok


def test_c7e_zero_graph(layout, rng, accept):
    worst = 0.0
    for _ in range(10):
        d = equi_design(rng)
        a = evaluate_design(ModelSpec.from_name("LNM"), layout, zero_graph(84), d).phi
        b = evaluate_design(ModelSpec.from_name("CRM"), layout, None, d).phi
        worst = max(worst, abs(a - b) / b)
    accept("C7e", worst <= 1e-9, f"max relative |LNM(0) - CRM| = {worst:.1e}")
    assert worst <= 1e-9


def test_c7f_brcm_nuisance_rank(layout, accept):
    rank = nuisance_rank(ModelSpec.from_name("BRCM"), layout)
    nested = nuisance_rank(ModelSpec.from_name("BRCM", "nested"), layout)
    accept("C7f", rank == 37, f"nuisance_rank(BRCM) = {rank} (nested coding {nested}), required 37")
    assert rank == 37


# --- 8. determinism -----------------------------------------------------------------------------


def _cli(*args, cwd):
    env = dict(os.environ)
    return subprocess.run(
        [sys.executable, "-m", "fieldnet", *args], cwd=cwd, env=env, capture_output=True, text=True, check=True
    )


def test_c8_determinism(tmp_path, accept):
    tables = []
    for run in ("one", "two"):
        d = tmp_path / run
        d.mkdir()
        _cli("generate", "--model", "BNM", "--graph", "king", "--mode", "resolved",
             "--seed", "42", "--restarts", "2", "--max-passes", "2", "--out", "design.csv", cwd=d)
        _cli("evaluate", "design.csv", "--graph", "king", "--graph", "farmer", "--seed", "42", "--out", "report.json", cwd=d)
        report = json.loads((d / "report.json").read_text())
        tables.append(json.dumps(report["phi_table"], sort_keys=True).encode())
        tables.append((d / "design.csv").read_bytes())
    ok = tables[0] == tables[2] and tables[1] == tables[3]
    accept("C8", ok, f"phi_table {len(tables[0])} bytes, identical across runs: {ok}")
    assert ok


# --- report only --------------------------------------------------------------------------------


@pytest.mark.slow
def test_report_neighbour_balance(paper_runs, king, accept):
    # how often a plot shares its treatment with a King neighbour, optimised vs random
    A = king.weights > 0

    def same(d):
        a = d.assignment
        return int(np.sum(A & (a[:, None] == a[None, :])) // 2)

    res, _ = paper_runs[("king", "resolved", "BRCNM")]
    rnd = np.mean([same(equi_design(np.random.default_rng(s))) for s in range(50)])
    accept("info", True, f"same-treatment King neighbour pairs: optimal BRCNM {same(res.best_design)}, random mean {rnd:.1f}")

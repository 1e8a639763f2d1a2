"""Time the search kernels under numba and under the numpy fallback.

    python3 benchmarks/bench_kernels.py [--evals 300] [--model BRCNM]

Each backend runs in its own interpreter because the flag is read at import.
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from fieldnet import _kernels, rothamsted_layout, build_king_graph, ModelSpec, ModelContext

evals, model = int(sys.argv[1]), sys.argv[2]
L = rothamsted_layout()
ctx = ModelContext(ModelSpec.from_name(model), L, build_king_graph(L), 21)
QAT = ctx.QAT if ctx.has_net else ctx.Q
t = np.ascontiguousarray(np.random.default_rng(0).permutation(np.arange(84) % 21))
ctx.phi_zero_based(t)  # compile / warm up

t0 = time.perf_counter()
for _ in range(evals):
    ctx.phi_zero_based(t)
per_eval = (time.perf_counter() - t0) / evals

pairs = ctx.pair_list("global")[0][:evals]
Z, W = ctx.sums(t)
phi = ctx.phi_zero_based(t)
_kernels.sweep_interchanges(t.copy(), ctx.Q, QAT, Z.copy(), W.copy(), pairs[:2], ctx.has_net, phi,
                            1e-10, ctx.rel_tol, ctx.z_scale, ctx.w_scale)
t0 = time.perf_counter()
_, _, n = _kernels.sweep_interchanges(t, ctx.Q, QAT, Z, W, pairs, ctx.has_net, phi,
                                      1e-10, ctx.rel_tol, ctx.z_scale, ctx.w_scale)
per_swap = (time.perf_counter() - t0) / max(n, 1)
print(json.dumps({"backend": _kernels.BACKEND, "per_eval_us": per_eval * 1e6, "per_swap_us": per_swap * 1e6}))
"""


def run(flag, evals, model):
    env = dict(os.environ, FIELDNET_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", WORKER, str(evals), model], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--evals", type=int, default=300)
    ap.add_argument("--model", default="BRCNM")
    args = ap.parse_args()
    rows = [run(flag, args.evals, args.model) for flag in ("1", "0")]
    print(f"{args.model}, King graph, 84 plots, m = 21")
    print(f"{'backend':<8s} {'phi eval (us)':>14s} {'swap step (us)':>15s}")
    for r in rows:
        print(f"{r['backend']:<8s} {r['per_eval_us']:14.1f} {r['per_swap_us']:15.1f}")
    if len(rows) == 2:
        print(f"speed-up  {rows[1]['per_eval_us'] / rows[0]['per_eval_us']:14.2f} "
              f"{rows[1]['per_swap_us'] / rows[0]['per_swap_us']:15.2f}")


if __name__ == "__main__":
    main()

"""Command-line driver: ``fieldnet {generate,evaluate,compare,graph}``.

Exit status: 0 on success, 1 on invalid input or usage, 2 when a run fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import _kernels
from .criterion import evaluate_design, relative_efficiency
from .io import RunConfig, load_config, read_design, write_design
from .layout import ConfigurationError
from .model import MODEL_NAMES, ModelSpec
from .network import build_farmer_graph, build_king_graph, load_graph, save_graph, zero_graph
from .optimizer import MODES, OptimizerConfig, optimize
from .report import evaluate_table

log = logging.getLogger("fieldnet")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _csv_ints(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


def _add_run_options(p):
    p.add_argument("--config", type=Path, help="flat key = value run configuration")
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--superrows", type=_csv_ints, help="comma list of superrow sizes")
    p.add_argument("--supercols", type=_csv_ints, help="comma list of supercolumn sizes")
    p.add_argument("--row-spacing", dest="row_spacing_m", type=float)
    p.add_argument("--col-spacing", dest="col_spacing_m", type=float)
    p.add_argument("--drill-direction", choices=("down", "up"))
    p.add_argument("--spray-direction", choices=("right", "left"))
    p.add_argument("--rowcol-coding", choices=("position", "nested"))
    p.add_argument("--treatments", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fieldnet", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    gen = sub.add_parser("generate", help="search for an optimal design")
    _add_run_options(gen)
    gen.add_argument("--model")
    gen.add_argument("--graph", help="king, farmer, zero or an edge-list path")
    gen.add_argument("--mode")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--restarts", type=int)
    gen.add_argument("--max-passes", dest="max_passes", type=int)
    gen.add_argument("--out", type=Path, default=Path("design.csv"), help="design CSV to write")
    gen.add_argument("--result", type=Path, help="JSON result (default: <out>.json)")

    ev = sub.add_parser("evaluate", help="phi of design(s) under model(s)")
    _add_run_options(ev)
    ev.add_argument("designs", nargs="*", type=Path)
    ev.add_argument("--models", default=",".join(MODEL_NAMES), help="comma list of models")
    ev.add_argument("--graph", action="append", help="graph for network models (repeatable)")
    ev.add_argument("--seed", type=int)
    ev.add_argument("--out", type=Path, help="JSON report to write")

    cmp_ = sub.add_parser("compare", help="relative efficiency phi(A)/phi(B)")
    _add_run_options(cmp_)
    cmp_.add_argument("design_a", type=Path)
    cmp_.add_argument("design_b", type=Path)
    cmp_.add_argument("--model")
    cmp_.add_argument("--graph")

    gr = sub.add_parser("graph", help="build and save a king or farmer graph")
    _add_run_options(gr)
    gr.add_argument("--graph", required=True, choices=("king", "farmer"))
    gr.add_argument("--out", type=Path, required=True)
    return parser


def _run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    keys = (
        "rows", "cols", "superrows", "supercols", "row_spacing_m", "col_spacing_m",
        "drill_direction", "spray_direction", "rowcol_coding", "treatments",
        "model", "mode", "seed", "restarts", "max_passes",
    )
    overrides = {k: getattr(args, k, None) for k in keys}
    graph = getattr(args, "graph", None)
    if isinstance(graph, str):
        overrides["graph"] = graph
    return cfg.with_overrides(**overrides).validate()


def resolve_graph(source: str, cfg: RunConfig, layout):
    name = source.strip()
    if name.lower() == "king":
        return build_king_graph(layout)
    if name.lower() == "farmer":
        return build_farmer_graph(layout, cfg.drill_direction, cfg.spray_direction)
    if name.lower() == "zero":
        return zero_graph(layout.n)
    path = Path(name)
    if not path.exists():
        raise ConfigurationError(f"graph {name!r} is not king, farmer, zero or an existing file")
    g = load_graph(path)
    if g.n != layout.n:
        raise ConfigurationError(f"graph {name} has {g.n} vertices, layout has {layout.n}")
    return g


def cmd_generate(args) -> int:
    cfg = _run_config(args)
    layout = cfg.layout()
    spec = ModelSpec.from_name(cfg.model, cfg.rowcol_coding)
    graph = resolve_graph(cfg.graph, cfg, layout) if spec.include_network else None
    m = cfg.n_treatments()
    opt = OptimizerConfig(m, cfg.mode, cfg.restarts, cfg.max_passes, cfg.seed)
    log.info("optimising %s (%s, %s graph) with %d restarts", spec.name, cfg.mode, cfg.graph, cfg.restarts)
    res = optimize(spec, layout, graph, opt)
    write_design(res.best_design, layout, args.out)
    result_path = args.result or args.out.with_suffix(".json")
    payload = {
        "model": spec.name,
        "graph": graph.label if graph is not None else None,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "treatments": m,
        "best_phi": res.best_phi,
        "per_restart_phi": [p if math.isfinite(p) else "inf" for p in res.per_restart_phi],
        "passes_used": res.passes_used,
        "evaluations": res.evaluations,
        "design_file": str(args.out),
        "backend": _kernels.BACKEND,
    }
    result_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(f"best_phi = {res.best_phi:.12g}  ({args.out}, {result_path})")
    return 0


def cmd_evaluate(args) -> int:
    if not args.designs:
        raise UsageError("evaluate: at least one design file is required")
    cfg = _run_config(args)
    layout = cfg.layout()
    models = [m.strip().upper() for m in args.models.split(",") if m.strip()]
    for m in models:
        if m not in MODEL_NAMES:
            raise UsageError(f"unknown model {m!r}; valid models: {', '.join(MODEL_NAMES)}")
    sources = args.graph or [cfg.graph]
    graphs = {s: resolve_graph(s, cfg, layout) for s in sources}
    designs, paths = {}, {}
    for p in args.designs:
        name = p.stem if p.stem not in designs else str(p)
        designs[name] = read_design(p, layout, cfg.treatments)
        paths[name] = str(p)
    m_values = {d.m for d in designs.values()}
    if len(m_values) > 1:
        # pad to a common treatment count so columns are comparable
        m = max(m_values)
        designs = {k: type(d)(d.assignment, m) for k, d in designs.items()}
    report = evaluate_table(designs, layout, graphs, models, cfg.rowcol_coding, paths, cfg.seed)
    print(report.format_text())
    if args.out:
        report.write(args.out)
    return 0


def cmd_compare(args) -> int:
    cfg = _run_config(args)
    layout = cfg.layout()
    spec = ModelSpec.from_name(cfg.model, cfg.rowcol_coding)
    graph = resolve_graph(cfg.graph, cfg, layout) if spec.include_network else None
    a = read_design(args.design_a, layout, cfg.treatments)
    b = read_design(args.design_b, layout, cfg.treatments)
    m = max(a.m, b.m)
    phi_a = evaluate_design(spec, layout, graph, type(a)(a.assignment, m)).phi
    phi_b = evaluate_design(spec, layout, graph, type(b)(b.assignment, m)).phi
    print(f"phi(A) = {phi_a:.12g}")
    print(f"phi(B) = {phi_b:.12g}")
    print(f"Eff = phi(A)/phi(B) = {relative_efficiency(phi_a, phi_b):.12g}")
    return 0


def cmd_graph(args) -> int:
    cfg = _run_config(args)
    layout = cfg.layout()
    save_graph(resolve_graph(args.graph, cfg, layout), args.out)
    print(f"wrote {args.graph} graph ({layout.n} vertices) to {args.out}")
    return 0


COMMANDS = {"generate": cmd_generate, "evaluate": cmd_evaluate, "compare": cmd_compare, "graph": cmd_graph}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ConfigurationError, ValueError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, ArithmeticError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line driver: generate instances, run certifiers, emit reports.

Reports are JSON-first; the human-readable table and CSV are derived from
the same data.  Every report carries full-precision values alongside
display values rounded to the nearest hundredth, downward for lower
bounds and exact values, upward for upper bounds, so displayed intervals
always contain the true ones.  NSC decisions are made on full precision
only.  Identical configurations (including seeds) produce byte-identical
JSON up to the "timing" block.

Exit codes: 0 success, 1 error, 2 the requested NSC certification failed.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from decimal import ROUND_CEILING, ROUND_FLOOR, ROUND_HALF_EVEN, Decimal
from pathlib import Path

from . import __version__
from .alpha import lp_count_for_scores, score_all_subsets
from .bounds import (
    BoundReport,
    NscDecision,
    kmax_lower_bound,
    lp_baseline_alpha,
    optimized_pick_l,
    pick_l_upper_bound,
)
from .exhaustive import EsmBudgetError, esm_alpha
from .matrices import SensingMatrix, gen_gaussian, gen_partial_fourier, load_matrix, save_matrix
from .tomography import (
    build_random_walk_instance,
    complete_graph,
    load_edge_list,
    tree_plus_random_edges,
)
from .tree_search import tsa, tsa_bound_report, write_trace_csv

_EXIT_OK = 0
_EXIT_ERROR = 1
_EXIT_NSC_FAILS = 2


def display_round(value: float, direction: str) -> str:
    """Hundredths with directed rounding: "down" for lower bounds and exact
    values, "up" for upper bounds.  The value is first rounded to the
    nearest 1e-12 (well below solver tolerances) so that binary noise like
    0.57 -> 0.5699999... cannot flip a tick."""
    d = Decimal(value).quantize(Decimal("1e-12"), rounding=ROUND_HALF_EVEN)
    mode = ROUND_FLOOR if direction == "down" else ROUND_CEILING
    return str(d.quantize(Decimal("0.01"), rounding=mode))


def report_dict(report: BoundReport, extra_lp: int = 0) -> dict:
    return {
        "method": report.method,
        "k": report.k,
        "l": report.l,
        "lower": report.lower,
        "upper": report.upper,
        "exact": report.exact,
        "lp_solves": report.lp_solves + extra_lp,
        "nsc_decision": report.nsc_decision.value,
        "display": {
            "lower": display_round(report.lower, "down"),
            "upper": display_round(report.upper, "up" if not report.exact else "down"),
        },
    }


def _matrix_from_args(args) -> SensingMatrix:
    if args.matrix:
        return load_matrix(args.matrix, fmt=args.format_in)
    kind, m, n, seed = args.generate
    gen = {"gaussian": gen_gaussian, "fourier": gen_partial_fourier}[kind]
    return gen(int(m), int(n), int(seed))


def _add_matrix_source(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--matrix", help="matrix file path")
    src.add_argument(
        "--generate",
        nargs=4,
        metavar=("KIND", "M", "N", "SEED"),
        help="generate instead of loading: KIND is gaussian|fourier",
    )
    p.add_argument("--format-in", default="csv", choices=["csv", "whitespace"],
                   help="input matrix file format")


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="write the JSON report here (default: stdout)")
    p.add_argument("--csv-out", help="also write the result rows as flat CSV")
    p.add_argument("--table", action="store_true", help="also print a human-readable table")


def _threads(args) -> int:
    env = os.environ.get("NSCCERT_THREADS")
    if args.threads is not None:
        return max(1, args.threads)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _emit(payload: dict, args) -> None:
    payload["schema"] = "nsccert-report/1"
    payload["version"] = __version__
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    if getattr(args, "csv_out", None):
        _write_results_csv(payload, args.csv_out)


_CSV_FIELDS = ["method", "k", "l", "lower", "upper", "exact", "nsc_decision", "lp_solves"]


def _write_results_csv(payload: dict, path: str) -> None:
    rows = payload.get("results", [])
    if isinstance(rows, dict):  # kmax-style single-result payloads
        rows = [rows]
    flat = []
    for row in rows:
        if "methods" in row:  # compare grid
            for rep in row["methods"].values():
                if "method" in rep:
                    flat.append(rep)
        elif "method" in row:
            flat.append(row)
    lines = [",".join(_CSV_FIELDS + ["display_lower", "display_upper"])]
    for rep in flat:
        cells = [str(rep.get(f, "")) for f in _CSV_FIELDS]
        cells += [rep["display"]["lower"], rep["display"]["upper"]]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def _matrix_meta(matrix: SensingMatrix) -> dict:
    return {"provenance": matrix.provenance, "rows": matrix.rows, "cols": matrix.cols}


def _decision_exit(decisions) -> int:
    return _EXIT_NSC_FAILS if NscDecision.FAILS.value in decisions else _EXIT_OK


def cmd_gen(args) -> int:
    gen = {"gaussian": gen_gaussian, "fourier": gen_partial_fourier}[args.kind]
    matrix = gen(args.m, args.n, args.seed)
    save_matrix(matrix, args.out)
    print(f"wrote {matrix.rows}x{matrix.cols} matrix ({matrix.provenance}) to {args.out}")
    return _EXIT_OK


def cmd_pick(args) -> int:
    t0 = time.perf_counter()
    matrix = _matrix_from_args(args)
    scores = score_all_subsets(matrix, args.l, processes=_threads(args))
    precompute_lp = lp_count_for_scores(matrix.cols, args.l)
    report = pick_l_upper_bound(scores, args.k, args.l)
    payload = {
        "command": "pick",
        "matrix": _matrix_meta(matrix),
        "params": {"k": args.k, "l": args.l},
        "results": [report_dict(report, extra_lp=precompute_lp)],
        "timing": {"elapsed_s": time.perf_counter() - t0},
    }
    _emit(payload, args)
    return _decision_exit([report.nsc_decision.value])


def cmd_opt_pick(args) -> int:
    t0 = time.perf_counter()
    matrix = _matrix_from_args(args)
    scores = score_all_subsets(matrix, args.l, processes=_threads(args))
    precompute_lp = lp_count_for_scores(matrix.cols, args.l)
    report = optimized_pick_l(scores, args.k, args.l, n=matrix.cols,
                              max_constraints=args.max_constraints)
    payload = {
        "command": "opt-pick",
        "matrix": _matrix_meta(matrix),
        "params": {"k": args.k, "l": args.l, "max_constraints": args.max_constraints},
        "results": [report_dict(report, extra_lp=precompute_lp)],
        "timing": {"elapsed_s": time.perf_counter() - t0},
    }
    _emit(payload, args)
    return _decision_exit([report.nsc_decision.value])


def cmd_tsa(args) -> int:
    t0 = time.perf_counter()
    matrix = _matrix_from_args(args)
    result = tsa(
        matrix,
        args.k,
        args.l,
        max_iterations=args.max_iterations,
        max_time=args.max_time,
        certify_only=args.certify_only,
        processes=_threads(args),
    )
    report = tsa_bound_report(result)
    payload = {
        "command": "tsa",
        "matrix": _matrix_meta(matrix),
        "params": {
            "k": args.k,
            "l": args.l,
            "max_iterations": args.max_iterations,
            "max_time": args.max_time,
            "certify_only": args.certify_only,
        },
        "results": [report_dict(report)],
        "search": {
            "stop_reason": result.stop_reason.value,
            "iterations": result.iterations,
            "nodes_attached": result.nodes_attached,
            "height_k_nodes": result.height_k_nodes,
            "witness_subset": list(result.witness_subset) if result.witness_subset else None,
        },
        "timing": {"elapsed_s": time.perf_counter() - t0},
    }
    if args.trace_out:
        write_trace_csv(result, args.trace_out)
        payload["trace_csv"] = args.trace_out
    _emit(payload, args)
    return _decision_exit([report.nsc_decision.value])


def cmd_esm(args) -> int:
    t0 = time.perf_counter()
    matrix = _matrix_from_args(args)
    try:
        result = esm_alpha(matrix, args.k, budget=args.budget, processes=_threads(args))
    except EsmBudgetError as exc:
        print(
            f"refused: {exc.num_subsets} subsets exceed the budget of {args.budget}; "
            f"estimated {exc.lp_solves} LP solves, about {exc.estimated_seconds:.3g} s",
            file=sys.stderr,
        )
        return _EXIT_ERROR
    payload = {
        "command": "esm",
        "matrix": _matrix_meta(matrix),
        "params": {"k": args.k, "budget": args.budget},
        "results": [report_dict(result.report)],
        "argmax": list(result.argmax),
        "timing": {"elapsed_s": time.perf_counter() - t0},
    }
    _emit(payload, args)
    return _decision_exit([result.report.nsc_decision.value])


def cmd_lp_baseline(args) -> int:
    t0 = time.perf_counter()
    matrix = _matrix_from_args(args)
    report = lp_baseline_alpha(matrix, args.k)
    payload = {
        "command": "lp-baseline",
        "matrix": _matrix_meta(matrix),
        "params": {"k": args.k},
        "results": [report_dict(report)],
        "timing": {"elapsed_s": time.perf_counter() - t0},
    }
    _emit(payload, args)
    return _decision_exit([report.nsc_decision.value])


def cmd_kmax(args) -> int:
    t0 = time.perf_counter()
    payload: dict = {"command": "kmax", "params": {"l": args.l}}
    if args.alpha is not None:
        alpha_l = args.alpha
        n = args.n
    else:
        matrix = _matrix_from_args(args)
        scores = score_all_subsets(matrix, args.l, processes=_threads(args))
        alpha_l = max(s.value for s in scores)
        n = matrix.cols
        payload["matrix"] = _matrix_meta(matrix)
    trivial = alpha_l <= 0.0
    k_lb = kmax_lower_bound(alpha_l, args.l, n=n)
    payload["results"] = {
        "alpha_l": alpha_l,
        "kmax_lower_bound": k_lb,
        "trivial_null_space": trivial,
        "display": {"alpha_l": display_round(alpha_l, "down")},
    }
    payload["timing"] = {"elapsed_s": time.perf_counter() - t0}
    _emit(payload, args)
    return _EXIT_OK


def cmd_tomo(args) -> int:
    if args.complete:
        edges = complete_graph(args.nodes)
    elif args.edges_file:
        _, edges = load_edge_list(args.edges_file)
    else:
        edges = tree_plus_random_edges(args.nodes, args.num_edges, args.seed)
    instance = build_random_walk_instance(
        edges, args.paths, args.walk_len, args.seed, num_nodes=args.nodes
    )
    save_matrix(instance.routing, args.out)
    meta = {
        "command": "tomo",
        "num_nodes": instance.num_nodes,
        "num_edges": len(instance.edges),
        "num_paths": len(instance.paths),
        "walk_len": args.walk_len,
        "seed": args.seed,
        "matrix_file": args.out,
        "provenance": instance.routing.provenance,
    }
    meta_path = Path(args.out).with_suffix(".meta.json")
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(
        f"wrote {instance.routing.rows}x{instance.routing.cols} routing matrix "
        f"to {args.out} (+ {meta_path.name})"
    )
    return _EXIT_OK


def cmd_compare(args) -> int:
    """Pick-1/pick-2/TSA/ESM/LP-baseline side by side for k = 1..K."""
    t0 = time.perf_counter()
    matrix = _matrix_from_args(args)
    threads = _threads(args)
    ks = list(range(1, args.k_max + 1))
    scores1 = score_all_subsets(matrix, 1, processes=threads)
    lp1 = lp_count_for_scores(matrix.cols, 1)
    scores2 = score_all_subsets(matrix, 2, processes=threads) if args.k_max >= 2 else None
    lp2 = lp_count_for_scores(matrix.cols, 2) if scores2 else 0
    rows = []
    decisions = []
    for k in ks:
        per_k = {"k": k, "methods": {}}
        per_k["methods"]["pick_1"] = report_dict(pick_l_upper_bound(scores1, k, 1), extra_lp=lp1)
        if scores2 and k >= 2:
            per_k["methods"]["pick_2"] = report_dict(pick_l_upper_bound(scores2, k, 2), extra_lp=lp2)
        tsa_l = 2 if (scores2 and k > 2) else 1
        result = tsa(matrix, k, tsa_l, processes=threads)
        per_k["methods"]["tsa"] = report_dict(tsa_bound_report(result))
        if not args.skip_esm:
            try:
                esm = esm_alpha(matrix, k, budget=args.budget, processes=threads)
                per_k["methods"]["esm"] = report_dict(esm.report)
            except EsmBudgetError as exc:
                per_k["methods"]["esm"] = {"refused": str(exc)}
        if not args.skip_lp_baseline:
            per_k["methods"]["lp_baseline"] = report_dict(lp_baseline_alpha(matrix, k))
        rows.append(per_k)
        decisions.append(per_k["methods"]["tsa"]["nsc_decision"])
    kmax_from_tsa = 0
    for row in rows:
        if row["methods"]["tsa"]["nsc_decision"] == "holds":
            kmax_from_tsa = row["k"]
        else:
            break
    payload = {
        "command": "compare",
        "matrix": _matrix_meta(matrix),
        "params": {"k_max": args.k_max},
        "results": rows,
        "kmax_certified": kmax_from_tsa,
        "timing": {"elapsed_s": time.perf_counter() - t0},
    }
    _emit(payload, args)
    if args.table:
        _print_compare_table(rows)
    return _EXIT_OK


def _print_compare_table(rows) -> None:
    preferred = ["pick_1", "pick_2", "tsa", "esm", "lp_baseline"]
    methods = [m for m in preferred if any(m in row["methods"] for row in rows)]
    for row in rows:
        for name in row["methods"]:
            if name not in methods:
                methods.append(name)
    ks = [row["k"] for row in rows]
    header = "method".ljust(14) + "".join(f"alpha_{k}".rjust(10) for k in ks)
    print(header)
    print("-" * len(header))
    for name in methods:
        cells = []
        for row in rows:
            r = row["methods"].get(name)
            if r is None or "refused" in r:
                cells.append("-".rjust(10))
            elif r["exact"]:
                cells.append(r["display"]["lower"].rjust(10))
            elif r["lower"] > 0.0:
                cells.append((r["display"]["lower"] + "-" + r["display"]["upper"]).rjust(10))
            else:
                cells.append(r["display"]["upper"].rjust(10))
        print(name.ljust(14) + "".join(cells))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nsccert",
        description="Certify the null space condition for l1 sparse recovery.",
    )
    parser.add_argument("--version", action="version", version=f"nsccert {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a sensing matrix file")
    p.add_argument("kind", choices=["gaussian", "fourier"])
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    def analysis_parser(name, help_text):
        q = sub.add_parser(name, help=help_text)
        _add_matrix_source(q)
        _add_output(q)
        q.add_argument("--threads", type=int, default=None,
                       help="worker cap (default: NSCCERT_THREADS or machine parallelism)")
        return q

    p = analysis_parser("pick", "pick-l upper bound on alpha_k")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.set_defaults(func=cmd_pick)

    p = analysis_parser("opt-pick", "optimized pick-l upper bound")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--max-constraints", type=int, default=2_000_000)
    p.set_defaults(func=cmd_opt_pick)

    p = analysis_parser("tsa", "tree search: exact alpha_k or certified interval")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, default=1)
    p.add_argument("--max-iterations", type=int, default=None)
    p.add_argument("--max-time", type=float, default=None)
    p.add_argument("--certify-only", action="store_true",
                   help="stop once NSC is decided instead of pinning alpha_k")
    p.add_argument("--trace-out", help="write the GLB/GUB trace CSV here")
    p.set_defaults(func=cmd_tsa)

    p = analysis_parser("esm", "exhaustive search for exact alpha_k")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--budget", type=int, default=10_000_000,
                   help="refuse enumerations beyond this many subsets")
    p.set_defaults(func=cmd_esm)

    p = analysis_parser("lp-baseline", "matrix-wide LP relaxation bound")
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_lp_baseline)

    p = sub.add_parser("kmax", help="recoverable-sparsity lower bound from alpha_l")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--alpha", type=float, help="use this alpha_l (or an upper bound of it)")
    src.add_argument("--matrix", help="compute exact alpha_l from this matrix file")
    p.add_argument("--generate", nargs=4, metavar=("KIND", "M", "N", "SEED"))
    p.add_argument("--format-in", default="csv", choices=["csv", "whitespace"])
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--n", type=int, default=None,
                   help="column count (only needed for --alpha 0, trivial null space)")
    p.add_argument("--threads", type=int, default=None)
    _add_output(p)
    p.set_defaults(func=cmd_kmax)

    p = sub.add_parser("tomo", help="build a network tomography routing matrix")
    p.add_argument("--nodes", type=int, required=True)
    topo = p.add_mutually_exclusive_group(required=True)
    topo.add_argument("--complete", action="store_true", help="complete graph on the nodes")
    topo.add_argument("--edges-file", help="edge list file, 'u v' per line")
    topo.add_argument("--num-edges", type=int,
                      help="random connected graph: spanning tree plus extra edges")
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--walk-len", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tomo)

    p = analysis_parser("compare", "run every certifier and print a comparison grid")
    p.add_argument("--k-max", type=int, default=5)
    p.add_argument("--budget", type=int, default=10_000_000)
    p.add_argument("--skip-esm", action="store_true")
    p.add_argument("--skip-lp-baseline", action="store_true")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Batch experiment harness: ``loo-lab <kind> [options]``.

Each kind sweeps one or more parameters and writes ``<kind>.csv`` (or
``.json``) plus ``<kind>.summary.json`` into ``--out``.  Options may also
come from a ``key=value`` file given with ``--config``; the command line wins.

Exit codes: 0 success, 2 invalid input, 3 solver failed to converge.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .baselines import star_failure_demo
from .core import LN2, CapacityError, ConvergenceError, default_features
from .experts import ThresholdPartitions, enumerate_partitions, max_class_regret, mixture_bound
from .graph import (
    build_graph,
    certify_star_lower_bound,
    degeneracy,
    half_assign,
    half_bound,
    make_class,
    max_node_regret,
    peel_assign,
    peel_bound,
    solve_equalizer_graph,
)
from .multinomial import add_constant_regret_range, add_one_regret, solve_equalizer
from .oracle import compile_graph, compile_multinomial, solve_minmax

KINDS = (
    "multinomial-equalizer",
    "add1-rate",
    "graph-solve",
    "peel",
    "star-lower-bound",
    "experts-sweep",
    "pnml-demo",
    "oracle-check",
)
# columns holding a regret-like quantity, converted by --base
REGRET_COLUMNS = {"regret", "bound", "spread", "add1_regret", "pnml", "pnml2", "equalizer",
                  "oracle", "solver", "threshold", "implied", "half_regret", "half_bound",
                  "abs_diff", "N_regret", "N2_gap", "N_regret_over_m1", "N_regret_over_logN"}


class InputError(ValueError):
    pass


def int_list(text) -> list[int]:
    if isinstance(text, list):
        return text
    try:
        return [int(s) for s in str(text).replace(" ", "").split(",") if s]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def float_list(text) -> list[float]:
    if isinstance(text, list):
        return text
    try:
        return [float(s) for s in str(text).replace(" ", "").split(",") if s]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def read_config(path) -> dict:
    """``key=value`` lines; blank lines and ``#`` comments ignored."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return "%.9g" % x
    return str(x)


# ---------------------------------------------------------------------------
# sweep points; top level so they can run in worker processes


def _multinomial_point(m, N, tol):
    _, R = solve_equalizer(m, N, tol=tol)
    return {"m": m, "N": N, "regret": R, "add1_regret": add_one_regret(m, N),
            "N_regret": N * R, "N2_gap": N * N * (R - 1.0 / N)}


def _add1_point(m, N):
    hi, lo = add_constant_regret_range(m, N, 1.0)
    return {"m": m, "N": N, "regret": hi, "spread": hi - lo, "N_regret": N * hi,
            "N_regret_over_m1": N * hi / (m - 1)}


def _graph_point(cls_name, d, N, tol):
    g = build_graph(make_class(cls_name, d), default_features(N))
    res = solve_equalizer_graph(g, tol=tol)
    k = degeneracy(g)
    return {"N": N, "nodes": g.n_nodes, "edges": len(g.edges), "degeneracy": k,
            "regret": res.regret, "spread": res.spread, "bound": peel_bound(k, N)}


def _peel_point(cls_name, d, N, k):
    g = build_graph(make_class(cls_name, d), default_features(N))
    k = degeneracy(g) if k is None else k
    return {"N": N, "k": k, "regret": max_node_regret(g, peel_assign(g, k)),
            "bound": peel_bound(k, N), "half_regret": max_node_regret(g, half_assign(g)),
            "half_bound": half_bound(g.max_degree(), N)}


def _star_point(d, N, a):
    cert = certify_star_lower_bound(d, N, a)
    return {"d": d, "N": N, "a": a, "certified": cert.certified,
            "threshold": cert.threshold, "implied": cert.implied_regret}


def _experts_point(m, N):
    features = default_features(N)
    K = len(enumerate_partitions(ThresholdPartitions(), features))
    R, arg = max_class_regret(ThresholdPartitions(), features, m)
    return {"m": m, "N": N, "K": K, "regret": R, "bound": mixture_bound(K, m, N),
            "N_regret_over_logN": N * R / math.log(N), "argmax": "".join(map(str, arg))}


def _pnml_point(N):
    a, b, c = star_failure_demo(N)
    return {"N": N, "pnml": a, "pnml2": b, "equalizer": c}


def _oracle_point(problem, m, cls_name, d, N, tol):
    if problem == "multinomial":
        R = solve_equalizer(m, N)[1]
        res = solve_minmax(compile_multinomial(m, N), tol=tol)
    else:
        g = build_graph(make_class(cls_name, d), default_features(N))
        R = solve_equalizer_graph(g).regret
        res = solve_minmax(compile_graph(g), tol=tol)
    return {"N": N, "oracle": res.value, "solver": R, "abs_diff": abs(res.value - R),
            "iterations": res.iterations}


def plan(args) -> tuple[callable, list[tuple]]:
    """Validate ``args`` for its kind and list the sweep points."""
    Ns = args.N
    if not Ns:
        raise InputError("at least one N is required")
    if any(n < 2 for n in Ns):
        raise InputError("every N must be at least 2")
    if args.m < 2:
        raise InputError("m must be at least 2")
    kind = args.kind
    if kind == "multinomial-equalizer":
        return _multinomial_point, [(args.m, n, args.tol) for n in Ns]
    if kind == "add1-rate":
        return _add1_point, [(args.m, n) for n in Ns]
    if kind in ("graph-solve", "peel", "oracle-check") and args.cls not in ("threshold", "interval", "unique-values"):
        raise InputError(f"unknown class {args.cls!r}")
    if kind == "graph-solve":
        return _graph_point, [(args.cls, args.d, n, args.tol) for n in Ns]
    if kind == "peel":
        return _peel_point, [(args.cls, args.d, n, args.k) for n in Ns]
    if kind == "star-lower-bound":
        if not args.a or any(a <= 0 for a in args.a):
            raise InputError("a must be a list of positive numbers")
        return _star_point, [(args.d, n, a) for n in Ns for a in args.a]
    if kind == "experts-sweep":
        return _experts_point, [(args.m, n) for n in Ns]
    if kind == "pnml-demo":
        return _pnml_point, [(n,) for n in Ns]
    if kind == "oracle-check":
        if args.problem not in ("multinomial", "graph"):
            raise InputError("problem must be multinomial or graph")
        return _oracle_point, [(args.problem, args.m, args.cls, args.d, n, args.oracle_tol) for n in Ns]
    raise InputError(f"unknown kind {kind!r}")


def run_points(func, points, jobs: int) -> list[dict]:
    """Evaluate sweep points, up to ``jobs`` at a time; results keep sweep order."""
    if jobs <= 1 or len(points) <= 1:
        return [func(*p) for p in points]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, *zip(*points)))


def convert(rows: list[dict], base: str) -> tuple[list[str], list[dict]]:
    """Rescale regret columns to ``base`` and suffix their names."""
    scale = 1.0 if base == "nats" else 1.0 / LN2
    columns, out = [], []
    for row in rows:
        new = {}
        for key, value in row.items():
            if key in REGRET_COLUMNS and isinstance(value, float):
                new[f"{key}_{base}"] = value * scale
            else:
                new[key] = value
        out.append(new)
        for key in new:
            if key not in columns:
                columns.append(key)
    return columns, out


def table_text(columns, rows, form: str) -> str:
    if form == "json":
        doc = [{c: (r[c] if not isinstance(r[c], float) else float(fmt(r[c]))) for c in columns} for r in rows]
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([fmt(r.get(c, "")) for c in columns])
    return buf.getvalue()


def emit_trend(table: Path, columns: list[str], out: Path) -> int:
    """Write the ``(x, y)`` pairs of two columns of a CSV table for external plotting."""
    if len(columns) != 2:
        raise InputError("trend needs exactly two columns: x,y")
    text = Path(table).read_text()
    rows = list(csv.DictReader(io.StringIO(text)))
    if not text.strip():
        Path(out).write_text("")
        return 0
    header = text.splitlines()[0].split(",")
    missing = [c for c in columns if c not in header]
    if missing:
        raise InputError(f"missing column(s) {missing} in {table}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([r[c] for c in columns])
    Path(out).write_text(buf.getvalue())
    return len(rows)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file of defaults")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--base", choices=("nats", "bits"), default="nats")
    common.add_argument("--jobs", type=int, default=int(os.environ.get("LOO_LAB_JOBS", "1")))
    common.add_argument("--N", type=int_list, default=[], help="comma-separated sample sizes")
    common.add_argument("--m", type=int, default=2, help="alphabet size")
    common.add_argument("--d", type=int, default=1, help="class parameter (unique values)")
    common.add_argument("--class", dest="cls", default="threshold",
                        help="threshold | interval | unique-values")
    common.add_argument("--k", type=int, default=None, help="peeling threshold (default: degeneracy)")
    common.add_argument("--a", type=float_list, default=[], help="lower-bound levels")
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--oracle-tol", type=float, default=1e-8)
    common.add_argument("--problem", default="multinomial", help="multinomial | graph")

    parser = argparse.ArgumentParser(prog="loo-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        sub.add_parser(kind, parents=[common])
    trend = sub.add_parser("trend", help="extract (x, y) columns from a CSV table")
    trend.add_argument("table")
    trend.add_argument("--columns", required=True, help="x,y")
    trend.add_argument("--out", required=True, help="output CSV path")
    return parser


def parse(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        defaults = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.kind]
        known = {a.dest for a in sub._actions}
        unknown = set(defaults) - known
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse(argv)
        if args.kind == "trend":
            emit_trend(Path(args.table), args.columns.split(","), Path(args.out))
            return 0
        if args.jobs < 1:
            raise InputError("--jobs must be positive")
        func, points = plan(args)
        start = time.perf_counter()
        rows = run_points(func, points, args.jobs)
        wall = time.perf_counter() - start
    except (InputError, CapacityError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return 3

    columns, rows = convert(rows, args.base)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{args.kind}.{args.format}").write_text(table_text(columns, rows, args.format))
    inputs = {k: v for k, v in sorted(vars(args).items()) if k not in ("config", "out")}
    summary = {
        "kind": args.kind,
        "version": __version__,
        "inputs": inputs,
        "outputs": {"rows": len(rows), "columns": columns,
                    "value": rows[-1].get(f"regret_{args.base}"),
                    "last": {c: rows[-1][c] for c in columns}},
        "wall_time_s": wall,
    }
    (out / f"{args.kind}.summary.json").write_text(json.dumps(summary, indent=2, default=str) + "\n")
    print(table_text(columns, rows, "csv"), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())

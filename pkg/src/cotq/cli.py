"""Command-line interface.

Subcommands
-----------
simulate   draw a synthetic dataset and write it as CSV
fit        estimate contours / tubes / medians on a dataset
contours   fit at a single query and print the JSON document to stdout
validate   run a statistical validation suite and write its report

Exit codes: 0 success, 1 usage/configuration error, 2 data error,
3 solver error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import dataio
from .errors import (
    CotqError,
    DataError,
    InvalidInputError,
    InvalidSpecError,
    SolverError,
    UnsupportedOracleError,
)
from .grid import GridSpec
from .regression import RegressionConfig, auto_queries, fit_all, median_curve, tube
from .simdata import MODELS, ModelSpec, generate
from .validate import consistency_curve, coverage_suite
from .weights import WeightSpec, validate_strong_consistency

logger = logging.getLogger("cotq")


class UsageError(CotqError):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as exceptions (exit code 1)."""

    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="cotq", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    sim = sub.add_parser("simulate", help="draw a synthetic dataset")
    sim.add_argument("model", choices=MODELS)
    sim.add_argument("--n", type=int, required=True, help="sample size")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", default=None, help="output CSV path (default MODEL_n_seed.csv)")

    fit = sub.add_parser("fit", help="fit contours, tubes, and medians on a dataset")
    fit.add_argument("--config", default=None,
                     help="JSON run configuration (replaces the data/weight/grid/"
                          "tau/query flags; --out and --threads still apply)")
    _add_fit_arguments(fit, required_data=False)
    fit.add_argument("--out", default=None, help="output directory (default $COTQ_OUTDIR)")
    fit.add_argument("--threads", type=int, default=1, help="parallel fits across queries")

    single = sub.add_parser("contours", help="fit at one query; print JSON to stdout")
    _add_fit_arguments(single, single_query=True)

    val = sub.add_parser("validate", help="run a validation suite")
    val.add_argument("--suite", choices=("coverage", "consistency"), required=True)
    val.add_argument("--model", choices=MODELS, default="spherical")
    val.add_argument("--n", type=int, default=10_000)
    val.add_argument("--N", type=int, default=1000, help="grid size (coverage suite)")
    val.add_argument("--k", type=int, default=None, help="neighbour count (default: N)")
    val.add_argument("--mc", type=int, default=10_000, help="fresh draws per query")
    val.add_argument("--taus", default="0.2,0.4,0.8")
    val.add_argument("--queries", default="-2,-1,0,1,2")
    val.add_argument("--n-list", default="3601,10000", help="sample sizes (consistency suite)")
    val.add_argument("--seeds", default="0,1,2,3,4,5,6,7,8,9", help="seeds (consistency suite)")
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--out", default=None, help="report directory (default $COTQ_OUTDIR)")
    return parser


def _add_fit_arguments(p: argparse.ArgumentParser, single_query: bool = False,
                       required_data: bool = True) -> None:
    p.add_argument("--data", required=required_data, help="CSV file with a header row")
    p.add_argument("--x-columns", required=required_data,
                   help="comma-separated covariate columns")
    p.add_argument("--y-columns", required=required_data,
                   help="comma-separated response columns")
    p.add_argument("--scheme", default="knn",
                   choices=("gaussian", "epanechnikov", "uniform", "knn", "co_knn"))
    p.add_argument("--h", type=float, default=None, help="kernel bandwidth")
    p.add_argument("--k", type=int, default=None, help="neighbour count")
    p.add_argument("--taus", default="0.2,0.4,0.8", help="comma-separated orders in (0,1)")
    if single_query:
        p.add_argument("--at", required=True, help="query covariate (comma-separated vector)")
    else:
        p.add_argument("--queries", default="auto:10",
                       help="semicolon-separated query vectors, or auto:K "
                            "(use --queries=-1;0;1 for negative values)")
    p.add_argument("--grid-size", type=int, default=None,
                   help="grid size N (balanced factorization; default: k or 500)")
    p.add_argument("--grid-nr", type=int, default=None, help="explicit radius count")
    p.add_argument("--grid-ns", type=int, default=None, help="explicit ray count")
    p.add_argument("--grid-n0", type=int, default=0, choices=(0, 1))
    p.add_argument("--smoothing", type=float, default=0.0, help="Moreau smoothing eps")
    p.add_argument("--seed", type=int, default=0, help="direction seed (d > 3, co_knn)")


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise UsageError(f"cannot parse {what} from {text!r}") from None


def _parse_ints(text: str, what: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise UsageError(f"cannot parse {what} from {text!r}") from None


def _weight_spec(args, n: int) -> WeightSpec:
    if args.scheme in ("gaussian", "epanechnikov", "uniform"):
        if args.h is None:
            raise UsageError(f"scheme {args.scheme!r} requires --h")
        return WeightSpec(scheme=args.scheme, h=args.h)
    k = args.k if args.k is not None else min(n, 500)
    spec = WeightSpec(scheme=args.scheme, k=k, direction_seed=args.seed)
    if not validate_strong_consistency(max(n, 2), k):
        logger.warning(
            "k=%d is outside the recommended band [3 ln n, 0.25 n] for n=%d; "
            "consistency of the fit may suffer", k, n,
        )
    return spec


def _grid_spec(args, weight_spec: WeightSpec, d: int) -> GridSpec:
    if args.grid_nr is not None or args.grid_ns is not None:
        if args.grid_nr is None or args.grid_ns is None:
            raise UsageError("--grid-nr and --grid-ns must be given together")
        return GridSpec(d=d, N_R=args.grid_nr, N_S=args.grid_ns, N_0=args.grid_n0,
                        direction_seed=args.seed)
    if args.grid_size is not None:
        size = args.grid_size
    elif weight_spec.k is not None:
        size = weight_spec.k  # one-to-one with the neighbour count
    else:
        size = 500
    return GridSpec.balanced(size, d, direction_seed=args.seed)


def _parse_queries(text: str, dataset) -> np.ndarray:
    if text.startswith("auto:"):
        try:
            count = int(text.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"cannot parse query count from {text!r}") from None
        return auto_queries(dataset.X, count)
    rows = [r for r in text.split(";") if r.strip() != ""]
    queries = [_parse_floats(r, "query") for r in rows]
    arr = np.asarray(queries, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != dataset.m:
        raise UsageError(
            f"queries must be {dataset.m}-dimensional vectors, got {text!r}"
        )
    return arr


def _fit_config(args, dataset, queries) -> RegressionConfig:
    wspec = _weight_spec(args, dataset.n)
    gspec = _grid_spec(args, wspec, dataset.d)
    taus = tuple(_parse_floats(args.taus, "taus"))
    return RegressionConfig(
        weight_spec=wspec, grid_spec=gspec, taus=taus,
        queries=queries, smoothing=args.smoothing,
    )


def _cmd_simulate(args) -> int:
    spec = ModelSpec(args.model, args.n, args.seed)
    X, Y = generate(spec)
    out = args.out or f"{args.model}_{args.n}_{args.seed}.csv"
    dataset = dataio.Dataset(X=X, Y=Y, x_columns=("x",), y_columns=("y1", "y2"))
    dataio.write_dataset_csv(dataset, out)
    print(out)
    return 0


_CONFIG_KEYS = {
    "data", "x_columns", "y_columns", "weights", "grid", "taus",
    "queries", "smoothing", "out", "seed",
}


def _apply_config_file(args) -> None:
    """Load a JSON run configuration into the argument namespace."""
    try:
        with open(args.config, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except OSError as exc:
        raise DataError(f"cannot read config {args.config}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"config {args.config} is not valid JSON: {exc}") from exc
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    for key in ("data", "x_columns", "y_columns"):
        if key not in doc:
            raise UsageError(f"config is missing the required key {key!r}")
    args.data = doc["data"]
    args.x_columns = ",".join(doc["x_columns"])
    args.y_columns = ",".join(doc["y_columns"])
    weights = doc.get("weights", {"scheme": "knn"})
    args.scheme = weights.get("scheme", "knn")
    args.h = weights.get("h")
    args.k = weights.get("k")
    grid = doc.get("grid", {})
    args.grid_size = grid.get("N")
    args.grid_nr = grid.get("N_R")
    args.grid_ns = grid.get("N_S")
    args.grid_n0 = grid.get("N_0", 0)
    taus = doc.get("taus", [0.2, 0.4, 0.8])
    args.taus = ",".join(repr(float(t)) for t in taus)
    queries = doc.get("queries", "auto:10")
    if isinstance(queries, str):
        args.queries = queries
    else:
        args.queries = ";".join(
            ",".join(repr(float(v)) for v in np.atleast_1d(q)) for q in queries
        )
    args.smoothing = float(doc.get("smoothing", 0.0))
    args.seed = int(doc.get("seed", 0))
    if args.out is None and "out" in doc:
        args.out = doc["out"]


def _cmd_fit(args) -> int:
    if args.config is not None:
        _apply_config_file(args)
    if args.data is None or args.x_columns is None or args.y_columns is None:
        raise UsageError("either --config or --data/--x-columns/--y-columns is required")
    dataset = dataio.load_csv(args.data, args.x_columns.split(","), args.y_columns.split(","))
    if dataset.dropped_rows:
        logger.warning("dropped %d incomplete rows from %s", dataset.dropped_rows, args.data)
    queries = _parse_queries(args.queries, dataset)
    config = _fit_config(args, dataset, queries)
    maps = fit_all(dataset.X, dataset.Y, config, threads=max(1, args.threads))
    tubes = [tube(dataset.X, dataset.Y, config, t, maps=maps) for t in config.taus]
    medians = median_curve(dataset.X, dataset.Y, config, maps=maps)
    out_dir = args.out or dataio.default_output_dir()
    written = dataio.write_contours(tubes, out_dir, medians=medians)
    for name in written:
        print(f"{out_dir}/{name}")
    return 0


def _cmd_contours(args) -> int:
    dataset = dataio.load_csv(args.data, args.x_columns.split(","), args.y_columns.split(","))
    x = np.asarray(_parse_floats(args.at, "--at"), dtype=float)
    if x.size != dataset.m:
        raise UsageError(f"--at must be a {dataset.m}-vector, got {args.at!r}")
    config = _fit_config(args, dataset, x[None, :])
    qmap = fit_all(dataset.X, dataset.Y, config)[0]
    median = qmap.median_region()
    doc = {
        "schema": dataio.SCHEMA,
        "results": [
            dataio.contour_json(x, qmap.contour(t), median.point) for t in config.taus
        ],
    }
    json.dump(doc, sys.stdout, indent=1, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def _cmd_validate(args) -> int:
    taus = tuple(_parse_floats(args.taus, "taus"))
    out_dir = args.out or dataio.default_output_dir()
    if args.suite == "coverage":
        k = args.k if args.k is not None else args.N
        report = coverage_suite(
            args.model, n=args.n, N=args.N,
            weight_spec=WeightSpec(scheme="knn", k=k),
            taus=taus,
            queries=_parse_floats(args.queries, "queries"),
            mc=args.mc, seed=args.seed,
        )
        written = dataio.write_coverage_report(report, out_dir)
        print(f"worst coverage error: {report.worst_error():.4f}")
    else:
        report = consistency_curve(
            args.model,
            n_list=_parse_ints(args.n_list, "--n-list"),
            taus=taus,
            seeds=_parse_ints(args.seeds, "--seeds"),
        )
        written = dataio.write_hausdorff_report(report, out_dir)
        med = report.median_by_n()
        print("median Hausdorff by n: " + ", ".join(f"{n}: {v:.4f}" for n, v in med.items()))
    for name in written:
        print(f"{out_dir}/{name}")
    return 0


def cli(argv=None) -> int:
    """Entry point; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        if args.command is None:
            parser.print_help()
            return 1
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "fit":
            return _cmd_fit(args)
        if args.command == "contours":
            return _cmd_contours(args)
        return _cmd_validate(args)
    except (UsageError, InvalidSpecError, InvalidInputError, UnsupportedOracleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()

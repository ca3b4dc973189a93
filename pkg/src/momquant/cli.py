"""Command-line front end.

Exit codes: 0 ok, 1 usage or input error, 2 the fit found no admissible
candidate. Data goes to stdout, diagnostics to stderr.

``quantize`` and ``oracle`` print ``key,value`` lines (``--format csv``, the
default) or one JSON object (``--format json``) with these keys:

quantize
    ``center`` (one line per center, coordinates comma-separated; a list in
    JSON), ``criterion``, ``ell`` (empty for ERM), ``feasible``,
    ``candidates_evaluated``, ``min_cell_mass``, ``max_center_norm``,
    ``min_center_norm``.
oracle
    ``k``, ``center``, ``distortion``, ``pmin``, ``magnitude_M``,
    ``delta_gap``, ``radius_R``, ``approximate``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from momquant.distributions import BUILTINS, approximate_oracle, load_spec, optimal_quantizer_1d, spec_from_dict
from momquant.errors import MomQuantError
from momquant.estimators import EstimatorConfig, SearchStrategy, fit
from momquant.experiments import EXPERIMENTS, default_config, emit, run
from momquant.quantcore import Dataset
from momquant.reporting import dumps, fmt, write_text

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2

_ESTIMATORS = {"erm": "erm", "mom-m": "mom_magnitude", "mom-pmin": "mom_pmin", "mom-free": "mom_free"}
_GLOBAL_DEFAULTS = {"seed": 0, "out": None, "format": "csv"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(parser: argparse.ArgumentParser) -> None:
    # SUPPRESS lets the flags appear before or after the subcommand.
    parser.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="base seed (default 0)")
    parser.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    parser.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS, help="output format (default csv)")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _key_value(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="momquant", description="Robust k-point quantization by medians of means.")
    _global_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("quantize", help="fit a quantizer to a data file")
    _global_flags(q)
    q.add_argument("--input", required=True, help="headerless CSV, one point per row")
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--estimator", choices=tuple(_ESTIMATORS), default="erm")
    q.add_argument("--delta", type=float, default=0.05)
    q.add_argument("--magnitude", type=float, help="magnitude bound M (mom-m)")
    q.add_argument("--pmin", type=float, help="minimum cell mass p_min (mom-pmin)")
    q.add_argument("--restarts", type=int, default=8)
    q.add_argument("--max-iters", type=int, default=100)
    q.add_argument("--seeding", choices=("kpp", "random_points", "grid_1d"), default="kpp")
    q.add_argument("--no-singleton", action="store_true", help="do not score the one-center MOM-mean candidate")
    q.add_argument("--exact-1d", action="store_true", help="exact ERM by dynamic programming (1-D, erm only)")

    o = sub.add_parser("oracle", help="optimal quantizer of a 1-D distribution")
    _global_flags(o)
    o.add_argument("--dist", required=True, help=f"spec JSON path or builtin name ({', '.join(BUILTINS)})")
    o.add_argument("--param", type=_key_value, action="append", default=[], help="builtin parameter key=value")
    o.add_argument("--k", type=int, required=True)
    o.add_argument("--approximate", action="store_true", help="allow continuous specs via a binned proxy")

    e = sub.add_parser("experiment", help="run a named Monte-Carlo experiment")
    _global_flags(e)
    e.add_argument("--name", required=True, help=f"one of {', '.join(EXPERIMENTS)}")
    e.add_argument("--trials", type=int)
    e.add_argument("--n-grid", type=_int_list)
    e.add_argument("--pmin-grid", type=_float_list)
    e.add_argument("--delta", type=float)
    e.add_argument("--kinds", help="comma-separated estimator kinds (scaling)")
    e.add_argument("--param", type=_key_value, action="append", default=[], help="experiment parameter key=value")
    e.add_argument("--label", default="run", help="report subdirectory name")
    e.add_argument("--workers", type=int, default=1)
    return parser


def _parse_scalar(text: str) -> Any:
    """JSON value if it parses (numbers, booleans, lists), else the raw string."""
    try:
        return json.loads(text)
    except ValueError:
        return text


def _emit_record(record: dict[str, Any], args, name: str) -> None:
    if args.format == "json":
        text = dumps(record)
    else:
        lines = []
        for key, value in record.items():
            if key == "center":
                lines.extend("center," + ",".join(fmt(float(v)) for v in c) for c in value)
            else:
                lines.append(f"{key},{fmt(value)}")
        text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        write_text(Path(args.out) / f"{name}.{args.format}", text)


def _quantize(args) -> int:
    kind = _ESTIMATORS[args.estimator]
    if kind == "mom_magnitude" and args.magnitude is None:
        raise UsageError("mom-m requires --magnitude (the magnitude bound M)")
    if kind == "mom_pmin" and args.pmin is None:
        raise UsageError("mom-pmin requires --pmin (the minimum cell mass p_min)")
    try:
        pts = np.loadtxt(args.input, delimiter=",", ndmin=2, dtype=float)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read {args.input}: {exc}") from exc
    search = SearchStrategy(
        restarts=args.restarts, max_iters=args.max_iters, seeding=args.seeding, exact_1d=args.exact_1d,
        include_mom_mean_singleton=not args.no_singleton,
    )
    cfg = EstimatorConfig(
        kind, args.k, args.delta,
        magnitude=args.magnitude if kind == "mom_magnitude" else None,
        pmin=args.pmin if kind == "mom_pmin" else None,
        search=search,
    )
    res = fit(Dataset(pts, seed=args.seed), cfg, args.seed)
    record: dict[str, Any] = {
        "center": res.quantizer.centers.tolist(),
        "criterion": res.criterion_value,
        "ell": res.ell,
        "feasible": res.feasible,
        "candidates_evaluated": res.candidates_evaluated,
    }
    for key in ("min_cell_mass", "max_center_norm", "min_center_norm"):
        record[key] = res.diagnostics.get(key)
    _emit_record(record, args, "quantize")
    if not res.feasible:
        print("no candidate satisfied the estimator's constraint", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _oracle(args) -> int:
    params = {k: _parse_scalar(v) for k, v in args.param}
    if args.dist in BUILTINS:
        spec = spec_from_dict({"family": args.dist, "params": params})
    else:
        if params:
            raise UsageError("--param only applies to builtin distributions")
        try:
            spec = load_spec(args.dist)
        except OSError as exc:
            raise UsageError(f"cannot read {args.dist}: {exc}") from exc
        except ValueError as exc:
            if isinstance(exc, MomQuantError):
                raise
            raise UsageError(f"invalid JSON in {args.dist}: {exc}") from exc
    if spec.dim != 1:
        raise UsageError("exact oracle is 1-D only")
    if spec.family == "discrete":
        report = optimal_quantizer_1d(spec.params["dist"], args.k)
    elif args.approximate:
        report = approximate_oracle(spec, args.k, seed=args.seed)
    else:
        raise UsageError(f"exact oracle needs a discrete distribution, got {spec.family}; pass --approximate")
    d = report.as_dict()
    d["center"] = d.pop("centers")
    order = ("k", "center", "distortion", "pmin", "magnitude_M", "delta_gap", "radius_R", "approximate")
    _emit_record({key: d[key] for key in order}, args, "oracle")
    return EXIT_OK


def _experiment(args) -> int:
    if args.name not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {args.name!r}; valid names: {', '.join(EXPERIMENTS)}")
    if args.trials is not None and args.trials < 1:
        raise UsageError("--trials must be at least 1")
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    cfg = default_config(
        args.name,
        trials=args.trials,
        n_grid=args.n_grid,
        pmin_grid=args.pmin_grid,
        delta=args.delta,
        kinds=tuple(args.kinds.split(",")) if args.kinds else None,
        base_seed=args.seed,
        params={k: _parse_scalar(v) for k, v in args.param},
    )
    report = run(cfg, workers=args.workers)
    target = emit(report, args.out or "reports", label=args.label, fmt=args.format)
    print(str(target))
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for key, value in _GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    handler = {"quantize": _quantize, "oracle": _oracle, "experiment": _experiment}[args.command]
    try:
        return handler(args)
    except (UsageError, MomQuantError) as exc:
        print(f"momquant {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

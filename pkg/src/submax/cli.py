"""Command-line entry points: gen, run, verify, plot, round.

Output paths default to $SUBMAX_OUT_ROOT (falling back to ./out).  `run`
takes an optional JSON config file; any flag given explicitly overrides the
file.  `verify` exits 1 when a bound check fails and 2 when the instance is
too large for the exhaustive oracles.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Dict, List, Optional

import numpy as np

from . import figures, harness
from .errors import DomainError, InputError, OracleGuardError
from .objective import build_poly_estimator
from .rounding import pad_to_base, pipage_round, swap_round


def _out_root(value: Optional[str]) -> str:
    return value or os.environ.get("SUBMAX_OUT_ROOT", "out")


def _parse_params(pairs: Optional[List[str]]) -> Dict:
    params: Dict = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise InputError(f"--param expects key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        try:
            params[key] = json.loads(raw)
        except json.JSONDecodeError:
            params[key] = raw
    return params


def _csv_list(text: str) -> List[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


# ----------------------------------------------------------------------
# subcommands


def _cmd_gen(args) -> int:
    obj, mat = harness.build_instance(
        args.instance, args.seed, _parse_params(args.param)
    )
    out_dir = os.path.join(_out_root(args.out), f"{args.instance}-s{args.seed}")
    obj_path, mat_path = harness.dump_instance(obj, mat, out_dir)
    print(f"instance {args.instance} seed {args.seed}: "
          f"N={obj.ground_size} terms={len(obj.terms)} rank={mat.rank}")
    print(f"wrote {obj_path}")
    print(f"wrote {mat_path}")
    return 0


def _build_run_config(args) -> harness.ExperimentConfig:
    overrides: Dict = {}
    if args.instance is not None:
        overrides["instance"] = args.instance
    if args.param:
        overrides["instance_params"] = _parse_params(args.param)
    if args.objective is not None:
        overrides["objective_file"] = args.objective
    if args.matroid is not None:
        overrides["matroid_file"] = args.matroid
    if args.estimators is not None:
        overrides["estimators"] = tuple(_csv_list(args.estimators))
    if args.gamma is not None:
        overrides["gamma"] = args.gamma
    if args.round is not None:
        overrides["rounding"] = args.round
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None or "SUBMAX_OUT_ROOT" in os.environ:
        overrides["out_dir"] = _out_root(args.out)
    if args.record_every is not None:
        overrides["record_every"] = args.record_every
    if args.include_build:
        overrides["include_build"] = True
    if args.max_ground is not None:
        overrides["max_oracle_ground"] = args.max_ground
    if args.loglog:
        overrides["loglog"] = True
    if args.no_figures:
        overrides["figures"] = False
    if args.config is not None:
        return harness.config_from_json(args.config, overrides)
    return harness.ExperimentConfig(**overrides)


def _cmd_run(args) -> int:
    cfg = _build_run_config(args)
    summary = harness.run_experiment(cfg)
    failed = 0
    for run in summary["runs"]:
        if "error" in run:
            failed += 1
            print(f"{run['estimator']}: FAILED {run['error']}")
        else:
            print(f"{run['estimator']}: f={run['f']:.6g} err={run['err']:.4g} "
                  f"seconds={run['seconds']:.3g}")
    print(f"f_star={summary['f_star']:.6g}  ({summary['instance']})")
    return 1 if failed else 0


def _cmd_verify(args) -> int:
    overrides: Dict = {}
    if args.instance is not None:
        overrides["instance"] = args.instance
    if args.param:
        overrides["instance_params"] = _parse_params(args.param)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.gamma is not None:
        overrides["gamma"] = args.gamma
    if args.max_ground is not None:
        overrides["max_oracle_ground"] = args.max_ground
    cfg = harness.ExperimentConfig(**overrides)
    degrees = [int(d) for d in _csv_list(args.degrees)]
    checks = harness.verify(cfg, degrees=degrees, draws=args.draws)
    for check in checks:
        print(check.line())
    return 0 if all(c.passed for c in checks) else 1


def _cmd_plot(args) -> int:
    labels = _csv_list(args.labels) if args.labels else None
    if labels is not None and len(labels) != len(args.traces):
        raise InputError("--labels must name each trace file once")
    traces = {}
    for i, path in enumerate(args.traces):
        rows = harness.read_trace(path)
        label = (labels[i] if labels
                 else os.path.basename(os.path.dirname(os.path.abspath(path)))
                 or os.path.splitext(os.path.basename(path))[0])
        traces[label] = [[r.iteration, r.t, r.estimate, r.wall_seconds]
                         for r in rows]
    out = args.out or "traces.svg"
    figures.plot_traces(traces, out, loglog=args.loglog)
    print(f"wrote {out}")
    return 0


def _read_vector(path: str) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("y", data.get("x"))
    if not isinstance(data, list):
        raise InputError(f"{path}: expected a JSON list or a solution object")
    return np.asarray(data, dtype=np.float64)


def _cmd_round(args) -> int:
    obj = harness._load_objective(args.objective)
    mat = harness._load_matroid(args.matroid, obj.ground_size)
    if args.mode == "pipage":
        if args.y is None:
            raise InputError("pipage mode needs --y (fractional point JSON)")
        y = _read_vector(args.y)
        surrogate = build_poly_estimator(obj, args.degree)
        x = pipage_round(surrogate, mat, y)
    else:
        if args.combo is None:
            raise InputError("swap mode needs --combo (gammas + vertices)")
        with open(args.combo, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        combo = [
            (float(g), pad_to_base(mat, np.asarray(v, dtype=np.float64)))
            for g, v in zip(data["gammas"], data["vertices"])
        ]
        x = swap_round(mat, combo, seed=args.seed)
    result = {"x": [int(v) for v in x], "f": float(obj.exact_value(x))}
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(result, fh)
            fh.write("\n")
        print(f"wrote {args.out}")
    print(f"selected {int(x.sum())} elements, f={result['f']:.6g}")
    return 0


# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="submax",
        description="Submodular maximization: continuous greedy with "
                    "polynomial or sampling gradient estimators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate an instance and dump it as JSON")
    p.add_argument("--instance", default="sm-toy",
                   help="generator name (see harness.INSTANCE_GENERATORS)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="generator keyword override (repeatable)")
    p.add_argument("--out", help="output root (default $SUBMAX_OUT_ROOT or ./out)")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("run", help="run the estimator grid on an instance")
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--instance")
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--objective", help="objective JSON file (with --matroid)")
    p.add_argument("--matroid", help="matroid JSON file (with --objective)")
    p.add_argument("--estimators", help="comma list, e.g. POLY1,POLY2,SAMP10")
    p.add_argument("--gamma", type=float)
    p.add_argument("--round", choices=["pipage", "swap", "none"])
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--record-every", type=int, dest="record_every")
    p.add_argument("--include-build", action="store_true", dest="include_build")
    p.add_argument("--max-ground", type=int, dest="max_ground")
    p.add_argument("--loglog", action="store_true")
    p.add_argument("--no-figures", action="store_true", dest="no_figures")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("verify", help="run guarded bound checks (small N)")
    p.add_argument("--instance")
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--seed", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--degrees", default="1,2,3,4,5,6")
    p.add_argument("--draws", type=int, default=2000)
    p.add_argument("--max-ground", type=int, dest="max_ground")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("plot", help="render trace CSVs as an SVG figure")
    p.add_argument("traces", nargs="+", help="trace.csv paths")
    p.add_argument("--out", help="output SVG path (default traces.svg)")
    p.add_argument("--labels", help="comma list overriding legend labels")
    p.add_argument("--loglog", action="store_true")
    p.set_defaults(func=_cmd_plot)

    p = sub.add_parser("round", help="round a fractional point to a set")
    p.add_argument("--objective", required=True)
    p.add_argument("--matroid", required=True)
    p.add_argument("--mode", choices=["pipage", "swap"], default="pipage")
    p.add_argument("--y", help="fractional point JSON (pipage mode)")
    p.add_argument("--combo", help="gammas+vertices JSON (swap mode)")
    p.add_argument("--degree", type=int, default=2,
                   help="surrogate degree for pipage decisions")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write {x, f} JSON here")
    p.set_defaults(func=_cmd_round)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OracleGuardError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    except (InputError, DomainError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Experiment orchestration: instance registry, estimator grid, artifacts.

A run takes one instance and a grid of estimator labels (POLY{L}, SAMP{T},
EXACT), executes continuous greedy once per cell, optionally rounds, and
writes per-cell trace CSVs plus a grid summary and SVG figures:

    out/<instance>/<estimator>/trace.csv      k,t,estimate,wall_seconds
    out/<instance>/<estimator>/solution.json  fractional y and integral x
    out/<instance>/<estimator>/combo.json     swap-rounding input (swap mode)
    out/<instance>/summary.json               {instance, runs, f_star}
    out/<instance>/traces.svg, summary.svg

Reruns with the same config and seeds reproduce the CSV bodies byte for
byte once the wall-clock column is stripped (`strip_timing_text`), and the
summary once timing fields are dropped (`strip_timing_summary`).
"""

from __future__ import annotations

import dataclasses
import json
import os
import re
import zlib
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import figures
from .errors import InputError, OracleGuardError
from .matroid import PartitionMatroid, matroid_from_json, matroid_to_json
from .objective import (
    CompositeObjective,
    ExactEstimator,
    PolyEstimator,
    SampleConfig,
    SampleEstimator,
    bias_bound_for,
    build_poly_estimator,
    grad_exact,
    grad_poly,
    grad_sample,
    objective_from_json,
    objective_to_json,
)
from .optimizer import (
    GreedyConfig,
    TraceRow,
    approximation_certificate,
    continuous_greedy,
)
from .rounding import pad_to_base, pipage_certificate, pipage_round, swap_round
from . import problems

TRACE_HEADER = "k,t,estimate,wall_seconds"
_TIMING_KEYS = ("seconds", "gradient_seconds", "build_seconds")


# ----------------------------------------------------------------------
# instance registry


def _sm_toy(seed: int, n: int = 10, groups: int = 2, blocks: int = 2,
            budget: int = 2) -> Tuple[CompositeObjective, PartitionMatroid]:
    return problems.gen_sm_synth(seed, n=n, groups=groups, blocks=blocks,
                                 budget=budget)


def _im_toy(seed: int, n: int = 8, edges: int = 12, p: float = 0.4,
            cascades: int = 2,
            budget: int = 1) -> Tuple[CompositeObjective, PartitionMatroid]:
    rng = np.random.default_rng(seed)
    pairs = set()
    while len(pairs) < edges:
        u, v = int(rng.integers(n)), int(rng.integers(n))
        if u != v:
            pairs.add((u, v))
    cas = problems.simulate_ic(n, sorted(pairs), p, cascades, seed=seed)
    obj = problems.build_im(cas)
    half = n // 2
    mat = PartitionMatroid(
        [tuple(range(half)), tuple(range(half, n))], [budget, budget]
    )
    return obj, mat


def _fl_toy(seed: int, facilities: int = 6, customers: int = 5,
            budget: int = 1) -> Tuple[CompositeObjective, PartitionMatroid]:
    rng = np.random.default_rng(seed)
    w = np.round(rng.random((facilities, customers)) * 5) / 5.0
    spec = problems.FacilitySpec(
        tuple(tuple(float(x) for x in row) for row in w)
    )
    half = facilities // 2
    mat = PartitionMatroid(
        [tuple(range(half)), tuple(range(half, facilities))], [budget, budget]
    )
    return problems.build_fl(spec), mat


def _cn_toy(seed: int, catalog: int = 2,
            budget: int = 1) -> Tuple[CompositeObjective, PartitionMatroid]:
    del seed  # fixed 3-node path topology; kept for registry uniformity
    requests = tuple(
        (item, (0, 1, 2), 0.3) for item in range(catalog)
    ) + tuple((item, (1, 2), 0.2) for item in range(catalog))
    spec = problems.CacheNetworkSpec(
        nodes=3,
        catalog=catalog,
        edges=((0, 1, 2.0 * catalog), (1, 2, 2.5 * catalog)),
        requests=requests,
        capacities=(budget, budget, budget),
    )
    return problems.build_cn(spec)


INSTANCE_GENERATORS: Dict[str, Callable] = {
    "sm-toy": _sm_toy,
    "im-toy": _im_toy,
    "fl-toy": _fl_toy,
    "cn-toy": _cn_toy,
    "sm-synth": problems.gen_sm_synth,
    "im-synth-uniform": lambda seed, **kw: problems.gen_im_synth(
        seed, kind="uniform", **kw
    ),
    "im-synth-powerlaw": lambda seed, **kw: problems.gen_im_synth(
        seed, kind="powerlaw", **kw
    ),
    "fl-synth": problems.gen_fl_synth,
}


def build_instance(
    name: str, seed: int, params: Optional[Dict] = None
) -> Tuple[CompositeObjective, PartitionMatroid]:
    try:
        gen = INSTANCE_GENERATORS[name]
    except KeyError:
        known = ", ".join(sorted(INSTANCE_GENERATORS))
        raise InputError(f"unknown instance {name!r} (known: {known})")
    return gen(seed, **(params or {}))


# ----------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    instance: str = "sm-toy"
    instance_params: Dict = field(default_factory=dict)
    objective_file: Optional[str] = None
    matroid_file: Optional[str] = None
    estimators: Tuple[str, ...] = ("POLY1", "POLY2", "SAMP10")
    gamma: float = 0.1
    rounding: str = "pipage"
    seed: int = 0
    out_dir: str = "out"
    record_every: int = 10
    include_build: bool = False
    max_oracle_ground: int = 20
    loglog: bool = False
    figures: bool = True

    def __post_init__(self) -> None:
        self.estimators = tuple(self.estimators)
        if not self.estimators:
            raise InputError("estimator grid is empty")
        for label in self.estimators:
            parse_estimator_label(label)
        if not 0.0 < self.gamma <= 1.0:
            raise InputError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.rounding not in ("pipage", "swap", "none"):
            raise InputError(f"unknown rounding mode {self.rounding!r}")
        if (self.objective_file is None) != (self.matroid_file is None):
            raise InputError("objective_file and matroid_file go together")


def config_from_json(path: str, overrides: Optional[Dict] = None) -> ExperimentConfig:
    """Config file merged with explicit overrides (overrides win)."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise InputError(f"{path}: config must be a JSON object")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise InputError(f"{path}: unknown config keys {sorted(unknown)}")
    data.update(overrides or {})
    return ExperimentConfig(**data)


def parse_estimator_label(label: str) -> Tuple[str, int]:
    """POLY{L} / SAMP{T} / EXACT -> (kind, parameter)."""
    m = re.fullmatch(r"POLY([1-9]\d*)", label)
    if m:
        return "poly", int(m.group(1))
    m = re.fullmatch(r"SAMP([1-9]\d*)", label)
    if m:
        return "samp", int(m.group(1))
    if label == "EXACT":
        return "exact", 0
    raise InputError(
        f"unknown estimator label {label!r} (expected POLY<L>, SAMP<T>, EXACT)"
    )


def cell_seed(base_seed: int, label: str) -> int:
    """Stable per-cell seed: depends on the label, not its grid position."""
    ss = np.random.SeedSequence([base_seed, zlib.crc32(label.encode("ascii"))])
    return int(ss.generate_state(1)[0])


def make_estimator(
    label: str, obj: CompositeObjective, base_seed: int, max_ground: int
):
    kind, param = parse_estimator_label(label)
    if kind == "poly":
        return PolyEstimator(obj, param)
    if kind == "samp":
        return SampleEstimator(obj, param, seed=cell_seed(base_seed, label))
    return ExactEstimator(obj, max_ground=max_ground)


# ----------------------------------------------------------------------
# trace and summary I/O


def write_trace(path: str, rows: Sequence[TraceRow]) -> None:
    lines = [TRACE_HEADER]
    for r in rows:
        lines.append(f"{r.iteration},{r.t!r},{r.estimate!r},{r.wall_seconds!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trace(path: str) -> List[TraceRow]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != TRACE_HEADER:
        raise InputError(f"{path}: expected header {TRACE_HEADER!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise InputError(f"{path}:{lineno}: expected 4 columns")
        try:
            rows.append(TraceRow(int(parts[0]), float(parts[1]),
                                 float(parts[2]), float(parts[3])))
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: {exc}")
    return rows


def strip_timing_text(trace_text: str) -> str:
    """Trace body with the wall-clock column removed (byte-compare form)."""
    out = []
    for line in trace_text.splitlines():
        if not line:
            continue
        out.append(",".join(line.split(",")[:3]))
    return "\n".join(out) + "\n"


def strip_timing_summary(summary: Dict) -> Dict:
    """Summary with wall-clock fields removed (byte-compare form)."""
    clean = {k: v for k, v in summary.items() if k not in _TIMING_KEYS}
    clean["runs"] = [
        {k: v for k, v in run.items() if k not in _TIMING_KEYS}
        for run in summary.get("runs", [])
    ]
    return clean


# ----------------------------------------------------------------------
# the experiment loop


def _common_degree(labels: Sequence[str]) -> int:
    degrees = [parse_estimator_label(l)[1] for l in labels
               if parse_estimator_label(l)[0] == "poly"]
    return max(2, max(degrees, default=2))


def _round_cell(
    cfg: ExperimentConfig,
    obj: CompositeObjective,
    mat: PartitionMatroid,
    surrogate,
    result,
    seed: int,
):
    if cfg.rounding == "none":
        return None
    if cfg.rounding == "pipage":
        return pipage_round(surrogate, mat, result.y)
    padded = [(g, pad_to_base(mat, v)) for g, v in result.combo]
    return swap_round(mat, padded, seed=seed)


def run_experiment(cfg: ExperimentConfig) -> Dict:
    """Run the grid, write artifacts, and return the summary dict."""
    if cfg.objective_file is not None:
        obj = _load_objective(cfg.objective_file)
        mat = _load_matroid(cfg.matroid_file, obj.ground_size)
        instance_name = os.path.splitext(os.path.basename(cfg.objective_file))[0]
    else:
        obj, mat = build_instance(cfg.instance, cfg.seed, cfg.instance_params)
        instance_name = f"{cfg.instance}-s{cfg.seed}"
    if obj.ground_size != mat.ground_size:
        raise InputError("objective and matroid ground sizes disagree")

    inst_dir = os.path.join(cfg.out_dir, instance_name)
    os.makedirs(inst_dir, exist_ok=True)

    eval_est = PolyEstimator(obj, _common_degree(cfg.estimators))
    greedy_cfg = GreedyConfig(cfg.gamma, record_every=cfg.record_every)

    runs: List[Dict] = []
    traces: Dict[str, List[List[float]]] = {}
    for label in cfg.estimators:
        try:
            runs.append(
                _run_cell(cfg, obj, mat, label, greedy_cfg, eval_est, inst_dir,
                          traces)
            )
        except Exception as exc:  # cell isolation: one failure, one record
            runs.append({"estimator": label, "error": f"{type(exc).__name__}: {exc}"})

    good = [r for r in runs if "error" not in r]
    if not good:
        raise RuntimeError("every grid cell failed; see per-run errors")
    f_star = max(r["f"] for r in good)
    for r in good:
        r["err"] = (r["f"] - f_star) / f_star if f_star != 0.0 else 0.0

    summary = {"instance": instance_name, "runs": runs, "f_star": f_star}
    with open(os.path.join(inst_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")

    if cfg.figures and traces:
        figures.plot_traces(
            traces, os.path.join(inst_dir, "traces.svg"), loglog=cfg.loglog
        )
        figures.plot_summary(summary, os.path.join(inst_dir, "summary.svg"))
    return summary


def _run_cell(cfg, obj, mat, label, greedy_cfg, eval_est, inst_dir, traces):
    est = make_estimator(label, obj, cfg.seed, cfg.max_oracle_ground)
    build_seconds = getattr(est, "build_seconds", 0.0)
    result = continuous_greedy(mat, greedy_cfg, est)

    cell_dir = os.path.join(inst_dir, label)
    os.makedirs(cell_dir, exist_ok=True)
    write_trace(os.path.join(cell_dir, "trace.csv"), result.trace.rows)
    traces[label] = [
        [r.iteration, r.t, r.estimate, r.wall_seconds] for r in result.trace.rows
    ]

    x = _round_cell(cfg, obj, mat, eval_est.surrogate, result,
                    cell_seed(cfg.seed, label))
    if x is None:
        f_final = float(eval_est.surrogate.evaluate(result.y))
    else:
        f_final = float(obj.exact_value(x))

    solution = {
        "y": [float(v) for v in result.y],
        "x": None if x is None else [int(v) for v in x],
    }
    with open(os.path.join(cell_dir, "solution.json"), "w", encoding="utf-8") as fh:
        json.dump(solution, fh)
        fh.write("\n")
    if cfg.rounding == "swap":
        combo = {
            "gammas": [float(g) for g, _ in result.combo],
            "vertices": [[int(v) for v in vec] for _, vec in result.combo],
        }
        with open(os.path.join(cell_dir, "combo.json"), "w", encoding="utf-8") as fh:
            json.dump(combo, fh)
            fh.write("\n")

    seconds = result.trace.loop_seconds
    if cfg.include_build:
        seconds += build_seconds
    return {
        "estimator": label,
        "f": f_final,
        "seconds": seconds,
        "gradient_seconds": result.trace.gradient_seconds,
        "build_seconds": build_seconds,
        "err": 0.0,  # filled in once the grid maximum is known
    }


def _load_objective(path: str) -> CompositeObjective:
    with open(path, "r", encoding="utf-8") as fh:
        return objective_from_json(json.load(fh), base_dir=os.path.dirname(path))


def _load_matroid(path: str, ground_size: int) -> PartitionMatroid:
    with open(path, "r", encoding="utf-8") as fh:
        return matroid_from_json(json.load(fh), ground_size=ground_size)


def dump_instance(
    obj: CompositeObjective, mat: PartitionMatroid, out_dir: str
) -> Tuple[str, str]:
    """Write objective.json + matroid.json; returns both paths."""
    os.makedirs(out_dir, exist_ok=True)
    obj_path = os.path.join(out_dir, "objective.json")
    mat_path = os.path.join(out_dir, "matroid.json")
    with open(obj_path, "w", encoding="utf-8") as fh:
        json.dump(objective_to_json(obj), fh, indent=2)
        fh.write("\n")
    with open(mat_path, "w", encoding="utf-8") as fh:
        json.dump(matroid_to_json(mat), fh, indent=2)
        fh.write("\n")
    return obj_path, mat_path


# ----------------------------------------------------------------------
# guarded verification suites


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    bound: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return (f"{status} {self.name}: measured {self.measured:.6g} "
                f"vs bound {self.bound:.6g}{extra}")


def verify(
    cfg: Optional[ExperimentConfig] = None,
    degrees: Sequence[int] = (1, 2, 3, 4, 5, 6),
    draws: int = 2000,
) -> List[CheckResult]:
    """Guarded oracle suites on a small instance; raises beyond the guard.

    Covers: polynomial-gradient bias against its proven bound per degree,
    the greedy approximation certificate, the pipage rounding certificate,
    and sampler unbiasedness (4-sigma per coordinate).
    """
    cfg = cfg or ExperimentConfig()
    obj, mat = (
        (_load_objective(cfg.objective_file),
         _load_matroid(cfg.matroid_file, None))
        if cfg.objective_file is not None
        else build_instance(cfg.instance, cfg.seed, cfg.instance_params)
    )
    n = obj.ground_size
    if n > cfg.max_oracle_ground:
        raise OracleGuardError(
            f"verification needs exhaustive oracles: ground size {n} exceeds "
            f"the guard {cfg.max_oracle_ground}"
        )
    checks: List[CheckResult] = []
    rng = np.random.default_rng(cfg.seed)
    y = rng.random(n) * 0.9
    exact = grad_exact(obj, y, max_ground=cfg.max_oracle_ground)

    for degree in degrees:
        fhat = build_poly_estimator(obj, degree)
        approx = grad_poly(fhat, y)
        measured = float(np.linalg.norm(exact.values - approx.values))
        bound = bias_bound_for(obj, degree)
        checks.append(CheckResult(
            f"bias-bound-L{degree}", measured <= bound + 1e-12, measured, bound
        ))

    degree = max(degrees)
    est = PolyEstimator(obj, degree)
    result = continuous_greedy(mat, GreedyConfig(cfg.gamma), est)
    cert = approximation_certificate(
        obj, mat, result.y, degree, GreedyConfig(cfg.gamma).iterations,
        max_ground=cfg.max_oracle_ground,
    )
    checks.append(CheckResult(
        "greedy-certificate", cert.satisfied, cert.achieved, cert.guarantee,
        f"K={cert.iterations}",
    ))

    x = pipage_round(est.surrogate, mat, result.y)
    pcert = pipage_certificate(obj, mat, result.y, x, degree,
                               max_ground=cfg.max_oracle_ground)
    checks.append(CheckResult(
        "pipage-certificate", pcert.satisfied, pcert.rounded_value,
        pcert.fractional_value - pcert.allowed_loss,
    ))

    sample = grad_sample(obj, y, SampleConfig(draws, seed=cfg.seed),
                         return_stderr=True)
    gap = np.abs(sample.values - exact.values)
    limit = 4.0 * sample.stderr + 1e-9
    worst = int(np.argmax(gap - limit))
    checks.append(CheckResult(
        "sampler-zscore", bool(np.all(gap <= limit)), float(gap[worst]),
        float(limit[worst]), f"T={draws}",
    ))
    return checks


__all__ = [
    "TRACE_HEADER",
    "INSTANCE_GENERATORS",
    "build_instance",
    "ExperimentConfig",
    "config_from_json",
    "parse_estimator_label",
    "cell_seed",
    "make_estimator",
    "write_trace",
    "read_trace",
    "strip_timing_text",
    "strip_timing_summary",
    "run_experiment",
    "dump_instance",
    "CheckResult",
    "verify",
]

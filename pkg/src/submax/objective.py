"""Composite set-function objectives and gradient estimators.

An objective is

    f(x) = offset + sum_j  w_j * h_j(g_j(x))

with multilinear inner functions g_j and analytic scalar kernels h_j.  Its
multilinear relaxation G(y) = E[f(x)] under independent Bernoulli(y) draws is
maximized by continuous greedy, which only needs gradients of G.  Two
estimators are provided:

* polynomial: replace each h_j by its degree-L Taylor polynomial and expand
  the composition in the idempotent monomial ring.  The expansion's value at
  fractional y IS its relaxation, so gradients are deterministic single
  passes over the stored terms.  The truncation of h_j is the only error.

* sampling: Monte-Carlo estimate of the pinned difference
  E[f([x]_{+i}) - f([x]_{-i})] per coordinate, with one independent uniform
  draw per coordinate per sample.  Seeded and reproducible.

Exhaustive oracles (full 2^N enumeration) back both up at small sizes, and
closed-form bias bounds quantify the polynomial estimator's worst case.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .analytic import (
    AnalyticKernel,
    eval_kernel,
    eval_kernel_batch,
    kernel_from_json,
    kernel_to_json,
    residual_bound,
    taylor,
)
from .errors import DomainError, InputError, OracleGuardError
from .matroid import PartitionMatroid
from .polynomial import MultilinearPoly, poly_from_text, poly_to_text

_BINARY_TOL = 1e-9
_ORACLE_GUARD = 20
_SAMPLE_CHUNK_SCALARS = 1 << 17


@dataclass(frozen=True)
class ObjectiveTerm:
    weight: float
    kernel: AnalyticKernel
    inner: MultilinearPoly


@dataclass(frozen=True)
class SampleConfig:
    """Monte-Carlo settings: number of draws T and the RNG seed."""

    draws: int
    seed: int = 0

    def __post_init__(self):
        if self.draws < 1:
            raise InputError(f"sample count must be >= 1, got {self.draws}")


@dataclass
class GradientEstimate:
    values: np.ndarray
    estimator_tag: str
    wall_seconds: float
    stderr: Optional[np.ndarray] = None


class CompositeObjective:
    """offset + sum_j w_j * h_j(g_j(x)) over a common ground set."""

    __slots__ = ("_n", "_terms", "_offset")

    def __init__(
        self,
        ground_size: int,
        terms: Sequence[ObjectiveTerm],
        offset: float = 0.0,
    ):
        self._n = int(ground_size)
        if self._n < 1:
            raise InputError(f"ground_size must be positive, got {ground_size}")
        for t in terms:
            if t.inner.ground_size != self._n:
                raise InputError(
                    f"inner polynomial ground size {t.inner.ground_size} != {self._n}"
                )
            if not math.isfinite(t.weight):
                raise InputError("term weight must be finite")
        self._terms = tuple(terms)
        self._offset = float(offset)

    @property
    def ground_size(self) -> int:
        return self._n

    @property
    def terms(self) -> Tuple[ObjectiveTerm, ...]:
        return self._terms

    @property
    def offset(self) -> float:
        return self._offset

    @property
    def monomial_count(self) -> int:
        """Total stored monomials across inner functions."""
        return sum(t.inner.term_count for t in self._terms)

    @property
    def mean_monomial_size(self) -> float:
        terms = self.monomial_count
        lits = sum(t.inner.literal_count for t in self._terms)
        return lits / terms if terms else 0.0

    def __repr__(self) -> str:
        return (
            f"CompositeObjective(N={self._n}, terms={len(self._terms)}, "
            f"monomials={self.monomial_count})"
        )

    # ------------------------------------------------------------------

    def _coerce_binary(self, x: Sequence[float]) -> np.ndarray:
        arr = np.asarray(x, dtype=np.float64)
        if arr.shape != (self._n,):
            raise InputError(f"point has shape {arr.shape}, expected ({self._n},)")
        if not np.all(
            (np.abs(arr) <= _BINARY_TOL) | (np.abs(arr - 1.0) <= _BINARY_TOL)
        ):
            raise InputError("expected a binary point")
        return (arr > 0.5).astype(np.float64)

    def exact_value(self, x: Sequence[float]) -> float:
        """f at a binary point (kernel domains validated)."""
        arr = self._coerce_binary(x)
        total = self._offset
        for t in self._terms:
            total += t.weight * eval_kernel(t.kernel, t.inner.evaluate(arr))
        return total


# ----------------------------------------------------------------------
# polynomial estimator


def build_poly_estimator(obj: CompositeObjective, degree: int) -> MultilinearPoly:
    """Expand offset + sum_j w_j * taylor_L(h_j)(g_j) in the monomial ring.

    The result agrees with the degree-L surrogate of f on every binary point,
    and its fractional evaluation is that surrogate's relaxation.  Identity
    kernels expand to g_j itself, with no truncation error.
    """
    n = obj.ground_size
    total = MultilinearPoly.constant(n, obj.offset)
    for t in obj.terms:
        tp = taylor(t.kernel, degree)
        shifted = t.inner - tp.center
        acc = MultilinearPoly.constant(n, tp.coeffs[-1])
        for c in reversed(tp.coeffs[:-1]):
            acc = acc * shifted + c
        total = total + acc.scale(t.weight)
    return total


def grad_poly(
    fhat: MultilinearPoly, y: Sequence[float], tag: str = "poly"
) -> GradientEstimate:
    """Gradient of the expanded surrogate at y (deterministic)."""
    start = time.perf_counter()
    values = fhat.gradient(y)
    return GradientEstimate(values, tag, time.perf_counter() - start)


# ----------------------------------------------------------------------
# sampling estimator


def _pinned_diff_chunk(
    term: ObjectiveTerm, x_chunk: np.ndarray, out: np.ndarray
) -> None:
    """Add w_j * (h_j(g_j pinned +i) - h_j(g_j pinned -i)) into out (S, N).

    Works from unsatisfied-literal counts: pinning x_i flips only the terms
    where literal i is pivotal (count 0 or 1), so per-sample deltas are a
    single pass over the stored literals.
    """
    lit_idx, lit_neg, seg_starts, seg_lens, coeffs, const = term.inner._compile()
    s_count, n = x_chunk.shape
    if coeffs.size == 0:
        return  # constant inner function: pinning changes nothing
    xv = x_chunk[:, lit_idx]
    unsat = np.where(lit_neg[None, :], xv, ~xv)
    u = np.add.reduceat(unsat.astype(np.int64), seg_starts, axis=1)
    g_base = const + (u == 0).astype(np.float64) @ coeffs
    u_lit = np.repeat(u, seg_lens, axis=1)
    c_lit = np.repeat(coeffs, seg_lens)[None, :]
    neg = lit_neg[None, :]
    pos = ~neg
    pivot = u_lit == 1
    settled = u_lit == 0
    plus = c_lit * (
        (pos & unsat & pivot).astype(np.float64)
        - (neg & ~unsat & settled).astype(np.float64)
    )
    minus = c_lit * (
        (neg & unsat & pivot).astype(np.float64)
        - (pos & ~unsat & settled).astype(np.float64)
    )
    flat_idx = (np.arange(s_count)[:, None] * n + lit_idx[None, :]).ravel()
    d_plus = np.zeros(s_count * n)
    np.add.at(d_plus, flat_idx, plus.ravel())
    d_minus = np.zeros(s_count * n)
    np.add.at(d_minus, flat_idx, minus.ravel())
    g_plus = g_base[:, None] + d_plus.reshape(s_count, n)
    g_minus = g_base[:, None] + d_minus.reshape(s_count, n)
    if term.kernel.kind == "queue" and g_plus.max(initial=0.0) >= 1.0 - _BINARY_TOL:
        raise DomainError("queue load reached 1 during sampling: system unstable")
    out += term.weight * (
        eval_kernel_batch(term.kernel, g_plus)
        - eval_kernel_batch(term.kernel, g_minus)
    )


def _sample_chunk_rows(draws: int, n: int) -> int:
    """Rows per sampling chunk; depends only on (draws, N) for determinism."""
    return max(1, min(draws, _SAMPLE_CHUNK_SCALARS // max(1, n)))


def grad_sample(
    obj: CompositeObjective,
    y: Sequence[float],
    cfg: SampleConfig,
    return_stderr: bool = False,
) -> GradientEstimate:
    """Monte-Carlo gradient: mean of f([x]_{+i}) - f([x]_{-i}) per coordinate.

    Same seed and inputs give bit-identical output.  ``return_stderr`` adds
    the per-coordinate standard error of the mean.
    """
    start = time.perf_counter()
    n = obj.ground_size
    arr = np.asarray(y, dtype=np.float64)
    if arr.shape != (n,):
        raise InputError(f"point has shape {arr.shape}, expected ({n},)")
    if arr.size and (arr.min() < -_BINARY_TOL or arr.max() > 1.0 + _BINARY_TOL):
        raise InputError("coordinates must lie in [0, 1]")
    arr = np.clip(arr, 0.0, 1.0)
    rng = np.random.default_rng(cfg.seed)
    chunk = _sample_chunk_rows(cfg.draws, n)
    total = np.zeros(n)
    total_sq = np.zeros(n)
    remaining = cfg.draws
    while remaining > 0:
        s_count = min(chunk, remaining)
        x_chunk = rng.random((s_count, n)) < arr[None, :]
        diff = np.zeros((s_count, n))
        for term in obj.terms:
            _pinned_diff_chunk(term, x_chunk, diff)
        total += diff.sum(axis=0)
        total_sq += (diff * diff).sum(axis=0)
        remaining -= s_count
    values = total / cfg.draws
    stderr = None
    if return_stderr:
        if cfg.draws > 1:
            var = (total_sq - cfg.draws * values * values) / (cfg.draws - 1)
            stderr = np.sqrt(np.maximum(var, 0.0) / cfg.draws)
        else:
            stderr = np.zeros(n)
    return GradientEstimate(
        values, f"sample({cfg.draws})", time.perf_counter() - start, stderr
    )




def value_sample(obj: CompositeObjective, y: Sequence[float], cfg: SampleConfig) -> float:
    """Monte-Carlo estimate of the relaxation G(y) (mean of f over draws)."""
    n = obj.ground_size
    arr = np.clip(np.asarray(y, dtype=np.float64), 0.0, 1.0)
    if arr.shape != (n,):
        raise InputError(f"point has shape {arr.shape}, expected ({n},)")
    rng = np.random.default_rng(cfg.seed)
    chunk = _sample_chunk_rows(cfg.draws, n)
    acc = 0.0
    remaining = cfg.draws
    while remaining > 0:
        s_count = min(chunk, remaining)
        x_chunk = (rng.random((s_count, n)) < arr[None, :]).astype(np.float64)
        vals = np.full(s_count, obj.offset)
        for t in obj.terms:
            g = t.inner.evaluate_binary_batch(x_chunk)
            lo, hi = t.kernel.domain
            if g.min(initial=lo) < lo - _BINARY_TOL or g.max(initial=hi) > hi + _BINARY_TOL:
                raise DomainError(
                    f"inner value escaped kernel domain [{lo}, {hi}] while sampling"
                )
            vals += t.weight * eval_kernel_batch(t.kernel, np.clip(g, lo, hi))
        acc += float(vals.sum())
        remaining -= s_count
    return acc / cfg.draws


# ----------------------------------------------------------------------
# exhaustive oracles (small N only)


def _binary_chunks(n: int, chunk_bits: int = 16):
    total = 1 << n
    step = 1 << min(n, chunk_bits)
    shifts = np.arange(n, dtype=np.int64)
    for begin in range(0, total, step):
        idx = np.arange(begin, min(begin + step, total), dtype=np.int64)
        yield ((idx[:, None] >> shifts[None, :]) & 1).astype(np.float64)


def relaxation_exact(
    obj: CompositeObjective, y: Sequence[float], max_ground: int = _ORACLE_GUARD
) -> float:
    """G(y) by full 2^N enumeration.  Refuses beyond ``max_ground``."""
    n = obj.ground_size
    if n > max_ground:
        raise OracleGuardError(
            f"exhaustive relaxation needs 2^{n} evaluations; guard is N <= {max_ground}"
        )
    arr = np.clip(np.asarray(y, dtype=np.float64), 0.0, 1.0)
    if arr.shape != (n,):
        raise InputError(f"point has shape {arr.shape}, expected ({n},)")
    acc = 0.0
    for x in _binary_chunks(n):
        weights = np.prod(np.where(x > 0.5, arr[None, :], 1.0 - arr[None, :]), axis=1)
        vals = np.full(x.shape[0], obj.offset)
        for t in obj.terms:
            g = t.inner.evaluate_binary_batch(x)
            lo, hi = t.kernel.domain
            if g.min(initial=lo) < lo - _BINARY_TOL or g.max(initial=hi) > hi + _BINARY_TOL:
                raise DomainError(
                    f"inner value escaped kernel domain [{lo}, {hi}]"
                )
            vals += t.weight * eval_kernel_batch(t.kernel, np.clip(g, lo, hi))
        acc += float(weights @ vals)
    return acc


def grad_exact(
    obj: CompositeObjective, y: Sequence[float], max_ground: int = _ORACLE_GUARD
) -> GradientEstimate:
    """Exact relaxation gradient via pinned exhaustive expectations."""
    start = time.perf_counter()
    n = obj.ground_size
    arr = np.clip(np.asarray(y, dtype=np.float64), 0.0, 1.0)
    if arr.shape != (n,):
        raise InputError(f"point has shape {arr.shape}, expected ({n},)")
    values = np.zeros(n)
    for i in range(n):
        hi = arr.copy()
        hi[i] = 1.0
        lo = arr.copy()
        lo[i] = 0.0
        values[i] = relaxation_exact(obj, hi, max_ground) - relaxation_exact(
            obj, lo, max_ground
        )
    return GradientEstimate(values, "exact", time.perf_counter() - start)


# ----------------------------------------------------------------------
# error bounds and constants


def surrogate_gap_bound(obj: CompositeObjective, degree: int) -> float:
    """Pointwise bound on |f - surrogate| (and so on |G - relaxed surrogate|):
    the weighted sum of kernel truncation-error bounds."""
    return sum(abs(t.weight) * residual_bound(t.kernel, degree) for t in obj.terms)


def coordinate_bias_bound(obj: CompositeObjective, degree: int) -> float:
    """Per-coordinate bound on |exact - polynomial| gradient entries.

    Each pinned expectation inherits at most sum_j |w_j| * residual_j, and a
    gradient entry is a difference of two of them.
    """
    return 2.0 * surrogate_gap_bound(obj, degree)


def bias_bound_for(obj: CompositeObjective, degree: int) -> float:
    """Euclidean-norm bound on the polynomial estimator's gradient bias."""
    return math.sqrt(obj.ground_size) * coordinate_bias_bound(obj, degree)


def bias_bound(
    kind: str,
    m_terms: int,
    ground_size: int,
    degree: int,
    s_bar: Optional[float] = None,
) -> float:
    """Closed-form gradient-bias bounds per problem family.

    kind: 'sm' (weighted-coverage summarization), 'im' (influence), 'fl'
    (facility location), 'cn' (cache networks, needs s_bar).
    """
    root_n = math.sqrt(ground_size)
    if kind == "sm":
        return m_terms * root_n / ((degree + 1) * 2.0**degree)
    if kind in ("im", "fl"):
        return root_n / ((degree + 1) * 2.0**degree)
    if kind == "cn":
        if s_bar is None:
            raise InputError("cn bias bound requires s_bar")
        if not 0.0 < s_bar < 1.0:
            raise DomainError(f"cn bias bound needs 0 < s_bar < 1, got {s_bar}")
        return 2.0 * m_terms * root_n * s_bar ** (degree + 1) / (1.0 - s_bar)
    raise InputError(f"unknown problem kind {kind!r}")


def theoretical_sample_count(ground_size: int, max_budget: int) -> int:
    """Published worst-case draw count for the sampling estimator.

    Uses accuracy delta = 1 / (40 * d^2 * N) with d the largest block budget;
    the count is 10 / delta^2 * (1 + ln N).  Astronomical even at toy sizes,
    which is the point of reporting it.
    """
    if ground_size < 1 or max_budget < 1:
        raise InputError("ground size and budget must be positive")
    delta = 1.0 / (40.0 * max_budget**2 * ground_size)
    return math.ceil(10.0 / delta**2 * (1.0 + math.log(ground_size)))


def lipschitz_p(
    obj: CompositeObjective, mat: PartitionMatroid, method: str = "auto"
) -> float:
    """Step-size penalty constant P = 2 * max_{x independent} f(x).

    'exhaustive' maximizes over all bases (guarded); 'greedy' returns the
    rigorous upper bound 4 * f(greedy base), since the best-marginal greedy
    base is at least half the optimum for monotone submodular objectives.
    'auto' tries exhaustive first, falling back to greedy past the guard.
    The greedy path can overstate P by up to 2x (never understates).
    """
    if method not in ("auto", "exhaustive", "greedy"):
        raise InputError(f"unknown method {method!r}")
    if method in ("auto", "exhaustive"):
        try:
            best = max(obj.exact_value(x) for x in mat.enumerate_bases())
            return 2.0 * best
        except OracleGuardError:
            if method == "exhaustive":
                raise
    x = np.zeros(obj.ground_size)
    counts = [0] * len(mat.blocks)
    value = obj.exact_value(x)
    while True:
        best_gain = -math.inf
        best_i = None
        for i in range(obj.ground_size):
            if x[i] > 0.5:
                continue
            b = mat.block_of(i)
            if counts[b] >= mat.capacities[b]:
                continue
            x[i] = 1.0
            gain = obj.exact_value(x) - value
            x[i] = 0.0
            if gain > best_gain + 1e-15:
                best_gain = gain
                best_i = i
        if best_i is None:
            break
        x[best_i] = 1.0
        counts[mat.block_of(best_i)] += 1
        value += best_gain
    return 4.0 * value


# ----------------------------------------------------------------------
# estimator objects (uniform interface for the optimizer and harness)


class PolyEstimator:
    """Deterministic gradients from the degree-L expanded surrogate."""

    def __init__(self, obj: CompositeObjective, degree: int):
        self.degree = int(degree)
        self.label = f"POLY{self.degree}"
        start = time.perf_counter()
        self.surrogate = build_poly_estimator(obj, self.degree)
        self.build_seconds = time.perf_counter() - start

    def gradient(self, y: Sequence[float]) -> GradientEstimate:
        return grad_poly(self.surrogate, y, tag=f"poly({self.degree})")

    def value(self, y: Sequence[float]) -> float:
        return self.surrogate.evaluate(y)


class SampleEstimator:
    """Monte-Carlo gradients; a fresh derived seed per call, reproducibly."""

    def __init__(self, obj: CompositeObjective, draws: int, seed: int = 0):
        if draws < 1:
            raise InputError(f"sample count must be >= 1, got {draws}")
        self.obj = obj
        self.draws = int(draws)
        self.seed = int(seed)
        self.label = f"SAMP{self.draws}"
        self.build_seconds = 0.0
        self._grad_calls = 0
        self._value_calls = 0

    def _derived_seed(self, stream: int, counter: int) -> int:
        ss = np.random.SeedSequence([self.seed, stream, counter])
        return int(ss.generate_state(1, np.uint64)[0])

    def gradient(self, y: Sequence[float]) -> GradientEstimate:
        cfg = SampleConfig(self.draws, self._derived_seed(1, self._grad_calls))
        self._grad_calls += 1
        est = grad_sample(self.obj, y, cfg)
        est.estimator_tag = f"sample({self.draws})"
        return est

    def value(self, y: Sequence[float]) -> float:
        cfg = SampleConfig(self.draws, self._derived_seed(2, self._value_calls))
        self._value_calls += 1
        return value_sample(self.obj, y, cfg)


class ExactEstimator:
    """Exhaustive oracle as an estimator (guarded; small N only)."""

    def __init__(self, obj: CompositeObjective, max_ground: int = _ORACLE_GUARD):
        self.obj = obj
        self.max_ground = max_ground
        self.label = "EXACT"
        self.build_seconds = 0.0

    def gradient(self, y: Sequence[float]) -> GradientEstimate:
        return grad_exact(self.obj, y, self.max_ground)

    def value(self, y: Sequence[float]) -> float:
        return relaxation_exact(self.obj, y, self.max_ground)


# ----------------------------------------------------------------------
# serialization


def objective_to_json(obj: CompositeObjective) -> dict:
    return {
        "ground_size": obj.ground_size,
        "offset": obj.offset,
        "terms": [
            {
                "weight": t.weight,
                "kernel": kernel_to_json(t.kernel),
                "poly": poly_to_text(t.inner),
            }
            for t in obj.terms
        ],
    }


def objective_from_json(data: dict, base_dir: Optional[str] = None) -> CompositeObjective:
    """Parse an objective spec; inner polynomials inline or by file reference."""
    import os

    if not isinstance(data, dict):
        raise InputError("objective spec must be a JSON object")
    try:
        n = int(data["ground_size"])
        raw_terms = data["terms"]
    except KeyError as exc:
        raise InputError(f"objective spec missing field: {exc}") from exc
    terms = []
    for entry in raw_terms:
        kernel = kernel_from_json(entry["kernel"])
        if "poly" in entry:
            poly = poly_from_text(entry["poly"])
        elif "poly_file" in entry:
            path = entry["poly_file"]
            if base_dir is not None:
                path = os.path.join(base_dir, path)
            with open(path, "r", encoding="utf-8") as fh:
                poly = poly_from_text(fh.read())
        else:
            raise InputError("objective term needs 'poly' or 'poly_file'")
        terms.append(ObjectiveTerm(float(entry["weight"]), kernel, poly))
    return CompositeObjective(n, terms, float(data.get("offset", 0.0)))


__all__ = [
    "ObjectiveTerm",
    "SampleConfig",
    "GradientEstimate",
    "CompositeObjective",
    "build_poly_estimator",
    "grad_poly",
    "grad_sample",
    "value_sample",
    "relaxation_exact",
    "grad_exact",
    "surrogate_gap_bound",
    "coordinate_bias_bound",
    "bias_bound_for",
    "bias_bound",
    "theoretical_sample_count",
    "lipschitz_p",
    "PolyEstimator",
    "SampleEstimator",
    "ExactEstimator",
    "objective_to_json",
    "objective_from_json",
]

"""Scalar analytic kernels and their Taylor polynomials.

Composite objectives apply a concave/analytic scalar map h to the value of an
inner multilinear function.  Three kernels are supported:

* ``log1p``      h(s) = log(1 + s)     on [0, 1], expanded around 1/2
* ``queue``      h(s) = s / (1 - s)    on [0, s_bar] with s_bar < 1,
                 expanded around 0 (the geometric series)
* ``identity``   h(s) = s              (exact; truncation error is zero)

For each kernel the module provides the degree-L Taylor polynomial and a
uniform bound on the truncation error over the kernel's domain.  For log1p
around 1/2 the coefficients are

    a_0 = log(3/2),   a_l = (-1)^(l+1) * (2/3)^l / l,

with |h - taylor_L| <= 1 / ((L+1) * 2^(L+1)) on [0, 1].  For the queueing
kernel the degree-L truncation error is exactly s^(L+1) / (1 - s), bounded by
s_bar^(L+1) / (1 - s_bar) on [0, s_bar].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, InputError

_DOMAIN_TOL = 1e-9

KERNEL_KINDS = ("log1p", "queue", "identity")


@dataclass(frozen=True)
class AnalyticKernel:
    """A supported scalar kernel; ``s_bar`` applies to the queue kind only."""

    kind: str
    s_bar: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise InputError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "queue":
            if self.s_bar is None:
                raise InputError("queue kernel requires s_bar")
            if not 0.0 < self.s_bar < 1.0:
                raise DomainError(
                    f"queue kernel needs 0 < s_bar < 1 for stability, got {self.s_bar}"
                )
        elif self.s_bar is not None:
            raise InputError(f"s_bar only applies to the queue kernel")

    @property
    def domain(self) -> tuple:
        if self.kind == "queue":
            return (0.0, self.s_bar)
        return (0.0, 1.0)

    @property
    def center(self) -> float:
        """Expansion point of the Taylor polynomial."""
        return 0.5 if self.kind == "log1p" else 0.0


@dataclass(frozen=True)
class TaylorPolynomial:
    """coeffs[l] multiplies (s - center)^l."""

    center: float
    coeffs: tuple

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


def _check_domain(kernel: AnalyticKernel, s: float) -> float:
    lo, hi = kernel.domain
    if s < lo - _DOMAIN_TOL or s > hi + _DOMAIN_TOL:
        if kernel.kind == "queue" and s >= 1.0 - _DOMAIN_TOL:
            raise DomainError(
                f"queue load s={s} is at or beyond 1: system unstable"
            )
        raise DomainError(
            f"kernel {kernel.kind!r} evaluated at s={s}, outside [{lo}, {hi}]"
        )
    return min(max(s, lo), hi)


def eval_kernel(kernel: AnalyticKernel, s: float) -> float:
    """h(s), with domain validation."""
    s = _check_domain(kernel, float(s))
    if kernel.kind == "log1p":
        return math.log1p(s)
    if kernel.kind == "queue":
        return s / (1.0 - s)
    return s


def taylor(kernel: AnalyticKernel, degree: int) -> TaylorPolynomial:
    """Degree-``degree`` Taylor polynomial of the kernel around its center."""
    if degree < 0 or int(degree) != degree:
        raise InputError(f"degree must be a non-negative integer, got {degree}")
    degree = int(degree)
    if kernel.kind == "log1p":
        coeffs = [math.log(1.5)]
        coeffs += [(-1.0) ** (l + 1) * (2.0 / 3.0) ** l / l for l in range(1, degree + 1)]
        return TaylorPolynomial(0.5, tuple(coeffs))
    if kernel.kind == "queue":
        if degree < 1:
            raise InputError("queue kernel needs degree >= 1")
        return TaylorPolynomial(0.0, (0.0,) + (1.0,) * degree)
    # identity: exact at any degree, so the expansion is always s itself
    if degree >= 1:
        coeffs = (0.0, 1.0) + (0.0,) * (degree - 1)
    else:
        coeffs = (0.0, 1.0)
    return TaylorPolynomial(0.0, coeffs)


def eval_taylor(tp: TaylorPolynomial, s: float) -> float:
    """Horner evaluation of the Taylor polynomial at s."""
    u = float(s) - tp.center
    acc = 0.0
    for c in reversed(tp.coeffs):
        acc = acc * u + c
    return acc


def residual_bound(
    kernel: AnalyticKernel, degree: int, s_bar: Optional[float] = None
) -> float:
    """Uniform truncation-error bound for the degree-``degree`` expansion.

    ``s_bar`` overrides the kernel's own bound for the queue kind.
    """
    if degree < 0:
        raise InputError(f"degree must be non-negative, got {degree}")
    if kernel.kind == "log1p":
        return 1.0 / ((degree + 1) * 2.0 ** (degree + 1))
    if kernel.kind == "queue":
        sb = kernel.s_bar if s_bar is None else float(s_bar)
        if sb is None:
            raise InputError("queue residual bound needs s_bar")
        if not 0.0 < sb < 1.0:
            raise DomainError(f"queue residual bound needs 0 < s_bar < 1, got {sb}")
        return sb ** (degree + 1) / (1.0 - sb)
    return 0.0


def kernel_to_json(kernel: AnalyticKernel) -> dict:
    if kernel.kind == "queue":
        return {"kind": "queue", "s_bar": kernel.s_bar}
    return {"kind": kernel.kind}


def kernel_from_json(data: dict) -> AnalyticKernel:
    if not isinstance(data, dict) or "kind" not in data:
        raise InputError(f"kernel spec must be an object with a 'kind': {data!r}")
    kind = data["kind"]
    if kind == "queue":
        if "s_bar" not in data:
            raise InputError("queue kernel spec requires 's_bar'")
        return AnalyticKernel("queue", float(data["s_bar"]))
    extra = set(data) - {"kind"}
    if extra:
        raise InputError(f"unexpected kernel fields: {sorted(extra)}")
    return AnalyticKernel(kind)


def eval_kernel_batch(kernel: AnalyticKernel, s: np.ndarray) -> np.ndarray:
    """Vectorized h over an array of in-domain values (no per-entry checks)."""
    if kernel.kind == "log1p":
        return np.log1p(s)
    if kernel.kind == "queue":
        return s / (1.0 - s)
    return np.asarray(s, dtype=np.float64)


__all__ = [
    "AnalyticKernel",
    "TaylorPolynomial",
    "KERNEL_KINDS",
    "eval_kernel",
    "eval_kernel_batch",
    "taylor",
    "eval_taylor",
    "residual_bound",
    "kernel_to_json",
    "kernel_from_json",
]

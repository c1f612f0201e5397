"""Sparse multilinear polynomials over binary variables.

A polynomial is a finite sum of weighted monomials

    p(x) = sum_t  c_t * prod_{i in pos_t} x_i * prod_{i in neg_t} (1 - x_i)

over variables x_0 .. x_{N-1} taking values in {0, 1}.  Because x_i^2 = x_i
on binary points, multiplication merges index sets instead of raising
exponents, and a monomial containing both x_i and (1 - x_i) vanishes.

The same expression evaluated at a fractional point y in [0, 1]^N equals the
expectation of p(x) when each x_i is drawn independently as Bernoulli(y_i),
which is what makes this representation useful for relaxation-based
optimization: evaluating the stored form IS the multilinear extension.

Complemented literals (1 - x_i) are first-class so that coverage-style terms
such as prod_{i in S} (1 - x_i) stay single monomials; expanding them into
plain monomials would blow up as 2^|S|.

Terms whose coefficient magnitude falls below a drop tolerance are removed
during canonicalization; wrap oracle computations in ``exact_coefficients()``
to retain everything.
"""

from __future__ import annotations

from contextlib import contextmanager
from types import MappingProxyType
from typing import Dict, Iterable, Iterator, Mapping, Sequence, Tuple

import numpy as np

from .errors import InputError

# Literal index sets are stored as strictly increasing tuples; a term key is
# the pair (plain indices, complemented indices), disjoint by construction.
TermKey = Tuple[Tuple[int, ...], Tuple[int, ...]]

_DROP_TOL = 1e-15
_COORD_TOL = 1e-9


@contextmanager
def exact_coefficients() -> Iterator[None]:
    """Temporarily disable coefficient dropping (for exact oracle work)."""
    global _DROP_TOL
    saved = _DROP_TOL
    _DROP_TOL = 0.0
    try:
        yield
    finally:
        _DROP_TOL = saved


def drop_tolerance() -> float:
    return _DROP_TOL


def _check_indices(indices: Iterable[int], n: int) -> Tuple[int, ...]:
    out = tuple(sorted(set(int(i) for i in indices)))
    if out and (out[0] < 0 or out[-1] >= n):
        raise InputError(f"variable index out of range [0, {n}): {out}")
    return out


class MultilinearPoly:
    """Immutable sparse multilinear polynomial (see module docstring)."""

    __slots__ = ("_n", "_terms", "_compiled")

    def __init__(self, ground_size: int, terms: Mapping[TermKey, float] | None = None):
        if ground_size < 0:
            raise InputError(f"ground_size must be non-negative, got {ground_size}")
        self._n = int(ground_size)
        merged: Dict[TermKey, float] = {}
        if terms:
            for (pos, neg), coeff in terms.items():
                pos = _check_indices(pos, self._n)
                neg = _check_indices(neg, self._n)
                if set(pos) & set(neg):
                    continue  # x_i * (1 - x_i) == 0 on binary points
                key = (pos, neg)
                merged[key] = merged.get(key, 0.0) + float(coeff)
        tol = _DROP_TOL
        self._terms: Dict[TermKey, float] = {
            k: c for k, c in merged.items() if c != 0.0 and abs(c) >= tol
        }
        self._compiled = None

    # ------------------------------------------------------------------
    # constructors

    @classmethod
    def zero(cls, ground_size: int) -> "MultilinearPoly":
        return cls(ground_size, {})

    @classmethod
    def constant(cls, ground_size: int, value: float) -> "MultilinearPoly":
        return cls(ground_size, {((), ()): float(value)})

    @classmethod
    def variable(cls, ground_size: int, index: int) -> "MultilinearPoly":
        """The polynomial x_index."""
        return cls(ground_size, {((int(index),), ()): 1.0})

    @classmethod
    def from_terms(
        cls, ground_size: int, terms: Mapping[Tuple[int, ...], float]
    ) -> "MultilinearPoly":
        """Build from plain monomials: map from index tuple to coefficient."""
        return cls(ground_size, {(tuple(k), ()): c for k, c in terms.items()})

    @classmethod
    def linear(cls, ground_size: int, weights: Sequence[float]) -> "MultilinearPoly":
        """sum_i weights[i] * x_i."""
        if len(weights) != ground_size:
            raise InputError("weights length must equal ground_size")
        return cls(ground_size, {((i,), ()): w for i, w in enumerate(weights)})

    @classmethod
    def complement_product(
        cls, ground_size: int, indices: Iterable[int], coeff: float = 1.0
    ) -> "MultilinearPoly":
        """coeff * prod_{i in indices} (1 - x_i), kept as a single monomial."""
        return cls(ground_size, {((), tuple(indices)): float(coeff)})

    # ------------------------------------------------------------------
    # basic introspection

    @property
    def ground_size(self) -> int:
        return self._n

    @property
    def terms(self) -> Mapping[TermKey, float]:
        return MappingProxyType(self._terms)

    @property
    def term_count(self) -> int:
        return len(self._terms)

    @property
    def literal_count(self) -> int:
        """Total number of literals across terms (size proxy for op costs)."""
        return sum(len(p) + len(q) for p, q in self._terms)

    @property
    def degree(self) -> int:
        return max((len(p) + len(q) for p, q in self._terms), default=0)

    def variables(self) -> Tuple[int, ...]:
        used = set()
        for pos, neg in self._terms:
            used.update(pos)
            used.update(neg)
        return tuple(sorted(used))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MultilinearPoly):
            return NotImplemented
        return self._n == other._n and self._terms == other._terms

    __hash__ = None  # type: ignore[assignment]

    def approx_equal(self, other: "MultilinearPoly", tol: float = 1e-12) -> bool:
        if self._n != other._n:
            return False
        keys = set(self._terms) | set(other._terms)
        return all(
            abs(self._terms.get(k, 0.0) - other._terms.get(k, 0.0)) <= tol
            for k in keys
        )

    def __repr__(self) -> str:
        return (
            f"MultilinearPoly(N={self._n}, terms={self.term_count}, "
            f"degree={self.degree})"
        )

    # ------------------------------------------------------------------
    # evaluation

    def _compile(self):
        if self._compiled is None:
            lit_idx, lit_neg, seg_starts, seg_lens, coeffs = [], [], [], [], []
            const = 0.0
            offset = 0
            for (pos, neg), c in sorted(self._terms.items()):
                if not pos and not neg:
                    const += c
                    continue
                seg_starts.append(offset)
                seg_lens.append(len(pos) + len(neg))
                coeffs.append(c)
                for i in pos:
                    lit_idx.append(i)
                    lit_neg.append(False)
                for i in neg:
                    lit_idx.append(i)
                    lit_neg.append(True)
                offset += len(pos) + len(neg)
            self._compiled = (
                np.asarray(lit_idx, dtype=np.int64),
                np.asarray(lit_neg, dtype=bool),
                np.asarray(seg_starts, dtype=np.int64),
                np.asarray(seg_lens, dtype=np.int64),
                np.asarray(coeffs, dtype=np.float64),
                const,
            )
        return self._compiled

    def _coerce_point(self, y: Sequence[float]) -> np.ndarray:
        arr = np.asarray(y, dtype=np.float64)
        if arr.shape != (self._n,):
            raise InputError(f"point has shape {arr.shape}, expected ({self._n},)")
        if arr.size and (arr.min() < -_COORD_TOL or arr.max() > 1.0 + _COORD_TOL):
            raise InputError("coordinates must lie in [0, 1]")
        return np.clip(arr, 0.0, 1.0)

    def evaluate(self, y: Sequence[float]) -> float:
        """Value at y in [0,1]^N (the Bernoulli expectation at fractional y)."""
        arr = self._coerce_point(y)
        lit_idx, lit_neg, seg_starts, _, coeffs, const = self._compile()
        if coeffs.size == 0:
            return const
        vals = np.where(lit_neg, 1.0 - arr[lit_idx], arr[lit_idx])
        prods = np.multiply.reduceat(vals, seg_starts)
        return const + float(coeffs @ prods)

    def evaluate_binary_batch(self, x: np.ndarray) -> np.ndarray:
        """Values on a batch of binary rows, shape (S, N) -> (S,)."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self._n:
            raise InputError(f"batch has shape {x.shape}, expected (S, {self._n})")
        lit_idx, lit_neg, seg_starts, _, coeffs, const = self._compile()
        out = np.full(x.shape[0], const)
        if coeffs.size == 0:
            return out
        vals = np.where(lit_neg[None, :], 1.0 - x[:, lit_idx], x[:, lit_idx])
        prods = np.multiply.reduceat(vals, seg_starts, axis=1)
        return out + prods @ coeffs

    # ------------------------------------------------------------------
    # ring operations (all return new canonical polynomials)

    def _binop_check(self, other: "MultilinearPoly") -> None:
        if self._n != other._n:
            raise InputError(
                f"ground sizes differ: {self._n} vs {other._n}"
            )

    def __add__(self, other) -> "MultilinearPoly":
        if isinstance(other, (int, float)):
            other = MultilinearPoly.constant(self._n, other)
        if not isinstance(other, MultilinearPoly):
            return NotImplemented
        self._binop_check(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0.0) + c
        return MultilinearPoly(self._n, out)

    __radd__ = __add__

    def __neg__(self) -> "MultilinearPoly":
        return self.scale(-1.0)

    def __sub__(self, other) -> "MultilinearPoly":
        if isinstance(other, (int, float)):
            other = MultilinearPoly.constant(self._n, other)
        if not isinstance(other, MultilinearPoly):
            return NotImplemented
        return self + (-other)

    def scale(self, factor: float) -> "MultilinearPoly":
        return MultilinearPoly(
            self._n, {k: c * factor for k, c in self._terms.items()}
        )

    def __mul__(self, other) -> "MultilinearPoly":
        if isinstance(other, (int, float)):
            return self.scale(float(other))
        if not isinstance(other, MultilinearPoly):
            return NotImplemented
        self._binop_check(other)
        out: Dict[TermKey, float] = {}
        for (p1, n1), c1 in self._terms.items():
            s1p, s1n = set(p1), set(n1)
            for (p2, n2), c2 in other._terms.items():
                pos = s1p | set(p2)
                neg = s1n | set(n2)
                if pos & neg:
                    continue  # annihilated on binary points
                key = (tuple(sorted(pos)), tuple(sorted(neg)))
                c = c1 * c2
                prev = out.get(key)
                out[key] = c if prev is None else prev + c
        return MultilinearPoly(self._n, out)

    def __rmul__(self, other) -> "MultilinearPoly":
        if isinstance(other, (int, float)):
            return self.scale(float(other))
        return NotImplemented

    def power(self, exponent: int) -> "MultilinearPoly":
        """Integer power via binary exponentiation, canonicalizing each step."""
        if exponent < 0 or int(exponent) != exponent:
            raise InputError(f"exponent must be a non-negative integer, got {exponent}")
        result = MultilinearPoly.constant(self._n, 1.0)
        base = self
        e = int(exponent)
        while e > 0:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def pin(self, index: int, value: int) -> "MultilinearPoly":
        """Substitute x_index := value (0 or 1)."""
        if value not in (0, 1):
            raise InputError(f"pin value must be 0 or 1, got {value}")
        i = int(index)
        if i < 0 or i >= self._n:
            raise InputError(f"pin index out of range [0, {self._n}): {i}")
        out: Dict[TermKey, float] = {}
        for (pos, neg), c in self._terms.items():
            if i in pos:
                if value == 0:
                    continue
                key = (tuple(v for v in pos if v != i), neg)
            elif i in neg:
                if value == 1:
                    continue
                key = (pos, tuple(v for v in neg if v != i))
            else:
                key = (pos, neg)
            out[key] = out.get(key, 0.0) + c
        return MultilinearPoly(self._n, out)

    def prune(self, tol: float) -> "MultilinearPoly":
        """Drop terms with |coefficient| <= tol (lossy compaction)."""
        return MultilinearPoly(
            self._n, {k: c for k, c in self._terms.items() if abs(c) > tol}
        )

    # ------------------------------------------------------------------
    # derivatives

    def grad_coord(self, y: Sequence[float], index: int) -> float:
        """Partial derivative at y: value pinned at y_i=1 minus pinned at 0."""
        arr = self._coerce_point(y)
        i = int(index)
        if i < 0 or i >= self._n:
            raise InputError(f"coordinate out of range [0, {self._n}): {i}")
        hi = arr.copy()
        hi[i] = 1.0
        lo = arr.copy()
        lo[i] = 0.0
        return self.evaluate(hi) - self.evaluate(lo)

    def gradient(self, y: Sequence[float]) -> np.ndarray:
        """All partial derivatives at y in one pass over the stored terms."""
        arr = self._coerce_point(y)
        lit_idx, lit_neg, seg_starts, seg_lens, coeffs, _ = self._compile()
        grad = np.zeros(self._n)
        if coeffs.size == 0:
            return grad
        vals = np.where(lit_neg, 1.0 - arr[lit_idx], arr[lit_idx])
        is_zero = vals == 0.0
        nz = np.where(is_zero, 1.0, vals)
        nz_prod = np.multiply.reduceat(nz, seg_starts)
        z_count = np.add.reduceat(is_zero.astype(np.float64), seg_starts)
        nzp_lit = np.repeat(nz_prod, seg_lens)
        zc_lit = np.repeat(z_count, seg_lens)
        # Product of the other literals in the same term, robust to zeros.
        others = np.where(
            zc_lit >= 2.0,
            0.0,
            np.where(
                is_zero,
                nzp_lit,  # this literal is the unique zero
                np.where(zc_lit == 1.0, 0.0, nzp_lit / nz),
            ),
        )
        sign = np.where(lit_neg, -1.0, 1.0)
        contrib = np.repeat(coeffs, seg_lens) * sign * others
        np.add.at(grad, lit_idx, contrib)
        return grad


# ----------------------------------------------------------------------
# text serialization
#
# Header line "N=<ground_size>", then one term per line:
#     <coeff> <literal> <literal> ...
# A literal is a variable index, prefixed with "~" when complemented
# (~i stands for the factor 1 - x_i).  A bare coefficient is a constant
# term.  Coefficients use repr(), so round-trips are exact.


def poly_to_text(p: MultilinearPoly) -> str:
    lines = [f"N={p.ground_size}"]
    for (pos, neg), c in sorted(p.terms.items()):
        toks = [repr(c)]
        toks.extend(
            (f"~{i}" if compl else str(i))
            for i, compl in sorted(
                [(i, False) for i in pos] + [(i, True) for i in neg]
            )
        )
        lines.append(" ".join(toks))
    return "\n".join(lines) + "\n"


def poly_from_text(text: str) -> MultilinearPoly:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or not lines[0].startswith("N="):
        raise InputError("polynomial text must start with an 'N=<int>' header")
    try:
        n = int(lines[0][2:])
    except ValueError as exc:
        raise InputError(f"bad ground size header: {lines[0]!r}") from exc
    terms: Dict[TermKey, float] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        toks = line.split()
        try:
            coeff = float(toks[0])
        except ValueError as exc:
            raise InputError(f"line {lineno}: bad coefficient {toks[0]!r}") from exc
        pos, neg = [], []
        for tok in toks[1:]:
            try:
                if tok.startswith("~"):
                    neg.append(int(tok[1:]))
                else:
                    pos.append(int(tok))
            except ValueError as exc:
                raise InputError(f"line {lineno}: bad literal {tok!r}") from exc
            if not 0 <= (neg[-1] if tok.startswith("~") else pos[-1]) < n:
                raise InputError(
                    f"line {lineno}: variable index out of range [0, {n}): {tok}"
                )
        key = (tuple(sorted(pos)), tuple(sorted(neg)))
        terms[key] = terms.get(key, 0.0) + coeff
    return MultilinearPoly(n, terms)


def expand_complements(p: MultilinearPoly) -> MultilinearPoly:
    """Rewrite every (1 - x_i) literal into plain monomials.

    Exponential in the largest complement-set size; intended for small
    oracle checks, not production objectives.
    """
    out = MultilinearPoly.zero(p.ground_size)
    one = MultilinearPoly.constant(p.ground_size, 1.0)
    for (pos, neg), c in p.terms.items():
        term = MultilinearPoly(p.ground_size, {(pos, ()): c})
        for i in neg:
            term = term * (one - MultilinearPoly.variable(p.ground_size, i))
        out = out + term
    return out


def bernoulli_weights(y: np.ndarray) -> np.ndarray:
    """Probability of each binary point under independent Bernoulli(y).

    Returns a vector of length 2^N ordered like ``binary_points``.
    """
    x = binary_points(len(y))
    return np.prod(np.where(x > 0.5, y, 1.0 - y), axis=1)


def binary_points(n: int) -> np.ndarray:
    """All binary vectors of length n as a (2^n, n) array (index = bitmask)."""
    if n > 25:
        raise InputError(f"refusing to enumerate 2^{n} binary points")
    count = 1 << n
    idx = np.arange(count, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1).astype(
        np.float64
    )


def relaxation_by_enumeration(p: MultilinearPoly, y: Sequence[float]) -> float:
    """Exhaustive Bernoulli expectation of p at y (oracle; 2^N work)."""
    arr = np.asarray(y, dtype=np.float64)
    if arr.shape != (p.ground_size,):
        raise InputError(f"point has shape {arr.shape}, expected ({p.ground_size},)")
    x = binary_points(p.ground_size)
    return float(bernoulli_weights(arr) @ p.evaluate_binary_batch(x))


__all__ = [
    "MultilinearPoly",
    "TermKey",
    "exact_coefficients",
    "drop_tolerance",
    "poly_to_text",
    "poly_from_text",
    "expand_complements",
    "binary_points",
    "bernoulli_weights",
    "relaxation_by_enumeration",
]

"""Partition matroids: disjoint blocks with per-block selection budgets.

A point x in {0,1}^N is independent when every block B_l carries at most k_l
selected coordinates.  The fractional relaxation replaces the cardinality
constraints with sums over [0,1]-coordinates.  Linear maximization over the
polytope is water-filling: per block, take the best positive-weight
coordinates up to the budget (ties broken toward the lowest index), which
always lands on an integral vertex.
"""

from __future__ import annotations

import math
from itertools import combinations, product
from typing import Iterable, Iterator, List, Sequence, Tuple

import numpy as np

from .errors import InputError, OracleGuardError

_POLYTOPE_TOL = 1e-9
_BASE_GUARD = 10**6


class PartitionMatroid:
    """Immutable partition matroid over ground set {0, ..., N-1}.

    Capacities above a block's size are clipped at construction.  A zero
    capacity locks its block (those coordinates can never be selected),
    which is how "selectable subset" restrictions are expressed.
    """

    __slots__ = ("_blocks", "_capacities", "_n", "_block_of")

    def __init__(self, blocks: Sequence[Iterable[int]], capacities: Sequence[int]):
        if len(blocks) != len(capacities):
            raise InputError(
                f"{len(blocks)} blocks but {len(capacities)} capacities"
            )
        if not blocks:
            raise InputError("at least one block is required")
        norm_blocks: List[Tuple[int, ...]] = []
        seen: set = set()
        for b in blocks:
            tup = tuple(sorted(int(i) for i in b))
            if not tup:
                raise InputError("empty block")
            if len(set(tup)) != len(tup):
                raise InputError(f"duplicate index within block {tup}")
            if seen & set(tup):
                raise InputError("blocks must be disjoint")
            seen.update(tup)
            norm_blocks.append(tup)
        n = len(seen)
        if seen != set(range(n)):
            raise InputError("blocks must partition a contiguous ground set 0..N-1")
        caps = []
        for k, b in zip(capacities, norm_blocks):
            k = int(k)
            if k < 0:
                raise InputError(f"capacity must be non-negative, got {k}")
            caps.append(min(k, len(b)))
        self._blocks = tuple(norm_blocks)
        self._capacities = tuple(caps)
        self._n = n
        block_of = np.empty(n, dtype=np.int64)
        for bi, b in enumerate(norm_blocks):
            for i in b:
                block_of[i] = bi
        self._block_of = block_of

    @classmethod
    def uniform(cls, ground_size: int, k: int) -> "PartitionMatroid":
        """Single block over the whole ground set with budget k."""
        return cls([tuple(range(ground_size))], [k])

    # ------------------------------------------------------------------

    @property
    def ground_size(self) -> int:
        return self._n

    @property
    def blocks(self) -> Tuple[Tuple[int, ...], ...]:
        return self._blocks

    @property
    def capacities(self) -> Tuple[int, ...]:
        return self._capacities

    @property
    def rank(self) -> int:
        return sum(self._capacities)

    def block_of(self, index: int) -> int:
        if index < 0 or index >= self._n:
            raise InputError(f"index out of range [0, {self._n}): {index}")
        return int(self._block_of[index])

    def __repr__(self) -> str:
        return (
            f"PartitionMatroid(N={self._n}, blocks={len(self._blocks)}, "
            f"capacities={self._capacities})"
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PartitionMatroid):
            return NotImplemented
        return self._blocks == other._blocks and self._capacities == other._capacities

    __hash__ = None  # type: ignore[assignment]

    # ------------------------------------------------------------------

    def _coerce(self, x: Sequence[float]) -> np.ndarray:
        arr = np.asarray(x, dtype=np.float64)
        if arr.shape != (self._n,):
            raise InputError(f"vector has shape {arr.shape}, expected ({self._n},)")
        return arr

    def is_independent(self, x: Sequence[float]) -> bool:
        """True when binary x selects at most k_l elements per block."""
        arr = self._coerce(x)
        if not np.all((np.abs(arr) <= _POLYTOPE_TOL) | (np.abs(arr - 1.0) <= _POLYTOPE_TOL)):
            raise InputError("is_independent expects a binary vector")
        sel = arr > 0.5
        return all(
            int(sel[list(b)].sum()) <= k for b, k in zip(self._blocks, self._capacities)
        )

    def in_polytope(self, y: Sequence[float], tol: float = _POLYTOPE_TOL) -> bool:
        """Fractional membership: box constraints plus per-block sum caps."""
        arr = self._coerce(y)
        if arr.size and (arr.min() < -tol or arr.max() > 1.0 + tol):
            return False
        return all(
            float(arr[list(b)].sum()) <= k + tol
            for b, k in zip(self._blocks, self._capacities)
        )

    def lp_maximize(self, weights: Sequence[float]) -> np.ndarray:
        """argmax of <w, m> over the polytope, returned as a binary vertex.

        Water-filling: per block, pick the top-k_l coordinates among those
        with strictly positive weight; ties prefer the lower index.
        """
        w = self._coerce(weights)
        if not np.all(np.isfinite(w)):
            raise InputError("weights must be finite")
        out = np.zeros(self._n)
        for b, k in zip(self._blocks, self._capacities):
            if k == 0:
                continue
            ranked = sorted(b, key=lambda i: (-w[i], i))
            for i in ranked[:k]:
                if w[i] > 0.0:
                    out[i] = 1.0
        return out

    def enumerate_bases(self) -> Iterator[np.ndarray]:
        """Yield every full-budget selection (guard: at most 10^6 of them)."""
        total = 1
        for b, k in zip(self._blocks, self._capacities):
            total *= math.comb(len(b), k)
            if total > _BASE_GUARD:
                raise OracleGuardError(
                    f"base count exceeds enumeration guard ({_BASE_GUARD})"
                )
        pools = [list(combinations(b, k)) for b, k in zip(self._blocks, self._capacities)]
        for choice in product(*pools):
            x = np.zeros(self._n)
            for combo in choice:
                for i in combo:
                    x[i] = 1.0
            yield x


def matroid_to_json(mat: PartitionMatroid) -> dict:
    return {
        "ground_size": mat.ground_size,
        "blocks": [list(b) for b in mat.blocks],
        "capacities": list(mat.capacities),
    }


def matroid_from_json(data: dict, ground_size: int | None = None) -> PartitionMatroid:
    """Parse a matroid spec.

    Either explicit {"blocks": ..., "capacities": ...} or the uniform
    shorthand {"uniform_k": k}, which needs a ground size (from the spec
    itself or the ``ground_size`` argument).
    """
    if not isinstance(data, dict):
        raise InputError("matroid spec must be a JSON object")
    if "uniform_k" in data:
        n = data.get("ground_size", ground_size)
        if n is None:
            raise InputError("uniform matroid shorthand requires a ground size")
        return PartitionMatroid.uniform(int(n), int(data["uniform_k"]))
    try:
        blocks = data["blocks"]
        capacities = data["capacities"]
    except KeyError as exc:
        raise InputError(f"matroid spec missing field: {exc}") from exc
    mat = PartitionMatroid(blocks, capacities)
    declared = data.get("ground_size", ground_size)
    if declared is not None and int(declared) != mat.ground_size:
        raise InputError(
            f"declared ground size {declared} != blocks union {mat.ground_size}"
        )
    return mat


__all__ = ["PartitionMatroid", "matroid_to_json", "matroid_from_json"]

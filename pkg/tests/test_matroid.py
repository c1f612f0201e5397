"""Partition matroids: validation, the step LP, and base enumeration.

``lp_oracle`` solves max w.x over independent binary vectors by brute
force over all subsets, independently of the per-block top-k routine.
"""

import itertools
import math

import numpy as np
import pytest

from submax.errors import InputError, OracleGuardError
from submax.matroid import PartitionMatroid, matroid_from_json, matroid_to_json


def independent_subsets(mat):
    """Every independent binary vector, by filtering all 2^N subsets."""
    n = mat.ground_size
    for bits in itertools.product((0, 1), repeat=n):
        counts = [0] * len(mat.blocks)
        for i, b in enumerate(bits):
            if b:
                counts[mat.block_of(i)] += 1
        if all(c <= cap for c, cap in zip(counts, mat.capacities)):
            yield np.array(bits, dtype=np.float64)


def lp_oracle(mat, weights):
    best, best_val = np.zeros(mat.ground_size), 0.0
    for x in independent_subsets(mat):
        val = float(np.dot(weights, x))
        if val > best_val + 1e-12:
            best, best_val = x, val
    return best_val


def random_partition(rng, n):
    cuts = sorted(rng.choice(np.arange(1, n), size=int(rng.integers(0, min(3, n - 1) + 1)), replace=False).tolist())
    edges = [0] + cuts + [n]
    blocks = [tuple(range(a, b)) for a, b in zip(edges, edges[1:])]
    caps = [int(rng.integers(0, len(b) + 1)) for b in blocks]
    return PartitionMatroid(blocks, caps)


class TestConstruction:
    def test_basic_properties(self):
        m = PartitionMatroid([(0, 1), (2, 3, 4)], [1, 2])
        assert m.ground_size == 5
        assert m.rank == 3
        assert m.blocks == ((0, 1), (2, 3, 4))
        assert m.capacities == (1, 2)
        assert [m.block_of(i) for i in range(5)] == [0, 0, 1, 1, 1]

    def test_capacity_clipped_to_block_size(self):
        m = PartitionMatroid([(0, 1)], [7])
        assert m.capacities == (2,)
        assert m.rank == 2

    def test_zero_capacity_block_locks_elements(self):
        m = PartitionMatroid([(0,), (1, 2)], [0, 1])
        assert m.rank == 1
        for base in m.enumerate_bases():
            assert base[0] == 0.0

    def test_uniform_shorthand(self):
        m = PartitionMatroid.uniform(6, 2)
        assert m.blocks == ((0, 1, 2, 3, 4, 5),)
        assert m.capacities == (2,)
        assert m.rank == 2

    def test_overlapping_blocks_rejected(self):
        with pytest.raises(InputError):
            PartitionMatroid([(0, 1), (1, 2)], [1, 1])

    def test_gaps_in_ground_set_rejected(self):
        with pytest.raises(InputError):
            PartitionMatroid([(0, 2)], [1])
        with pytest.raises(InputError):
            PartitionMatroid([(0, -1)], [1])

    def test_mismatched_capacities_rejected(self):
        with pytest.raises(InputError):
            PartitionMatroid([(0, 1)], [1, 2])

    def test_negative_capacity_rejected(self):
        with pytest.raises(InputError):
            PartitionMatroid([(0, 1)], [-1])


class TestMembership:
    def test_is_independent(self):
        m = PartitionMatroid([(0, 1), (2, 3)], [1, 2])
        assert m.is_independent([1, 0, 1, 1])
        assert m.is_independent([0, 0, 0, 0])
        assert not m.is_independent([1, 1, 0, 0])

    def test_is_independent_rejects_fractional(self):
        m = PartitionMatroid([(0, 1)], [1])
        with pytest.raises(InputError):
            m.is_independent([0.5, 0.0])

    def test_in_polytope_per_block_budgets(self):
        m = PartitionMatroid([(0, 1), (2, 3)], [1, 1])
        assert m.in_polytope([0.5, 0.5, 0.3, 0.7])
        assert not m.in_polytope([0.6, 0.5, 0.0, 0.0])
        assert not m.in_polytope([-0.1, 0.0, 0.0, 0.0])
        assert not m.in_polytope([1.1, 0.0, 0.0, 0.0])

    def test_in_polytope_tolerance(self):
        m = PartitionMatroid([(0, 1)], [1])
        assert m.in_polytope([0.5, 0.5 + 1e-10])
        assert not m.in_polytope([0.5, 0.5 + 1e-6])

    def test_shape_mismatch_rejected(self):
        m = PartitionMatroid([(0, 1)], [1])
        with pytest.raises(InputError):
            m.lp_maximize([1.0])
        with pytest.raises(InputError):
            m.in_polytope([1.0, 0.0, 0.0])


class TestLpMaximize:
    def test_matches_brute_force_value(self):
        rng = np.random.default_rng(13)
        for _ in range(40):
            n = int(rng.integers(2, 9))
            m = random_partition(rng, n)
            w = rng.normal(size=n)
            x = m.lp_maximize(w)
            assert m.is_independent(x.astype(int).tolist())
            assert float(np.dot(w, x)) == pytest.approx(
                lp_oracle(m, w), abs=1e-12
            )

    def test_ties_pick_lowest_index(self):
        m = PartitionMatroid([(0, 1, 2)], [2])
        np.testing.assert_array_equal(
            m.lp_maximize([0.5, 0.5, 0.5]), [1.0, 1.0, 0.0]
        )

    def test_skips_nonpositive_weights(self):
        m = PartitionMatroid([(0, 1, 2)], [2])
        np.testing.assert_array_equal(
            m.lp_maximize([-1.0, 0.0, 0.3]), [0.0, 0.0, 1.0]
        )
        np.testing.assert_array_equal(
            m.lp_maximize([0.0, 0.0, 0.0]), [0.0, 0.0, 0.0]
        )

    def test_respects_per_block_capacity(self):
        m = PartitionMatroid([(0, 1, 2), (3, 4)], [1, 2])
        x = m.lp_maximize([5.0, 4.0, 3.0, 1.0, 2.0])
        np.testing.assert_array_equal(x, [1.0, 0.0, 0.0, 1.0, 1.0])


class TestEnumerateBases:
    def test_counts_match_binomials(self):
        m = PartitionMatroid([(0, 1, 2), (3, 4, 5, 6)], [1, 2])
        bases = list(m.enumerate_bases())
        assert len(bases) == math.comb(3, 1) * math.comb(4, 2)
        seen = {tuple(b.tolist()) for b in bases}
        assert len(seen) == len(bases)
        for b in bases:
            assert b.sum() == m.rank
            assert m.is_independent(b.astype(int).tolist())

    def test_every_base_saturates_each_block(self):
        m = PartitionMatroid([(0, 1), (2, 3, 4)], [1, 2])
        for b in m.enumerate_bases():
            assert b[:2].sum() == 1
            assert b[2:].sum() == 2

    def test_guard_against_huge_enumerations(self):
        m = PartitionMatroid.uniform(40, 20)
        with pytest.raises(OracleGuardError):
            list(m.enumerate_bases())


class TestSerialization:
    def test_round_trip(self):
        m = PartitionMatroid([(0, 1), (2, 3, 4)], [1, 2])
        again = matroid_from_json(matroid_to_json(m))
        assert again.blocks == m.blocks
        assert again.capacities == m.capacities

    def test_json_shape(self):
        m = PartitionMatroid([(0,), (1, 2)], [1, 1])
        assert matroid_to_json(m) == {
            "ground_size": 3,
            "blocks": [[0], [1, 2]],
            "capacities": [1, 1],
        }

    def test_uniform_shorthand_needs_ground_size(self):
        m = matroid_from_json({"uniform_k": 2}, ground_size=5)
        assert m.blocks == ((0, 1, 2, 3, 4),)
        assert m.capacities == (2,)
        with pytest.raises(InputError):
            matroid_from_json({"uniform_k": 2})

    def test_declared_ground_size_checked(self):
        with pytest.raises(InputError):
            matroid_from_json(
                {"blocks": [[0]], "capacities": [1]}, ground_size=2
            )

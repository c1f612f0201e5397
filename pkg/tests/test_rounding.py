"""Pipage and swap rounding of fractional matroid points."""

import math

import numpy as np
import pytest

from submax.analytic import AnalyticKernel
from submax.errors import InputError
from submax.matroid import PartitionMatroid
from submax.objective import (
    CompositeObjective,
    ObjectiveTerm,
    build_poly_estimator,
    relaxation_exact,
    surrogate_gap_bound,
)
from submax.optimizer import GreedyConfig, continuous_greedy
from submax.polynomial import MultilinearPoly
from submax.rounding import (
    pad_to_base,
    pipage_certificate,
    pipage_round,
    swap_round,
)


def coverage_pair():
    """x0 + x1 - x0 x1: the union probability of two independent picks."""
    return MultilinearPoly(
        2, {((0,), ()): 1.0, ((1,), ()): 1.0, ((0, 1), ()): -1.0}
    )


def weighted_coverage(rng, n, n_sets=6):
    """Sum of set-coverage indicators 1 - prod (1 - x_i): safe to pipage."""
    poly = MultilinearPoly.zero(n)
    for _ in range(n_sets):
        size = int(rng.integers(1, min(n, 4) + 1))
        members = rng.choice(n, size=size, replace=False)
        w = float(rng.random())
        poly = poly + MultilinearPoly.constant(n, w)
        poly = poly - MultilinearPoly.complement_product(
            n, members.tolist(), coeff=w
        )
    return poly


def log1p_objective(n, weights):
    return CompositeObjective(
        n,
        [
            ObjectiveTerm(
                1.0, AnalyticKernel("log1p"), MultilinearPoly.linear(n, weights)
            )
        ],
    )


class TestPipage:
    def test_coverage_pair_resolves_upward(self):
        mat = PartitionMatroid.uniform(2, 1)
        steps = []
        x = pipage_round(coverage_pair(), mat, [0.5, 0.5], step_values=steps)
        # both endpoints score 0.5 against 0.75 for the interior... the other
        # transfer direction reaches 1.0, and the tie raises the lower index
        np.testing.assert_array_equal(x, [1.0, 0.0])
        assert steps == [0.75, 1.0]

    def test_integral_input_passes_through(self):
        mat = PartitionMatroid.uniform(2, 1)
        x = pipage_round(coverage_pair(), mat, [0.0, 1.0])
        np.testing.assert_array_equal(x, [0.0, 1.0])

    def test_single_fractional_coordinate_resolved_by_capacity(self):
        # one leftover fraction in a block with spare capacity: raising it
        # cannot hurt a coverage objective
        rng = np.random.default_rng(1)
        poly = weighted_coverage(rng, 3)
        mat = PartitionMatroid.uniform(3, 2)
        x = pipage_round(poly, mat, [1.0, 0.4, 0.0])
        assert set(np.unique(x)) <= {0.0, 1.0}
        assert mat.is_independent(x.astype(int).tolist())

    def test_step_values_never_decrease(self):
        rng = np.random.default_rng(21)
        for trial in range(20):
            n = int(rng.integers(3, 9))
            poly = weighted_coverage(rng, n)
            k = int(rng.integers(1, n))
            mat = PartitionMatroid.uniform(n, k)
            y = rng.random(n)
            y *= min(1.0, k / y.sum()) * 0.99
            steps = []
            x = pipage_round(poly, mat, y, step_values=steps)
            assert len(steps) <= n + 1
            for before, after in zip(steps, steps[1:]):
                assert after >= before - 1e-12
            assert steps[-1] == pytest.approx(poly.evaluate(x), abs=1e-12)

    def test_feasible_binary_output_on_partitions(self):
        rng = np.random.default_rng(22)
        for trial in range(15):
            n = 6
            poly = weighted_coverage(rng, n)
            mat = PartitionMatroid([(0, 1, 2), (3, 4, 5)], [1, 2])
            y = np.array([0.4, 0.3, 0.3, 0.7, 0.6, 0.7])
            x = pipage_round(poly, mat, y)
            assert set(np.unique(x)) <= {0.0, 1.0}
            assert mat.is_independent(x.astype(int).tolist())

    def test_value_never_below_fractional_start(self):
        rng = np.random.default_rng(23)
        for trial in range(10):
            n = 5
            poly = weighted_coverage(rng, n)
            mat = PartitionMatroid.uniform(n, 2)
            y = rng.random(n) * 0.4
            x = pipage_round(poly, mat, y)
            assert poly.evaluate(x) >= poly.evaluate(y) - 1e-12

    def test_outside_polytope_rejected(self):
        mat = PartitionMatroid.uniform(2, 1)
        with pytest.raises(InputError):
            pipage_round(coverage_pair(), mat, [0.9, 0.9])
        with pytest.raises(InputError):
            pipage_round(coverage_pair(), mat, [-0.1, 0.5])

    def test_ground_size_mismatch_rejected(self):
        with pytest.raises(InputError):
            pipage_round(coverage_pair(), PartitionMatroid.uniform(3, 1),
                         [0.5, 0.5, 0.0])


class TestPipageOnKernelSurrogates:
    def test_greedy_then_pipage_keeps_guarantees(self):
        rng = np.random.default_rng(31)
        for trial in range(6):
            n = int(rng.integers(3, 7))
            w = rng.random(n)
            obj = log1p_objective(n, w / w.sum())
            k = int(rng.integers(1, n))
            mat = PartitionMatroid.uniform(n, k)
            fhat = build_poly_estimator(obj, 3)
            res = continuous_greedy(mat, GreedyConfig(step=0.25),
                                    lambda y: fhat.gradient(y))
            steps = []
            x = pipage_round(fhat, mat, res.y, step_values=steps)
            assert mat.is_independent(x.astype(int).tolist())
            for before, after in zip(steps, steps[1:]):
                assert after >= before - 1e-12


class TestPipageCertificate:
    def test_identity_kernel_certificate_has_zero_loss_budget(self):
        # exact surrogate: the rounded point must not lose anything at all
        inner = MultilinearPoly.linear(3, [0.5, 0.3, 0.2])
        obj = CompositeObjective(
            3, [ObjectiveTerm(1.0, AnalyticKernel("identity"), inner)]
        )
        mat = PartitionMatroid.uniform(3, 1)
        fhat = build_poly_estimator(obj, 1)
        y = np.array([0.5, 0.25, 0.25])
        x = pipage_round(fhat, mat, y)
        cert = pipage_certificate(obj, mat, y, x, degree=1)
        assert cert.allowed_loss == 0.0
        assert cert.rounded_value >= cert.fractional_value - 1e-12
        assert cert.satisfied

    def test_log1p_certificate_on_pair(self):
        obj = log1p_objective(2, [0.6, 0.4])
        mat = PartitionMatroid.uniform(2, 1)
        fhat = build_poly_estimator(obj, 3)
        y = np.array([0.5, 0.5])
        x = pipage_round(fhat, mat, y)
        cert = pipage_certificate(obj, mat, y, x, degree=3)
        assert cert.rounded_value == pytest.approx(
            obj.exact_value(x.astype(int).tolist()), abs=1e-12
        )
        assert cert.fractional_value == pytest.approx(
            relaxation_exact(obj, y), abs=1e-12
        )
        # loss budget is 2 (N + 1) surrogate gaps
        want = 2.0 * 3.0 * surrogate_gap_bound(obj, 3)
        assert cert.allowed_loss == pytest.approx(want, abs=1e-12)
        assert cert.satisfied
        assert cert.margin == pytest.approx(
            cert.rounded_value - cert.fractional_value + cert.allowed_loss,
            abs=1e-12,
        )

    def test_integral_y_certificate_trivially_holds(self):
        obj = log1p_objective(2, [0.6, 0.4])
        mat = PartitionMatroid.uniform(2, 1)
        y = np.array([1.0, 0.0])
        cert = pipage_certificate(obj, mat, y, y, degree=2)
        assert cert.satisfied
        assert cert.margin >= 0.0


class TestPadToBase:
    def test_fills_with_lowest_free_indices(self):
        mat = PartitionMatroid([(0, 1, 2), (3, 4)], [2, 1])
        padded = pad_to_base(mat, [0, 1, 0, 0, 0])
        np.testing.assert_array_equal(padded, [1.0, 1.0, 0.0, 1.0, 0.0])

    def test_base_input_unchanged(self):
        mat = PartitionMatroid([(0, 1), (2, 3)], [1, 1])
        padded = pad_to_base(mat, [0, 1, 1, 0])
        np.testing.assert_array_equal(padded, [0.0, 1.0, 1.0, 0.0])

    def test_respects_zero_capacity_blocks(self):
        mat = PartitionMatroid([(0,), (1, 2)], [0, 1])
        padded = pad_to_base(mat, [0, 0, 0])
        np.testing.assert_array_equal(padded, [0.0, 1.0, 0.0])

    def test_dependent_input_rejected(self):
        mat = PartitionMatroid([(0, 1)], [1])
        with pytest.raises(InputError):
            pad_to_base(mat, [1, 1])


class TestSwapRound:
    def test_two_base_marginals_match_weights(self):
        # keep probability of the first base is its mixing weight
        mat = PartitionMatroid.uniform(2, 1)
        combo = [
            (0.3, np.array([1.0, 0.0])),
            (0.7, np.array([0.0, 1.0])),
        ]
        picks = sum(
            swap_round(mat, combo, seed=s)[0] for s in range(2000)
        )
        # Binomial(2000, 0.3): three sigma is ~61
        sigma = math.sqrt(2000 * 0.3 * 0.7)
        assert abs(picks - 600.0) <= 3.0 * sigma

    def test_deterministic_per_seed(self):
        mat = PartitionMatroid.uniform(3, 1)
        combo = [
            (0.5, np.array([1.0, 0.0, 0.0])),
            (0.25, np.array([0.0, 1.0, 0.0])),
            (0.25, np.array([0.0, 0.0, 1.0])),
        ]
        a = swap_round(mat, combo, seed=11)
        b = swap_round(mat, combo, seed=11)
        np.testing.assert_array_equal(a, b)

    def test_three_base_outputs_are_bases(self):
        mat = PartitionMatroid([(0, 1, 2), (3, 4)], [1, 1])
        bases = [
            np.array([1.0, 0.0, 0.0, 1.0, 0.0]),
            np.array([0.0, 1.0, 0.0, 0.0, 1.0]),
            np.array([0.0, 0.0, 1.0, 1.0, 0.0]),
        ]
        combo = [(0.2, bases[0]), (0.5, bases[1]), (0.3, bases[2])]
        for seed in range(50):
            x = swap_round(mat, combo, seed=seed)
            assert x.sum() == mat.rank
            assert mat.is_independent(x.astype(int).tolist())

    def test_single_base_returned_as_is(self):
        mat = PartitionMatroid.uniform(3, 2)
        base = np.array([1.0, 1.0, 0.0])
        np.testing.assert_array_equal(
            swap_round(mat, [(1.0, base)], seed=0), base
        )

    def test_non_maximal_vertex_rejected(self):
        mat = PartitionMatroid.uniform(3, 2)
        with pytest.raises(InputError, match="pad_to_base"):
            swap_round(mat, [(1.0, np.array([1.0, 0.0, 0.0]))])

    def test_weights_must_sum_to_one(self):
        mat = PartitionMatroid.uniform(2, 1)
        combo = [
            (0.4, np.array([1.0, 0.0])),
            (0.4, np.array([0.0, 1.0])),
        ]
        with pytest.raises(InputError):
            swap_round(mat, combo)

    def test_padding_then_swapping_partial_vertices(self):
        mat = PartitionMatroid([(0, 1, 2), (3, 4)], [1, 1])
        raw = [
            (0.5, np.array([1.0, 0.0, 0.0, 0.0, 0.0])),
            (0.5, np.array([0.0, 0.0, 0.0, 0.0, 1.0])),
        ]
        combo = [(g, pad_to_base(mat, v)) for g, v in raw]
        x = swap_round(mat, combo, seed=4)
        assert x.sum() == mat.rank
        assert mat.is_independent(x.astype(int).tolist())

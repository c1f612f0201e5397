"""Scalar kernels and their Taylor approximations.

Oracle helpers evaluate the kernels and expansion coefficients straight
from their closed forms with ``math``, independent of the library's
Horner evaluation.
"""

import math

import numpy as np
import pytest

from submax.analytic import (
    KERNEL_KINDS,
    AnalyticKernel,
    eval_kernel,
    eval_kernel_batch,
    eval_taylor,
    kernel_from_json,
    kernel_to_json,
    residual_bound,
    taylor,
)
from submax.errors import DomainError, InputError


def log1p_coeff_oracle(ell):
    """Expansion of ln(1+s) around s=1/2: ln(3/2) then alternating powers."""
    if ell == 0:
        return math.log(1.5)
    return (-1.0) ** (ell + 1) * (2.0 / 3.0) ** ell / ell


def taylor_value_oracle(tp, s):
    return sum(c * (s - tp.center) ** ell for ell, c in enumerate(tp.coeffs))


class TestKernelValues:
    def test_log1p_is_natural_log_of_one_plus_s(self):
        k = AnalyticKernel("log1p")
        for s in (0.0, 0.25, 0.5, 1.0):
            assert eval_kernel(k, s) == pytest.approx(math.log1p(s), abs=1e-15)

    def test_queue_is_expected_backlog(self):
        q = AnalyticKernel("queue", s_bar=0.9)
        for s in (0.0, 0.3, 0.5, 0.89):
            assert eval_kernel(q, s) == pytest.approx(s / (1.0 - s), abs=1e-12)

    def test_identity_passthrough(self):
        k = AnalyticKernel("identity")
        assert eval_kernel(k, 0.37) == 0.37

    def test_batch_matches_scalar(self):
        q = AnalyticKernel("queue", s_bar=0.8)
        s = np.linspace(0.0, 0.7, 15)
        np.testing.assert_allclose(
            eval_kernel_batch(q, s),
            [eval_kernel(q, v) for v in s],
            atol=1e-14,
        )

    def test_kernel_kinds_registry(self):
        assert set(KERNEL_KINDS) == {"log1p", "queue", "identity"}


class TestKernelDomains:
    def test_log1p_window_and_center(self):
        k = AnalyticKernel("log1p")
        assert k.domain == (0.0, 1.0)
        assert k.center == 0.5

    def test_queue_window_and_center(self):
        q = AnalyticKernel("queue", s_bar=0.6)
        assert q.domain == (0.0, 0.6)
        assert q.center == 0.0

    def test_log1p_rejects_outside_unit_interval(self):
        k = AnalyticKernel("log1p")
        with pytest.raises(DomainError):
            eval_kernel(k, -0.01)
        with pytest.raises(DomainError):
            eval_kernel(k, 1.01)

    def test_queue_rejects_load_beyond_cap(self):
        q = AnalyticKernel("queue", s_bar=0.5)
        with pytest.raises(DomainError):
            eval_kernel(q, 0.51)

    def test_queue_overload_names_instability(self):
        q = AnalyticKernel("queue", s_bar=0.5)
        with pytest.raises(DomainError, match="unstable"):
            eval_kernel(q, 1.2)

    def test_queue_requires_s_bar(self):
        with pytest.raises(InputError):
            AnalyticKernel("queue")

    def test_queue_s_bar_must_sit_inside_open_unit_interval(self):
        for bad in (0.0, 1.0, 1.5, -0.2):
            with pytest.raises(DomainError):
                AnalyticKernel("queue", s_bar=bad)

    def test_s_bar_rejected_for_other_kinds(self):
        with pytest.raises(InputError):
            AnalyticKernel("log1p", s_bar=0.5)

    def test_unknown_kind_rejected(self):
        with pytest.raises(InputError):
            AnalyticKernel("cubic")


class TestTaylorCoefficients:
    def test_log1p_coefficients_match_closed_form(self):
        k = AnalyticKernel("log1p")
        tp = taylor(k, 8)
        assert tp.center == 0.5
        for ell, c in enumerate(tp.coeffs):
            assert c == pytest.approx(log1p_coeff_oracle(ell), abs=1e-15)

    def test_queue_coefficients_are_unit_geometric(self):
        q = AnalyticKernel("queue", s_bar=0.5)
        tp = taylor(q, 5)
        assert tp.center == 0.0
        assert tp.coeffs == (0.0, 1.0, 1.0, 1.0, 1.0, 1.0)

    def test_identity_expansion(self):
        tp = taylor(AnalyticKernel("identity"), 3)
        assert tp.coeffs == (0.0, 1.0, 0.0, 0.0)
        assert residual_bound(AnalyticKernel("identity"), 1) == 0.0

    def test_degree_validation(self):
        k = AnalyticKernel("log1p")
        with pytest.raises(InputError):
            taylor(k, -1)
        # the queue expansion has no constant part to stand alone
        with pytest.raises(InputError):
            taylor(AnalyticKernel("queue", s_bar=0.5), 0)
        assert taylor(k, 0).coeffs == (math.log(1.5),)

    def test_eval_taylor_is_hornered_polynomial(self):
        k = AnalyticKernel("log1p")
        for degree in range(1, 7):
            tp = taylor(k, degree)
            for s in np.linspace(0.0, 1.0, 9):
                assert eval_taylor(tp, s) == pytest.approx(
                    taylor_value_oracle(tp, s), abs=1e-14
                )


class TestResidualBounds:
    def test_log1p_frozen_value(self):
        # 1/((L+1) 2^(L+1)) at L=3 -> 1/64
        assert residual_bound(AnalyticKernel("log1p"), 3) == pytest.approx(
            1.0 / 64.0, abs=1e-18
        )

    def test_queue_frozen_value(self):
        # s_bar^(L+1)/(1-s_bar) at s_bar=1/2, L=3 -> 0.125
        q = AnalyticKernel("queue", s_bar=0.5)
        assert residual_bound(q, 3) == pytest.approx(0.125, abs=1e-18)

    def test_log1p_bound_holds_on_grid(self):
        k = AnalyticKernel("log1p")
        grid = np.linspace(0.0, 1.0, 1000)
        for degree in range(1, 9):
            tp = taylor(k, degree)
            bound = residual_bound(k, degree)
            worst = max(
                abs(math.log1p(s) - eval_taylor(tp, s)) for s in grid
            )
            assert worst <= bound + 1e-15

    def test_log1p_bound_formula(self):
        k = AnalyticKernel("log1p")
        for degree in range(1, 9):
            want = 1.0 / ((degree + 1) * 2.0 ** (degree + 1))
            assert residual_bound(k, degree) == pytest.approx(want, abs=1e-18)

    def test_queue_remainder_is_exact_geometric_tail(self):
        # truncating sum s^ell at L leaves exactly s^(L+1)/(1-s)
        q = AnalyticKernel("queue", s_bar=0.95)
        grid = np.linspace(0.0, 0.9, 1000)
        for degree in range(1, 9):
            tp = taylor(q, degree)
            for s in grid:
                tail = s ** (degree + 1) / (1.0 - s)
                diff = s / (1.0 - s) - eval_taylor(tp, s)
                assert abs(diff - tail) <= 1e-12

    def test_queue_bound_monotone_in_degree(self):
        q = AnalyticKernel("queue", s_bar=0.7)
        bounds = [residual_bound(q, d) for d in range(1, 10)]
        assert all(a > b for a, b in zip(bounds, bounds[1:]))

    def test_override_s_bar_argument(self):
        q = AnalyticKernel("queue", s_bar=0.5)
        assert residual_bound(q, 2, s_bar=0.3) == pytest.approx(
            0.3 ** 3 / 0.7, abs=1e-15
        )


class TestKernelSerialization:
    def test_round_trip(self):
        for kernel in (
            AnalyticKernel("log1p"),
            AnalyticKernel("identity"),
            AnalyticKernel("queue", s_bar=0.37),
        ):
            again = kernel_from_json(kernel_to_json(kernel))
            assert again.kind == kernel.kind
            assert again.s_bar == kernel.s_bar

    def test_compact_payload(self):
        assert kernel_to_json(AnalyticKernel("log1p")) == {"kind": "log1p"}
        assert kernel_to_json(AnalyticKernel("queue", s_bar=0.5)) == {
            "kind": "queue",
            "s_bar": 0.5,
        }

    def test_extra_fields_rejected(self):
        with pytest.raises(InputError):
            kernel_from_json({"kind": "log1p", "order": 3})

    def test_missing_s_bar_rejected(self):
        with pytest.raises(InputError):
            kernel_from_json({"kind": "queue"})

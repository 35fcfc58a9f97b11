import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from airypersist import fredholm
from airypersist.fredholm import Domain


def test_domain_validation():
    with pytest.raises(ValueError):
        Domain([])
    with pytest.raises(ValueError):
        Domain([(1.0, 0.0)])
    with pytest.raises(ValueError):
        Domain([(0.0, 2.0), (1.0, 3.0)])
    with pytest.raises(ValueError):
        Domain([(0.0, math.inf)])
    with pytest.raises(ValueError):
        Domain([(0.0, 1.0)], 1)


def test_domain_quadrature_covers_pieces():
    x, w = Domain([(-2.0, 0.0), (0.0, 3.0)], (10, 12)).quadrature()
    assert len(x) == 22
    assert w.sum() == pytest.approx(5.0, abs=1e-14)


def test_rank_one_determinant():
    d = fredholm.fredholm_det(lambda x, y: np.exp(-x - y), Domain([(0.0, 1.0)], 20), 1e-12)
    assert d.value == pytest.approx(1 - (1 - math.exp(-2)) / 2, abs=1e-14)
    assert d.error_estimate <= 1e-12


def test_rank_two_determinant():
    # K = f1 g1 + f2 g2 gives det(I - K) = det(I - [<gi, fj>])
    k = lambda x, y: x * y + 1.0  # noqa: E731
    d = fredholm.fredholm_det(k, Domain([(0.0, 1.0)], 10), 1e-12).value
    gram = np.array([[1 / 3, 1 / 2], [1 / 2, 1.0]])
    assert d == pytest.approx(np.linalg.det(np.eye(2) - gram), abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 0.9), st.floats(0.1, 3.0))
def test_rank_one_property(a, s):
    # a e^{-s(x+y)} on (0,1): det = 1 - a (1 - e^{-2s}) / 2s
    d = fredholm.fredholm_det(lambda x, y: a * np.exp(-s * (x + y)), Domain([(0.0, 1.0)], 16), 1e-12).value
    assert d == pytest.approx(1 - a * (1 - math.exp(-2 * s)) / (2 * s), abs=1e-13)


def test_block_split_equals_scalar():
    k = lambda x, y: 0.3 * np.exp(-((x - y) ** 2))  # noqa: E731
    blocks = [[k, k], [k, k]]
    split = fredholm.block_fredholm_det(blocks, [Domain([(-1.0, 0.0)], 20), Domain([(0.0, 1.0)], 20)], 1e-12).value
    whole = fredholm.fredholm_det(k, Domain([(-1.0, 1.0)], 40), 1e-12).value
    assert split == pytest.approx(whole, abs=1e-12)


def test_zero_block_is_allowed():
    k = lambda x, y: np.exp(-x - y)  # noqa: E731
    d = fredholm.block_fredholm_det([[k, None], [None, k]], [Domain([(0.0, 1.0)], 10), Domain([(0.0, 1.0)], 10)])
    assert d.value == pytest.approx((1 - (1 - math.exp(-2)) / 2) ** 2, abs=1e-13)


def test_non_finite_kernel_reports_location():
    k = lambda x, y: np.where(x > 0.9, np.nan, 0.1 * x * y)  # noqa: E731
    with pytest.raises(fredholm.KernelEvaluationError) as info:
        fredholm.discretize(k, Domain([(0.0, 1.0)], 20))
    assert info.value.x > 0.9


def test_tolerance_floor():
    with pytest.raises(ValueError):
        fredholm.fredholm_det(lambda x, y: x * y, Domain([(0.0, 1.0)], 4), 1e-14)


def test_convergence_error_carries_history():
    # a kernel with a kink converges only algebraically
    k = lambda x, y: np.minimum(x, y)  # noqa: E731
    with pytest.raises(fredholm.ConvergenceError) as info:
        fredholm.fredholm_det(k, Domain([(0.0, 1.0)], 4), 1e-12, max_nodes=16)
    assert len(info.value.history) >= 2


def test_doubling_history_is_monotone_in_nodes():
    d = fredholm.fredholm_det(lambda x, y: np.exp(-(x - y) ** 2), Domain([(0.0, 2.0)], 8), 1e-12)
    ns = [n for n, _ in d.history]
    assert ns == sorted(ns)
    assert d.nodes_used == ns[-1]


def test_error_estimate_covers_rounding_scatter():
    # kernel with deterministic pseudo-noise of size 1e-11 that nested rules partly share
    def k(x, y):
        noise = 1e-11 * np.sin(1e6 * x) * np.cos(1e6 * y)
        return 0.5 * np.exp(-(x - y) ** 2) + noise
    dom = Domain([(0.0, 1.0)], 20)
    d = fredholm.fredholm_det(k, dom, 1e-12)
    n = d.nodes_used
    for m in (int(round(0.75 * n)), n + 7, 2 * n + 3):
        other = fredholm.det_id_minus(fredholm.discretize(k, Domain([(0.0, 1.0)], m)))
        assert abs(other - d.value) <= 4 * d.error_estimate


def test_det_id_minus_rejects_bad_shapes():
    with pytest.raises(ValueError):
        fredholm.det_id_minus(np.zeros((2, 3)))

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pielimits.errors import DomainError
from pielimits.model import OperatingPoint, pie_approx_lambert, pie_bound_vanishing_signal
from pielimits.optimize import (
    CellError,
    PieResult,
    SweepGrid,
    default_axis,
    is_locally_optimal,
    optimize_format_order,
    optimize_format_order_exhaustive,
    optimize_vanishing_signal,
    sweep,
)


def scan(n_a, n_b, m_max):
    """Brute-force maximiser written without the package's search code."""
    from pielimits.model import pie_bound_ns

    values = [pie_bound_ns(m * n_a, n_b, m) for m in range(1, m_max + 1)]
    best = max(values)
    return next(m for m, v in enumerate(values, 1) if v >= best * (1 - 1e-12)), best


class TestOptimizeFormatOrder:
    def test_noiseless_half_photon(self):
        result = optimize_format_order(OperatingPoint(0.5, 0.0))
        assert result.pie_star > 0
        assert is_locally_optimal(result)
        assert (result.m_star, result.pie_star) == scan(0.5, 0.0, 200)

    def test_rule_of_thumb(self):
        result = optimize_format_order(OperatingPoint(1e-4, 1e-3))
        assert 0.1 <= result.n_s_star <= 1.0

    def test_weak_signal_near_vanishing_limit(self):
        result = optimize_format_order(OperatingPoint(1e-6, 1e-3))
        assert abs(result.pie_star - pie_approx_lambert(1e-3)) / 5.78 < 0.1
        assert result.pie_star < optimize_vanishing_signal(1e-3).pie_star

    def test_n_s_star_is_exact_product(self):
        result = optimize_format_order(OperatingPoint(3e-5, 2e-4))
        assert result.n_s_star == result.m_star * 3e-5
        assert result.log2_m_star == math.log2(result.m_star)

    @pytest.mark.parametrize("n_a", [0.0, -1e-3])
    def test_needs_signal(self, n_a):
        with pytest.raises(DomainError):
            optimize_format_order(OperatingPoint(max(n_a, 0.0), 1e-3))

    def test_cap_binds(self):
        result = optimize_format_order(OperatingPoint(1e-4, 1e-3), m_cap=64)
        assert result.m_star == 64 and result.capped
        free = optimize_format_order(OperatingPoint(1e-4, 1e-3))
        assert not free.capped and free.m_star > 64

    def test_cap_not_binding(self):
        free = optimize_format_order(OperatingPoint(1e-2, 1e-3))
        capped = optimize_format_order(OperatingPoint(1e-2, 1e-3), m_cap=10**6)
        assert capped.m_star == free.m_star and not capped.capped

    def test_pure_noise_returns_smallest_order(self):
        # p_b == p_c == 1 in double precision: nothing to gain from any M
        result = optimize_format_order(OperatingPoint(1.0, 800.0))
        assert result.m_star == 1 and result.pie_star == 0.0

    def test_tiny_signal_converges(self):
        result = optimize_format_order(OperatingPoint(1e-12, 1e-8))
        assert result.converged and is_locally_optimal(result)
        assert result.m_star > 10**10

    def test_continuous_diagnostic_is_close(self):
        result = optimize_format_order(OperatingPoint(1e-4, 1e-3), continuous=True)
        assert abs(result.m_continuous - result.m_star) <= 1.0

    @settings(max_examples=60, deadline=None)
    @given(st.floats(-3.5, 0.0), st.floats(-8.0, 0.5))
    def test_matches_exhaustive(self, log_na, log_nb):
        point = OperatingPoint(10**log_na, 10**log_nb)
        result = optimize_format_order(point)
        if result.m_star <= 4096:
            reference = optimize_format_order_exhaustive(point, 8192)
            assert (result.m_star, result.pie_star) == (reference.m_star, reference.pie_star)
            assert (result.m_star, result.pie_star) == scan(point.n_a, point.n_b, 8192)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-8.0, 0.0), st.floats(-8.0, 0.0))
    def test_certificate(self, log_na, log_nb):
        assert is_locally_optimal(optimize_format_order(OperatingPoint(10**log_na, 10**log_nb)))

    @settings(max_examples=60, deadline=None)
    @given(st.floats(-8.0, 0.0), st.floats(-8.0, -0.2))
    def test_non_increasing_in_noise(self, log_na, log_nb):
        n_a = 10**log_na
        low = optimize_format_order(OperatingPoint(n_a, 10**log_nb))
        high = optimize_format_order(OperatingPoint(n_a, 10 ** (log_nb + 0.2)))
        assert high.pie_star <= low.pie_star


class TestVanishingSignal:
    def test_reference(self):
        # 50-digit mpmath maximisation of D(p_c||p_b)/n_s
        opt = optimize_vanishing_signal(1e-3)
        assert opt.pie_star == pytest.approx(5.9460883470933489, rel=1e-12)
        assert opt.n_s_star == pytest.approx(0.41428598056138477, rel=1e-7)
        assert abs(opt.pie_star - 5.78) / 5.78 < 0.05

    def test_high_noise(self):
        opt = optimize_vanishing_signal(1e-1)
        assert opt.pie_star == pytest.approx(1.3943835464907092, rel=1e-12)
        assert opt.pie_star > pie_approx_lambert(1e-1)

    def test_is_a_maximum(self):
        opt = optimize_vanishing_signal(1e-5)
        for factor in (0.99, 1.01):
            assert pie_bound_vanishing_signal(opt.n_s_star * factor, 1e-5) < opt.pie_star

    def test_monotone(self):
        assert optimize_vanishing_signal(1e-4).pie_star > optimize_vanishing_signal(1e-2).pie_star

    @pytest.mark.parametrize("bad", [0.0, -1e-3])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            optimize_vanishing_signal(bad)


class TestSweep:
    def test_single_cell_matches_point(self):
        grid = sweep([1e-3], [1e-3], workers=1)
        assert grid.cells[0][0] == optimize_format_order(OperatingPoint(1e-3, 1e-3))

    def test_rows_non_increasing_in_noise(self):
        grid = sweep([1e-4, 1e-2], [1e-4, 1e-2], workers=1)
        pie = grid.panel("pie_star")
        assert np.all(np.diff(pie, axis=1) <= 0)

    def test_deterministic_and_parallel_agree(self):
        axis = np.geomspace(1e-6, 1e-1, 6)
        serial = sweep(axis, axis, workers=1)
        assert sweep(axis, axis, workers=1) == serial
        assert sweep(axis, axis, workers=2) == serial

    def test_row_major_iteration(self):
        grid = sweep([1e-3, 1e-2], [1e-4, 1e-3, 1e-2], workers=1)
        coords = [(a, b) for a, b, _ in grid.iter_cells()]
        assert coords[:3] == [(1e-3, 1e-4), (1e-3, 1e-3), (1e-3, 1e-2)]
        assert grid.shape == (2, 3)

    @pytest.mark.parametrize("axis", [[1e-2, 1e-3], [1e-3, 1e-3], [0.0, 1.0], []])
    def test_bad_axis(self, axis):
        with pytest.raises(DomainError):
            sweep(axis, [1e-3], workers=1)

    def test_error_cells_are_marked(self):
        ok = optimize_format_order(OperatingPoint(1e-3, 1e-3))
        grid = SweepGrid((1e-3,), (1e-3, 1e-2), ((ok, CellError("boom")),))
        assert grid.failures == [(0, 1, CellError("boom"))]
        assert np.isnan(grid.panel("pie_star")[0, 1])

    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            SweepGrid((1e-3,), (1e-3,), ())

    def test_default_axis(self):
        axis = default_axis()
        assert len(axis) == 50 and axis[0] == pytest.approx(1e-8) and axis[-1] == 1.0

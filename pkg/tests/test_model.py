import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pielimits.errors import DomainError, InfiniteDivergenceError
from pielimits.model import (
    ModulationFormat,
    OperatingPoint,
    coherent_detection_limit,
    noiseless_pie,
    photocount_probabilities,
    pie_approx_lambert,
    pie_bound,
    pie_bound_ns,
    pie_bound_vanishing_signal,
)

from . import oracles

LOG2E = 1 / math.log(2)

# Frozen from the 50-digit mpmath reference in tests/oracles.py.
PIE_1_1E4_1024 = 5.6544270246940484585
PIE_1_10_2 = 5.7595999788013903e-06
PIE_VANISH_1_1E3 = 5.3554855518230656748
PIE_1_1E3_1024 = 4.9172982998487226914
APPROX_1E3 = 5.7824086608850662441
APPROX_1E1 = 0.95003970514961958894


class TestTypes:
    def test_point_validation(self):
        with pytest.raises(DomainError):
            OperatingPoint(-1e-3, 0.1)
        with pytest.raises(DomainError):
            OperatingPoint(1e-3, math.nan)

    def test_format_from_point(self):
        fmt = ModulationFormat.from_point(OperatingPoint(2**-10, 1e-4), 1024)
        assert fmt.n_s == 1.0 and fmt.frame_slots == 1024

    @pytest.mark.parametrize("m", [0, -2, 1.5])
    def test_format_order(self, m):
        with pytest.raises(DomainError):
            ModulationFormat(m, 1.0)


class TestPhotocount:
    def test_dark(self):
        assert photocount_probabilities(0.0, 0.0) == (0.0, 0.0)

    def test_half(self):
        p_c, p_b = photocount_probabilities(math.log(2), 0.0)
        assert p_c == pytest.approx(0.5, rel=1e-15) and p_b == 0.0

    def test_reference(self):
        p_c, p_b = photocount_probabilities(1.0, 1e-4)
        assert p_c == pytest.approx(0.63215734493333892849, rel=1e-15)
        assert p_b == pytest.approx(9.9995000166662500083e-05, rel=1e-15)

    def test_tiny_background_keeps_precision(self):
        _, p_b = photocount_probabilities(1.0, 1e-12)
        assert p_b == pytest.approx(1e-12 - 5e-25, rel=1e-15)

    def test_negative(self):
        with pytest.raises(DomainError):
            photocount_probabilities(-1.0, 0.1)

    @given(st.floats(0, 50), st.floats(0, 50))
    def test_signal_mode_clicks_more(self, n_s, n_b):
        p_c, p_b = photocount_probabilities(n_s, n_b)
        assert p_c >= p_b


class TestPieBound:
    def test_m1_is_zero(self):
        assert pie_bound_ns(1.0, 1e-4, 1) == 0.0
        assert pie_bound_ns(0.3, 2.0, 1) == 0.0

    def test_reference_point(self):
        point = OperatingPoint(2**-10, 1e-4)
        fmt = ModulationFormat.from_point(point, 1024)
        assert pie_bound(point, fmt) == pytest.approx(PIE_1_1E4_1024, rel=1e-13)
        assert pie_bound(point, fmt) == pytest.approx(5.65, abs=0.005)

    def test_drowned_signal(self):
        value = pie_bound_ns(1.0, 10.0, 2)
        assert value < 1e-2
        assert value == pytest.approx(PIE_1_10_2, rel=1e-6)

    def test_inconsistent_format_rejected(self):
        with pytest.raises(DomainError):
            pie_bound(OperatingPoint(1e-3, 1e-3), ModulationFormat(16, 1.0))

    def test_symbol_energy_cutoff(self):
        with pytest.raises(DomainError):
            pie_bound_ns(1e-13, 1e-3, 16)
        with pytest.raises(DomainError):
            pie_bound_ns(0.0, 1e-3, 16)

    def test_noiseless_is_finite(self):
        assert pie_bound_ns(1.0, 0.0, 16) > 0

    @settings(max_examples=200, deadline=None)
    @given(st.floats(1e-6, 20), st.floats(1e-10, 5), st.integers(2, 10**7))
    def test_matches_mpmath(self, n_s, n_b, m):
        assert pie_bound_ns(n_s, n_b, m) == pytest.approx(
            oracles.pie_bound(n_s, n_b, m), rel=1e-9, abs=1e-15)

    @pytest.mark.parametrize("n_s,n_b", [(1.0, 1e-3), (0.3, 1e-6), (2.0, 0.1)])
    def test_converges_to_vanishing_limit(self, n_s, n_b):
        limit = pie_bound_vanishing_signal(n_s, n_b)
        p_c, p_b = photocount_probabilities(n_s, n_b)
        values = [pie_bound_ns(n_s, n_b, 2**k) for k in range(1, 41)]
        assert all(b >= a for a, b in zip(values, values[1:]))
        m_far = math.ceil(1e6 * p_c / p_b)
        assert abs(limit - pie_bound_ns(n_s, n_b, m_far)) / limit < 1e-3

    def test_noiseless_recovery_ceiling(self):
        n_s, n_b = 1e-6, 1e-12
        p_c, _ = photocount_probabilities(n_s, n_b)
        prev = 0.0
        for k in range(1, 21):
            value = pie_bound_ns(n_s, n_b, 2**k)
            assert value <= k * p_c / n_s
            assert value > prev
            prev = value

    @given(st.floats(1e-3, 5), st.floats(1e-8, 1), st.integers(2, 10**6))
    def test_decreasing_in_noise(self, n_s, n_b, m):
        assert pie_bound_ns(n_s, n_b * 1.5, m) < pie_bound_ns(n_s, n_b, m)


class TestVanishingSignal:
    def test_reference(self):
        assert pie_bound_vanishing_signal(1.0, 1e-3) == pytest.approx(PIE_VANISH_1_1E3, rel=1e-13)

    def test_exceeds_finite_format(self):
        finite = pie_bound_ns(1.0, 1e-3, 1024)
        assert finite == pytest.approx(PIE_1_1E3_1024, rel=1e-13)
        assert pie_bound_vanishing_signal(1.0, 1e-3) > finite

    def test_monotone_in_noise(self):
        assert pie_bound_vanishing_signal(1.0, 1e-3) > pie_bound_vanishing_signal(1.0, 1e-2)

    def test_noiseless_is_unbounded(self):
        with pytest.raises(InfiniteDivergenceError):
            pie_bound_vanishing_signal(1.0, 0.0)

    def test_rejects_tiny_symbol(self):
        with pytest.raises(DomainError):
            pie_bound_vanishing_signal(1e-13, 1e-3)

    @settings(max_examples=200)
    @given(st.floats(1e-6, 30), st.floats(1e-12, 10))
    def test_matches_mpmath(self, n_s, n_b):
        assert pie_bound_vanishing_signal(n_s, n_b) == pytest.approx(
            oracles.pie_vanishing(n_s, n_b), rel=1e-9, abs=1e-15)


class TestLambertApprox:
    def test_root_of_bracket(self):
        assert pie_approx_lambert(2 / math.e) == pytest.approx(0.0, abs=1e-14)

    def test_reference_values(self):
        assert pie_approx_lambert(1e-3) == pytest.approx(APPROX_1E3, rel=1e-13)
        assert pie_approx_lambert(1e-3) == pytest.approx(5.78, abs=0.005)
        assert pie_approx_lambert(1e-1) == pytest.approx(APPROX_1E1, rel=1e-13)

    def test_never_negative(self):
        for n_b in np.geomspace(1e-8, 1e4, 200):
            assert pie_approx_lambert(n_b) >= -1e-15

    @pytest.mark.parametrize("bad", [0.0, -1.0, math.inf])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            pie_approx_lambert(bad)


class TestBenchmarks:
    @pytest.mark.parametrize("n_b,expected", [
        (0.0, 2 * LOG2E), (1.0, LOG2E), (9.0, 0.2885390081777927),
    ])
    def test_coherent(self, n_b, expected):
        assert coherent_detection_limit(n_b) == pytest.approx(expected, rel=1e-15)

    def test_coherent_noiseless_above_288(self):
        assert coherent_detection_limit(0.0) > 2.88

    @pytest.mark.parametrize("m,expected", [(1, 0.0), (2, 1.0), (1024, 10.0)])
    def test_noiseless_pie(self, m, expected):
        assert noiseless_pie(ModulationFormat(m, 0.0)) == expected

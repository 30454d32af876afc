import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gkpmod import drive

OMEGA = 2 * math.pi * 500e6


def spec(delta=1.0, branch="+"):
    return drive.DriveSpec(delta, OMEGA, branch)


class TestExactWaveform:
    def test_triangle_at_full_amplitude(self):
        s = spec(1.0)
        t = np.linspace(0, s.period, 20001)
        wf = drive.exact_waveform(s, t)
        # linear from π/2 with |slope| = ω_T
        slope = np.diff(wf.values) / np.diff(t)
        assert np.abs(np.abs(slope) - OMEGA).max() < OMEGA * 1e-3
        assert wf.values[0] == pytest.approx(math.pi / 2)
        assert wf.values[-1] == pytest.approx(math.pi / 2, abs=1e-9)

    @pytest.mark.parametrize("delta", [0.1, 0.5, 1.0])
    def test_defining_condition(self, delta):
        s = spec(delta)
        t = np.linspace(0, 3 * s.period, 30011)
        wf = drive.exact_waveform(s, t)
        assert wf.defect < 1e-12

    def test_branch_values_at_half_period(self):
        # Fourier-series oracle: the triangle series evaluated at ω_T t = π
        # sums to −π/2 (falling branch); the rising branch mirrors to 3π/2
        partial = sum((-1) ** n / (2 * n + 1) ** 2 * math.sin((2 * n + 1) * math.pi / 2)
                      for n in range(200000))
        series_value = math.pi / 2 - 8 / math.pi * partial
        assert series_value == pytest.approx(-math.pi / 2, abs=1e-5)
        t = np.array([math.pi / OMEGA])
        up = drive.exact_waveform(spec(1.0, "+"), t).values[0]
        dn = drive.exact_waveform(spec(1.0, "-"), t).values[0]
        assert up == pytest.approx(3 * math.pi / 2, abs=1e-9)
        assert dn == pytest.approx(-math.pi / 2, abs=1e-9)

    def test_continuity(self):
        s = spec(0.5)
        t = np.linspace(0, 2 * s.period, 100001)
        wf = drive.exact_waveform(s, t)
        max_slope = OMEGA * s.delta / math.sqrt(max(1 - (1 - 2 * s.delta) ** 2, 1e-2))
        assert np.abs(np.diff(wf.values)).max() < 5 * max_slope * (t[1] - t[0]) + 1e-9

    @given(st.floats(min_value=0.05, max_value=1.0))
    @settings(max_examples=25, deadline=None)
    def test_defect_property(self, delta):
        s = spec(delta)
        t = np.linspace(0, s.period, 4001)
        assert drive.exact_waveform(s, t).defect < 1e-12


class TestFourier:
    def test_triangle_closed_form(self):
        b = drive.fourier_coeffs(spec(1.0), 4)
        assert b[0] == pytest.approx(8 / math.pi, rel=1e-12)
        assert abs(b[1]) == pytest.approx(8 / (9 * math.pi), rel=1e-12)
        assert np.all(np.sign(b) == [1, -1, 1, -1])

    def test_partial_delta_projection_matches_triangle_limit(self):
        # numerical projection path, evaluated at δ=1−1e−9, approaches the
        # closed form
        b_num = drive.fourier_coeffs(drive.DriveSpec(1 - 1e-9, OMEGA), 3)
        b_exact = drive.fourier_coeffs(spec(1.0), 3)
        assert np.abs(b_num - b_exact).max() < 1e-4

    def test_two_harmonics_sufficient_at_half_delta(self):
        err = drive.synthesis_error(spec(0.5), 2, math.inf)
        assert err < 0.01

    def test_only_odd_half_harmonics(self):
        s = spec(1.0)
        m = 1 << 14
        t = np.linspace(0, s.period, m + 1)
        x = drive.exact_waveform(s, t).values - math.pi / 2
        for k in (1, 2, 3):
            proj = 2 / s.period * np.trapezoid(x * np.sin(k * OMEGA * t), t)
            proj_cos = 2 / s.period * np.trapezoid(x * np.cos(k * OMEGA * t / 2), t)
            assert abs(proj) < 1e-10
            assert abs(proj_cos) < 1e-10


class TestSynthesisError:
    def test_awg_estimate(self):
        # 2.4 GS/s, ω_T/2π = 250 MHz: around half a percent
        s = drive.DriveSpec(1.0, 2 * math.pi * 250e6)
        err = drive.synthesis_error(s, "exact", 2.4e9)
        assert 0.0025 <= err <= 0.01

    def test_ideal_limit(self):
        assert drive.synthesis_error(spec(1.0), "exact", math.inf) == 0.0

    def test_monotone_in_harmonics(self):
        errs = [drive.synthesis_error(spec(1.0), n, 1e12) for n in range(1, 9)]
        assert all(b <= a + 1e-15 for a, b in zip(errs, errs[1:]))


class TestFluxNoise:
    def test_zero_offset(self):
        s = spec(0.5)
        t = np.linspace(0, s.period, 2001)
        vals, avg = drive.flux_noise_prefactor(s, 0.0, t)
        target = (1 - 0.5) + 0.5 * np.cos(OMEGA * t)
        assert np.abs(vals - target).max() < 1e-12
        assert abs(avg) < 1e-12

    def test_full_amplitude_echo(self):
        s = spec(1.0)
        t = np.linspace(0, 4 * s.period, 160001)
        _, avg = drive.flux_noise_prefactor(s, 0.1, t)
        assert abs(avg) < 1e-10

    def test_reduced_amplitude_needs_alternation(self):
        s = spec(0.5)
        n_periods = 8
        t = np.linspace(0, n_periods * s.period, 320001)
        _, fixed = drive.flux_noise_prefactor(s, 0.1, t)
        schedule = [1.0 if k % 2 == 0 else -1.0 for k in range(n_periods)]
        _, alt = drive.flux_noise_prefactor(s, 0.1, t, branch_schedule=schedule)
        assert abs(fixed) > 1e-3          # spurious resonant component survives
        assert abs(alt) < abs(fixed) / 50  # alternating branches restore the echo

import math

import numpy as np
import pytest

from crackgrow.errors import DegenerateDataError, DomainError
from crackgrow.fatigue import (
    GeometryConfig,
    MaterialPoint,
    ParisParams,
    endurance_limit,
    fit_paris_constants,
    integrate_crack_size,
    nondim_crack,
    nondim_cycles,
    nondim_sif,
    paris_rate,
    redim_sif,
    sif_range,
    threshold_sif,
)

GEOM = GeometryConfig()  # W = 5 mm, Y = 0.65, runout 1e7


class TestEnduranceLimit:
    def test_unit_defect_size(self):
        # (sqrt_area)**(1/6) = 1, so the result is C1 * (HV + 120) exactly
        mat = MaterialPoint(sqrt_area=1.0, hardness=220.0, murakami_c1=1.43)
        assert endurance_limit(mat) == pytest.approx(1.43 * 340.0, rel=1e-12)

    def test_hand_evaluation(self):
        # oracle: direct evaluation via exp/log, independent of the ** operator
        mat = MaterialPoint(sqrt_area=100.0, hardness=220.0, murakami_c1=1.43)
        oracle = 1.43 * 340.0 / math.exp(math.log(100.0) / 6.0)
        assert oracle == pytest.approx(225.674, abs=5e-4)
        assert endurance_limit(mat) == pytest.approx(oracle, rel=1e-12)

    def test_zero_hardness_rejected_at_construction(self):
        # HV = 0 violates the type invariant before the formula is reached
        with pytest.raises(DomainError):
            MaterialPoint(sqrt_area=100.0, hardness=0.0, murakami_c1=1.43)

    def test_decreasing_in_defect_size_increasing_in_hardness(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            area = rng.uniform(1.0, 500.0)
            hv = rng.uniform(50.0, 600.0)
            base = endurance_limit(MaterialPoint(area, hv))
            assert endurance_limit(MaterialPoint(area * 1.5, hv)) < base
            assert endurance_limit(MaterialPoint(area, hv + 50.0)) > base


class TestThresholdSif:
    def test_unit_defect_size(self):
        mat = MaterialPoint(sqrt_area=1.0, hardness=220.0)
        assert threshold_sif(mat) == pytest.approx(3.3e-3 * 340.0, rel=1e-12)

    def test_hand_evaluation(self):
        mat = MaterialPoint(sqrt_area=100.0, hardness=220.0)
        oracle = 3.3e-3 * 340.0 * math.exp(math.log(100.0) / 3.0)
        assert oracle == pytest.approx(5.2079, abs=5e-4)
        assert threshold_sif(mat) == pytest.approx(oracle, rel=1e-12)

    def test_cube_root_scaling(self):
        # (1000)**(1/3) = 10, so sqrt_area=1000 gives exactly 10x the unit value
        for hv in (100.0, 220.0, 415.0):
            small = threshold_sif(MaterialPoint(sqrt_area=1.0, hardness=hv))
            large = threshold_sif(MaterialPoint(sqrt_area=1000.0, hardness=hv))
            assert large == pytest.approx(10.0 * small, rel=1e-12)

    def test_increasing_in_both_inputs(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            area = rng.uniform(1.0, 500.0)
            hv = rng.uniform(50.0, 600.0)
            base = threshold_sif(MaterialPoint(area, hv))
            assert threshold_sif(MaterialPoint(area * 1.5, hv)) > base
            assert threshold_sif(MaterialPoint(area, hv + 50.0)) > base


class TestSifRange:
    def test_hand_evaluation(self):
        oracle = 2.0 * 0.65 * 300.0 * math.sqrt(math.pi * 0.001)
        assert oracle == pytest.approx(21.859, abs=5e-4)
        assert sif_range(300.0, 1.0, GEOM) == pytest.approx(oracle, rel=1e-12)

    def test_identity_when_pi_a_is_one(self):
        # Y = 0.5 and pi*a = 1 m**2 collapse the formula to sigma_a itself
        geom = GeometryConfig(geometry_factor=0.5)
        a_mm = 1000.0 / math.pi
        assert sif_range(123.4, a_mm, geom) == pytest.approx(123.4, rel=1e-12)

    def test_square_root_scaling(self):
        assert sif_range(250.0, 4.0, GEOM) == pytest.approx(
            2.0 * sif_range(250.0, 1.0, GEOM), rel=1e-12
        )

    def test_nonpositive_crack_rejected(self):
        with pytest.raises(DomainError):
            sif_range(300.0, 0.0, GEOM)


class TestNondimensionalization:
    def test_unit_point(self):
        sigma_w = 225.66
        dk = sigma_w * math.sqrt(GEOM.gauge_width_m)
        assert nondim_sif(dk, sigma_w, GEOM) == pytest.approx(1.0, rel=1e-12)

    def test_hand_evaluation(self):
        oracle = 5.0 / (225.66 * math.sqrt(0.005))
        assert oracle == pytest.approx(0.31335, abs=5e-5)
        assert nondim_sif(5.0, 225.66, GEOM) == pytest.approx(oracle, rel=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            dk = rng.uniform(0.1, 60.0)
            sigma_w = rng.uniform(50.0, 900.0)
            back = redim_sif(nondim_sif(dk, sigma_w, GEOM), sigma_w, GEOM)
            assert abs(back - dk) / dk < 1e-12

    def test_crack_and_cycle_ratios(self):
        assert nondim_crack(GEOM.gauge_width_mm, GEOM) == 1.0
        assert nondim_crack(0.0, GEOM) == 0.0
        assert nondim_cycles(10_000_000, GEOM) == 1.0

    def test_nonpositive_sigma_w_rejected(self):
        with pytest.raises(DomainError):
            nondim_sif(5.0, 0.0, GEOM)


class TestParisRate:
    def test_reference_constants(self):
        params = ParisParams(coeff_c=2.00e-14, exponent_m=5.86)
        oracle = 2.00e-14 * 10.0**5.86
        assert oracle == pytest.approx(1.449e-8, rel=1e-3)
        assert paris_rate(params, 10.0) == pytest.approx(oracle, rel=1e-12)

    def test_unit_delta_k_returns_coefficient(self):
        params = ParisParams(coeff_c=3.7e-11, exponent_m=4.2)
        assert paris_rate(params, 1.0) == pytest.approx(3.7e-11, rel=1e-12)

    def test_nonpositive_delta_k_rejected(self):
        with pytest.raises(DomainError):
            paris_rate(ParisParams(1e-12, 3.0), 0.0)

    def test_nonpositive_exponent_rejected_by_type(self):
        with pytest.raises(DomainError):
            ParisParams(coeff_c=1e-12, exponent_m=0.0)


class TestIntegrateCrackSize:
    def test_zero_rate_keeps_initial_size(self):
        out = integrate_crack_size(np.zeros(5), np.arange(5) * 1000.0, a0_mm=0.25)
        assert np.all(out == 0.25)

    def test_hand_sum(self):
        out = integrate_crack_size(
            np.array([1e-6, 1e-6, 1e-6]), np.array([0.0, 1000.0, 2000.0]), a0_mm=0.0
        )
        np.testing.assert_allclose(out, [0.0, 1e-3, 2e-3], rtol=1e-12)

    def test_constant_rate_telescopes(self):
        cycles = np.array([500.0, 1500.0, 4000.0, 9000.0])
        out = integrate_crack_size(np.full(4, 2e-7), cycles, a0_mm=0.0)
        assert out[-1] == pytest.approx(2e-7 * (cycles[-1] - cycles[0]), rel=1e-12)

    def test_nondecreasing_for_nonnegative_rates(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = rng.integers(2, 40)
            rate = rng.uniform(0.0, 1e-5, n)
            cycles = np.cumsum(rng.uniform(1.0, 2000.0, n))
            out = integrate_crack_size(rate, cycles, a0_mm=0.1)
            assert np.all(np.diff(out) >= 0)

    def test_non_monotone_cycles_rejected(self):
        with pytest.raises(DomainError):
            integrate_crack_size(np.ones(3), np.array([0.0, 2000.0, 1000.0]), 0.0)

    def test_trapezoid_matches_left_on_constant_rate(self):
        cycles = np.array([0.0, 1000.0, 3000.0])
        rate = np.full(3, 5e-7)
        left = integrate_crack_size(rate, cycles, 0.0, rule="left")
        trap = integrate_crack_size(rate, cycles, 0.0, rule="trapezoid")
        np.testing.assert_allclose(left, trap, rtol=1e-12)


class TestFitParisConstants:
    def test_exact_round_trip_reference_pair(self):
        true = ParisParams(coeff_c=2.00e-14, exponent_m=5.86)
        dk = np.logspace(math.log10(5.0), math.log10(30.0), 25)
        rate = true.coeff_c * dk**true.exponent_m
        fit = fit_paris_constants(dk, rate)
        assert abs(fit.params.exponent_m - 5.86) < 1e-6
        assert abs(fit.params.coeff_c - 2.00e-14) / 2.00e-14 < 0.01
        assert fit.r_squared >= 1.0 - 1e-12

    def test_two_points_interpolate_exactly(self):
        fit = fit_paris_constants(np.array([5.0, 20.0]), np.array([1e-9, 4e-7]))
        assert fit.r_squared >= 1.0 - 1e-12
        assert fit.n_points == 2

    def test_noisy_recovery_within_tenth(self):
        # repeated-seed simulation oracle: 1% multiplicative noise on the rate
        true = ParisParams(coeff_c=8.63e-10, exponent_m=3.46)
        dk = np.logspace(math.log10(6.0), math.log10(40.0), 30)
        for seed in range(50):
            rng = np.random.default_rng(seed)
            rate = true.coeff_c * dk**true.exponent_m * (1.0 + 0.01 * rng.standard_normal(30))
            fit = fit_paris_constants(dk, rate)
            assert abs(fit.params.exponent_m - 3.46) < 0.1

    def test_inverse_of_paris_rate_sampling(self):
        # property over random constants: noise-free data is recovered exactly
        rng = np.random.default_rng(99)
        for _ in range(20):
            c = 10.0 ** rng.uniform(-16.0, -6.0)
            m = rng.uniform(1.0, 10.0)
            dk = np.logspace(math.log10(3.0), math.log10(50.0), 12)
            rate = np.array([paris_rate(ParisParams(c, m), k) for k in dk])
            fit = fit_paris_constants(dk, rate)
            assert abs(fit.params.exponent_m - m) < 1e-8
            assert abs(fit.params.coeff_c - c) / c < 1e-6

    def test_zero_variance_rejected(self):
        with pytest.raises(DegenerateDataError):
            fit_paris_constants(np.full(5, 10.0), np.linspace(1e-9, 2e-9, 5))

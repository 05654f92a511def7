import math

import numpy as np
import pytest

from crackgrow.errors import ConfigError
from crackgrow.fatigue import GeometryConfig, MaterialPoint, ParisParams, integrate_crack_size, paris_rate, sif_range
from crackgrow.prep import PrepConfig, prepare
from crackgrow.synth import GeneratorConfig, SyntheticTruth, batch_configs, generate, generate_batch


def base_config(**overrides):
    defaults = dict(
        true_paris=ParisParams(coeff_c=8.63e-10, exponent_m=3.46),
        initial_crack_mm=0.1,
        stress_amplitude=300.0,
        sqrt_area=100.0,
        hardness=220.0,
        noise_sigma_hz=0.0,
        seed=7,
    )
    defaults.update(overrides)
    return GeneratorConfig(**defaults)


def growth_life_oracle(cfg, n_grid=20000):
    """Quadrature oracle (midpoint rule on a fine grid) for the cycles to
    grow from the initial crack to the gauge width, independent of the
    generator's stepping loop."""
    geom = cfg.geometry()
    a = np.linspace(cfg.initial_crack_mm, cfg.gauge_width_mm, n_grid + 1)
    mid = 0.5 * (a[:-1] + a[1:])
    dk = 2.0 * cfg.geometry_factor * cfg.stress_amplitude * np.sqrt(math.pi * mid * 1e-3)
    rate = cfg.true_paris.coeff_c * dk**cfg.true_paris.exponent_m
    return float(np.sum(np.diff(a) / rate))


def spearman(x, y):
    rx = np.argsort(np.argsort(x)).astype(float)
    ry = np.argsort(np.argsort(y)).astype(float)
    rx -= rx.mean()
    ry -= ry.mean()
    return float((rx @ ry) / math.sqrt((rx @ rx) * (ry @ ry)))


class TestGenerate:
    def test_noise_free_driftless_frequency_shape(self):
        cfg = base_config(linear_drift_hz_per_mcycle=0.0)
        dataset, truth = generate(cfg)
        i0 = truth.crack_initiation_index
        assert np.ptp(dataset.frequency[:i0]) == 0.0
        assert np.all(np.diff(dataset.frequency[i0 - 1 :]) < 0)

    def test_fails_before_runout_and_higher_stress_fails_faster(self):
        # oracle: quadrature of the growth law; geometry factor 1.0 makes
        # these constants fail well before the runout limit
        cfg300 = base_config(
            true_paris=ParisParams(2.00e-14, 5.86), geometry_factor=1.0, stress_amplitude=300.0
        )
        cfg400 = base_config(
            true_paris=ParisParams(2.00e-14, 5.86), geometry_factor=1.0, stress_amplitude=400.0
        )
        assert growth_life_oracle(cfg300) < cfg300.runout
        assert growth_life_oracle(cfg400) < growth_life_oracle(cfg300)
        ds300, t300 = generate(cfg300)
        ds400, t400 = generate(cfg400, dataset_id="ds02")
        assert t300.failed and t400.failed
        assert len(ds400.cycles) < len(ds300.cycles)

    def test_growth_duration_matches_oracle(self):
        cfg = base_config()
        _, truth = generate(cfg)
        n_growth = len(truth.crack_sizes) - truth.crack_initiation_index
        oracle_samples = growth_life_oracle(cfg) / cfg.sample_interval
        # stepping overshoots the smooth quadrature slightly near failure
        assert abs(n_growth - oracle_samples) <= max(3.0, 0.05 * oracle_samples)

    def test_final_drop_meets_criterion(self):
        cfg = base_config(linear_drift_hz_per_mcycle=0.0)
        dataset, truth = generate(cfg)
        drop = cfg.base_frequency - dataset.frequency
        assert drop[-1] >= cfg.failure_drop_hz
        assert np.all(drop[:-1] < cfg.failure_drop_hz)

    def test_truth_sizes_nondecreasing_and_self_consistent(self):
        cfg = base_config()
        dataset, truth = generate(cfg)
        assert np.all(np.diff(truth.crack_sizes) >= 0)
        i0 = truth.crack_initiation_index
        geom = cfg.geometry()
        rates = np.array(
            [
                paris_rate(cfg.true_paris, sif_range(cfg.stress_amplitude, a, geom))
                for a in truth.crack_sizes[i0 - 1 :]
            ]
        )
        rebuilt = integrate_crack_size(rates, dataset.cycles[i0 - 1 :], truth.crack_sizes[i0 - 1])
        np.testing.assert_allclose(rebuilt, truth.crack_sizes[i0 - 1 :], rtol=1e-12)

    def test_initiation_dominates_record(self):
        for seed in range(5):
            _, truth = generate(base_config(seed=seed))
            n = len(truth.crack_sizes)
            assert 0.4 <= truth.crack_initiation_index / n <= 0.85

    def test_prep_recovers_initiation_index(self):
        prep_cfg = PrepConfig()
        for seed in range(5):
            cfg = base_config(seed=seed)
            dataset, truth = generate(cfg)
            prepared = prepare(
                dataset,
                MaterialPoint(sqrt_area=cfg.sqrt_area, hardness=cfg.hardness),
                cfg.geometry(),
                prep_cfg,
            )
            i0 = truth.crack_initiation_index
            assert abs(prepared.transition_index - i0) <= prep_cfg.smoothing_window + 5
            # the retained region never starts more than a smoothing window early
            assert prepared.transition_index >= i0 - prep_cfg.smoothing_window

    def test_runout_config_produces_linear_record(self):
        # slow constants: growth life far exceeds the runout budget
        cfg = base_config(
            true_paris=ParisParams(2.00e-14, 5.86), stress_amplitude=250.0, runout=2_000_000
        )
        dataset, truth = generate(cfg)
        assert not truth.failed
        assert len(dataset.cycles) == cfg.runout // cfg.sample_interval

    def test_immediate_failure_rejected(self):
        with pytest.raises(ConfigError):
            generate(base_config(initial_crack_mm=6.0))

    def test_same_seed_identical(self):
        a, _ = generate(base_config(noise_sigma_hz=0.005))
        b, _ = generate(base_config(noise_sigma_hz=0.005))
        np.testing.assert_array_equal(a.frequency, b.frequency)
        np.testing.assert_array_equal(a.cycles, b.cycles)


class TestGenerateBatch:
    def test_sample_counts_anticorrelate_with_stress(self):
        levels = np.linspace(200.0, 450.0, 10)
        batch = generate_batch(10, base_config(), levels, seed=3)
        counts = [len(ds.cycles) for ds, _ in batch]
        assert spearman(levels, counts) < 0

    def test_singleton_matches_generate(self):
        cfgs = batch_configs(1, base_config(), [320.0], seed=5)
        batch = generate_batch(1, base_config(), [320.0], seed=5)
        direct_ds, direct_truth = generate(cfgs[0], dataset_id="ds01")
        np.testing.assert_array_equal(batch[0][0].frequency, direct_ds.frequency)
        np.testing.assert_array_equal(batch[0][1].crack_sizes, direct_truth.crack_sizes)

    def test_same_seed_identical_batch(self):
        levels = [260.0, 330.0, 410.0]
        b1 = generate_batch(3, base_config(), levels, seed=11)
        b2 = generate_batch(3, base_config(), levels, seed=11)
        for (da, _), (db, _) in zip(b1, b2):
            np.testing.assert_array_equal(da.frequency, db.frequency)

    def test_defect_jitter_and_ids(self):
        batch = generate_batch(4, base_config(), [280.0, 320.0, 360.0, 400.0], seed=9)
        areas = [ds.sqrt_area for ds, _ in batch]
        assert len(set(areas)) == 4
        assert [ds.id for ds, _ in batch] == ["ds01", "ds02", "ds03", "ds04"]

    def test_mismatched_count_rejected(self):
        with pytest.raises(ConfigError):
            generate_batch(3, base_config(), [300.0], seed=0)

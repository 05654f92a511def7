"""Synthetic resonance-fatigue telemetry with a ground-truth channel.

The forward model mirrors the rig behavior the pipeline expects: a long
crack-initiation phase where the resonance frequency only drifts linearly,
then a growth phase where the crack advances by the power-law growth
relation per sample interval and the frequency sags through a stiffness
proxy, until the configured frequency-drop failure criterion (or runout)
ends the test.

The stiffness proxy ``drop = failure_drop_hz * (a / a_fail)**p`` is a
stand-in, not established physics; ``a_fail`` is the gauge width, so a
test fails exactly when the crack spans the gauge section.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DomainError
from .fatigue import GeometryConfig, ParisParams, paris_rate, sif_range
from .prep import CouponDataset


@dataclass(frozen=True)
class GeneratorConfig:
    """Full description of one simulated fatigue test."""

    true_paris: ParisParams
    initial_crack_mm: float
    stress_amplitude: float  # MPa
    sqrt_area: float  # micrometers
    hardness: float  # HV
    base_frequency: float = 95.0  # Hz
    linear_drift_hz_per_mcycle: float = 0.02
    failure_drop_hz: float = 2.0
    sample_interval: int = 1000  # cycles between recorded samples
    runout: int = 10_000_000  # cycles
    stiffness_exponent: float = 2.0
    noise_sigma_hz: float = 0.005
    seed: int = 0
    gauge_width_mm: float = 5.0
    geometry_factor: float = 0.65

    def __post_init__(self) -> None:
        if self.failure_drop_hz <= 0:
            raise ConfigError(f"failure_drop_hz must be positive, got {self.failure_drop_hz}")
        if self.sample_interval < 1 or self.runout < self.sample_interval:
            raise ConfigError("sample_interval must be >= 1 and runout >= sample_interval")
        if self.initial_crack_mm <= 0 or self.stress_amplitude <= 0 or self.sqrt_area <= 0:
            raise ConfigError("crack size, stress amplitude and defect size must be positive")
        if self.base_frequency <= 0 or self.noise_sigma_hz < 0:
            raise ConfigError("base_frequency must be positive and noise_sigma_hz nonnegative")
        if self.stiffness_exponent <= 0:
            raise ConfigError(f"stiffness_exponent must be positive, got {self.stiffness_exponent}")

    def geometry(self) -> GeometryConfig:
        return GeometryConfig(
            gauge_width_mm=self.gauge_width_mm,
            geometry_factor=self.geometry_factor,
            runout_cycles=self.runout,
        )


@dataclass(frozen=True, eq=False)
class SyntheticTruth:
    """Oracle channel recorded alongside the telemetry: never an input to
    training, only to tests and reporting."""

    crack_initiation_index: int  # first sample index with crack growth;
    # equals len(crack_sizes) if growth never enters the record
    crack_sizes: np.ndarray  # per-sample crack size, mm
    true_paris: ParisParams
    failed: bool  # False means the test ran out

    def __post_init__(self) -> None:
        object.__setattr__(self, "crack_sizes", np.asarray(self.crack_sizes, dtype=float))
        if np.any(np.diff(self.crack_sizes) < 0):
            raise DomainError("truth crack sizes must be nondecreasing")


def _growth_steps(cfg: GeneratorConfig, max_steps: int) -> np.ndarray:
    """Left-endpoint growth integration on the sample grid, starting at the
    initial crack size; returns the size after each step, stopping at the
    gauge width or after ``max_steps`` steps."""
    geom = cfg.geometry()
    a = cfg.initial_crack_mm
    sizes = []
    for _ in range(max_steps):
        a = a + paris_rate(cfg.true_paris, sif_range(cfg.stress_amplitude, a, geom)) * cfg.sample_interval
        sizes.append(a)
        if a >= cfg.gauge_width_mm:
            break
    return np.array(sizes)


def generate(cfg: GeneratorConfig, dataset_id: str = "ds01") -> tuple[CouponDataset, SyntheticTruth]:
    """Simulate one fatigue test.

    The initiation phase length is a seeded uniform 40-80% fraction of the
    total life, so the linear region dominates the record. Raises
    :class:`ConfigError` for setups that fail at the very first sample.
    """
    if cfg.initial_crack_mm >= cfg.gauge_width_mm:
        raise ConfigError(
            f"initial crack {cfg.initial_crack_mm} mm already spans the gauge width"
        )
    rng = np.random.default_rng(cfg.seed)
    max_samples = cfg.runout // cfg.sample_interval
    growth_sizes = _growth_steps(cfg, max_steps=max_samples)
    reaches_width = len(growth_sizes) > 0 and growth_sizes[-1] >= cfg.gauge_width_mm
    growth_cycles = len(growth_sizes) * cfg.sample_interval

    init_fraction = rng.uniform(0.4, 0.8)
    n_init = max(1, round(init_fraction / (1.0 - init_fraction) * growth_cycles / cfg.sample_interval))

    if n_init >= max_samples:
        # initiation alone outlasts the runout budget: pure linear record
        n_samples = max_samples
        sizes = np.full(n_samples, cfg.initial_crack_mm)
        drops = np.zeros(n_samples)
        failed = False
        initiation_index = n_samples
    else:
        kept_growth = growth_sizes[: max_samples - n_init]
        sizes = np.concatenate([np.full(n_init, cfg.initial_crack_mm), kept_growth])
        drops = np.concatenate(
            [
                np.zeros(n_init),
                cfg.failure_drop_hz * (kept_growth / cfg.gauge_width_mm) ** cfg.stiffness_exponent,
            ]
        )
        failed = reaches_width and len(kept_growth) == len(growth_sizes)
        n_samples = len(sizes)
        initiation_index = n_init

    if n_samples < 3:
        raise ConfigError(
            f"dataset {dataset_id}: configuration fails after {n_samples} sample(s); "
            "nothing usable to record"
        )

    cycles = cfg.sample_interval * np.arange(1.0, n_samples + 1.0)
    frequency = (
        cfg.base_frequency
        - cfg.linear_drift_hz_per_mcycle * cycles / 1e6
        - drops
        + cfg.noise_sigma_hz * rng.standard_normal(n_samples)
    )

    dataset = CouponDataset(
        id=dataset_id,
        sqrt_area=cfg.sqrt_area,
        stress_amplitude=cfg.stress_amplitude,
        hardness=cfg.hardness,
        cycles=cycles,
        frequency=frequency,
    )
    truth = SyntheticTruth(
        crack_initiation_index=initiation_index,
        crack_sizes=sizes,
        true_paris=cfg.true_paris,
        failed=failed,
    )
    return dataset, truth


def batch_configs(
    n: int,
    base_cfg: GeneratorConfig,
    stress_levels,
    seed: int,
    defect_jitter: float = 0.15,
) -> list[GeneratorConfig]:
    """Derive the per-dataset configs of a batch: one stress level each,
    jittered defect size (initial crack follows the defect), fresh noise
    seeds."""
    stress_levels = list(stress_levels)
    if n != len(stress_levels):
        raise ConfigError(f"n={n} does not match {len(stress_levels)} stress levels")
    rng = np.random.default_rng(seed)
    configs = []
    for level in stress_levels:
        jitter = 1.0 + defect_jitter * rng.uniform(-1.0, 1.0)
        sqrt_area = base_cfg.sqrt_area * jitter
        configs.append(
            replace(
                base_cfg,
                stress_amplitude=float(level),
                sqrt_area=sqrt_area,
                initial_crack_mm=sqrt_area / 1000.0,
                seed=int(rng.integers(2**31)),
            )
        )
    return configs


def generate_batch(
    n: int,
    base_cfg: GeneratorConfig,
    stress_levels,
    seed: int,
    defect_jitter: float = 0.15,
) -> list[tuple[CouponDataset, SyntheticTruth]]:
    """Generate ``n`` datasets differing in stress amplitude, defect size
    and noise seed. Dataset ids run ds01, ds02, ..."""
    configs = batch_configs(n, base_cfg, stress_levels, seed, defect_jitter)
    return [generate(cfg, dataset_id=f"ds{i + 1:02d}") for i, cfg in enumerate(configs)]

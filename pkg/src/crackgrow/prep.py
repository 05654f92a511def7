"""Turns raw resonance-fatigue telemetry into scaled training features.

Pipeline: smooth the frequency series, locate the linear-to-nonlinear
transition by growing-window linear regression, drop the linear
(crack-initiation) prefix, map the remaining frequency to a normalized
drop, and assemble the four per-row features.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateDataError, DomainError, RunoutError
from .fatigue import GeometryConfig, MaterialPoint, endurance_limit, threshold_sif


@dataclass(frozen=True, eq=False)
class CouponDataset:
    """One coupon's test metadata and telemetry.

    ``cycles`` and ``frequency`` are aligned series sampled during the
    fatigue test; ``sqrt_area`` is in micrometers, ``stress_amplitude``
    in MPa, ``hardness`` in HV.
    """

    id: str
    sqrt_area: float
    stress_amplitude: float
    hardness: float
    cycles: np.ndarray
    frequency: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "cycles", np.asarray(self.cycles, dtype=float))
        object.__setattr__(self, "frequency", np.asarray(self.frequency, dtype=float))
        if self.sqrt_area <= 0 or self.stress_amplitude <= 0:
            raise DomainError(
                f"dataset {self.id}: sqrt_area and stress_amplitude must be positive"
            )
        if self.cycles.shape != self.frequency.shape or self.cycles.ndim != 1:
            raise DomainError(f"dataset {self.id}: cycles and frequency must align")
        if len(self.cycles) < 3:
            raise DomainError(f"dataset {self.id}: need at least 3 samples")
        if np.any(np.diff(self.cycles) <= 0):
            raise DomainError(f"dataset {self.id}: cycles must be strictly increasing")


@dataclass(frozen=True, eq=False)
class PreparedDataset:
    """Feature matrix and derived scalars ready for training.

    ``features`` columns: log10 defect size, log10 stress amplitude,
    min-max scaled log10 cycles, normalized frequency drop. The first two
    are constant within a dataset; the last two each span [0, 1].
    """

    features: np.ndarray
    cycles_retained: np.ndarray
    sigma_w: float
    delta_k_th: float
    source_id: str
    sqrt_area_um: float
    stress_amplitude_mpa: float
    transition_index: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", np.asarray(self.features, dtype=float))
        object.__setattr__(self, "cycles_retained", np.asarray(self.cycles_retained, dtype=float))
        f = self.features
        if f.ndim != 2 or f.shape[1] != 4 or f.shape[0] != len(self.cycles_retained):
            raise DomainError(f"dataset {self.source_id}: features must be n x 4, aligned with cycles")
        if f.shape[0] >= 2:
            for col in (0, 1):
                if np.ptp(f[:, col]) != 0.0:
                    raise DomainError(f"dataset {self.source_id}: feature column {col} must be constant")
            for col in (2, 3):
                if f[:, col].min() < 0.0 or f[:, col].max() > 1.0:
                    raise DomainError(f"dataset {self.source_id}: feature column {col} outside [0, 1]")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class PrepConfig:
    """Knobs of the preparation pipeline.

    ``smoothing_window`` is a centered moving-average width (odd),
    ``initial_window`` the starting point count of the transition search,
    ``alpha`` the fit-error growth factor that flags the transition.
    """

    smoothing_window: int = 5
    initial_window: int = 10
    alpha: float = 2.0

    def __post_init__(self) -> None:
        if self.smoothing_window < 1 or self.smoothing_window % 2 == 0:
            raise ConfigError(f"smoothing_window must be odd and >= 1, got {self.smoothing_window}")
        if self.initial_window < 2:
            raise ConfigError(f"initial_window must be >= 2, got {self.initial_window}")
        if self.alpha <= 1.0:
            raise ConfigError(f"alpha must exceed 1, got {self.alpha}")


def moving_average(frequency: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average; windows shrink at the edges by clipping to
    the series bounds, so the output has the input's length."""
    frequency = np.asarray(frequency, dtype=float)
    n = len(frequency)
    if window % 2 == 0 or window < 1:
        raise ConfigError(f"window must be odd and >= 1, got {window}")
    if window > n:
        raise ConfigError(f"window {window} exceeds series length {n}")
    if window == 1:
        return frequency.copy()
    half = window // 2
    idx = np.arange(n)
    starts = np.maximum(idx - half, 0)
    ends = np.minimum(idx + half + 1, n)
    csum = np.concatenate(([0.0], np.cumsum(frequency)))
    return (csum[ends] - csum[starts]) / (ends - starts)


def _rss_linear_prefixes(x: np.ndarray, y: np.ndarray, start: int) -> "np.ndarray":
    """Residual sum of squares of the OLS line over each prefix length
    ``start`` .. len(x), one pass, numerically stable (centered updates)."""
    n = len(x)
    out = np.empty(n - start + 1)
    mean_x = mean_y = m2x = m2y = cxy = 0.0
    count = 0
    for i in range(n):
        count += 1
        dx = x[i] - mean_x
        mean_x += dx / count
        dy = y[i] - mean_y
        mean_y += dy / count
        m2x += dx * (x[i] - mean_x)
        m2y += dy * (y[i] - mean_y)
        cxy += dx * (y[i] - mean_y)
        if count >= start:
            rss = m2y - (cxy * cxy / m2x if m2x > 0.0 else 0.0)
            out[count - start] = max(rss, 0.0)
    return out


def detect_transition(frequency: np.ndarray, cfg: PrepConfig) -> int | None:
    """Index separating the linear prefix from the nonlinear tail.

    Fits a line to the first ``omega`` points, grows ``omega`` one point at
    a time while tracking the minimum RSS, and stops at the first omega
    whose RSS reaches ``alpha`` times that minimum; the previous omega is
    returned as the count of points to discard. Returns None when the
    whole series stays linear (runout-like data).

    The minimum is floored at 1e-12 * (mean frequency)**2 so exactly
    linear data cannot trip the threshold on rounding noise alone.
    """
    frequency = np.asarray(frequency, dtype=float)
    n = len(frequency)
    omega0 = cfg.initial_window
    if n < omega0 + 1:
        raise DomainError(f"series of {n} points is too short for initial window {omega0}")
    x = np.arange(n, dtype=float)
    rss = _rss_linear_prefixes(x, frequency, omega0)
    floor = 1e-12 * float(np.mean(frequency)) ** 2
    rss_min = rss[0]
    for omega in range(omega0 + 1, n + 1):
        current = rss[omega - omega0]
        if current >= cfg.alpha * max(rss_min, floor):
            return omega - 1
        if current < rss_min:
            rss_min = current
    return None


def transform_frequency(frequency_retained: np.ndarray) -> np.ndarray:
    """Map retained frequency to a normalized drop in [0, 1].

    Computes the drop from the series maximum, then min-max scales it, so
    the output increases as the frequency falls and always touches both 0
    and 1.
    """
    f = np.asarray(frequency_retained, dtype=float)
    if len(f) < 2:
        raise DomainError(f"need at least 2 points, got {len(f)}")
    drop = f.max() - f
    span = drop.max() - drop.min()
    if span == 0.0:
        raise DegenerateDataError("constant frequency: drop has zero range")
    return (drop - drop.min()) / span


def prepare(
    dataset: CouponDataset,
    mat: MaterialPoint,
    geom: GeometryConfig,
    cfg: PrepConfig,
) -> PreparedDataset:
    """Run the full preparation pipeline on one coupon dataset.

    Raises :class:`RunoutError` when no crack-growth region is found and
    :class:`DegenerateDataError` when fewer than 2 rows survive truncation.
    """
    smoothed = moving_average(dataset.frequency, cfg.smoothing_window)
    omega = detect_transition(smoothed, cfg)
    if omega is None:
        raise RunoutError(f"dataset {dataset.id}: no crack-growth region (runout-like series)")
    cycles_kept = dataset.cycles[omega:]
    freq_kept = smoothed[omega:]
    if len(cycles_kept) < 2:
        raise DegenerateDataError(f"dataset {dataset.id}: fewer than 2 rows after truncation")
    if cycles_kept[0] <= 0:
        raise DomainError(f"dataset {dataset.id}: retained cycles must be positive for log scaling")
    delta_f = transform_frequency(freq_kept)
    log_n = np.log10(cycles_kept)
    span = log_n.max() - log_n.min()
    if span == 0.0:
        raise DegenerateDataError(f"dataset {dataset.id}: retained cycles have zero spread")
    n = len(cycles_kept)
    features = np.column_stack(
        [
            np.full(n, np.log10(dataset.sqrt_area)),
            np.full(n, np.log10(dataset.stress_amplitude)),
            (log_n - log_n.min()) / span,
            delta_f,
        ]
    )
    return PreparedDataset(
        features=features,
        cycles_retained=cycles_kept.copy(),
        sigma_w=endurance_limit(mat),
        delta_k_th=threshold_sif(mat),
        source_id=dataset.id,
        sqrt_area_um=dataset.sqrt_area,
        stress_amplitude_mpa=dataset.stress_amplitude,
        transition_index=omega,
    )

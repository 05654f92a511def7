"""Closed-form fatigue mechanics: Murakami strength/threshold models,
stress intensity factors, Paris-law evaluation and integration, and
log-log regression for extracting growth constants.

Unit conventions are fixed (not configurable):

* defect size ``sqrt_area`` in micrometers (Murakami convention),
* crack size ``a`` in millimeters,
* stresses in MPa, stress intensity factor ranges in MPa*sqrt(m),
* growth coefficient C in (mm/cycle) / (MPa*sqrt(m))**m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, DomainError

#: Published Paris constants for laser-fused 316L, used as CLI reference
#: rows (``--reference table2``) and as generator truths in tests.
#: Units of C: (mm/cycle) / (MPa*sqrt(m))**m.
REFERENCE_PARIS_CONSTANTS_316L: tuple[tuple[str, float, float], ...] = (
    ("ref_316L_parallel_a", 2.00e-14, 5.86),
    ("ref_316L_parallel_b", 2.12e-09, 3.37),
    ("ref_316L_perpendicular_a", 8.63e-10, 3.46),
    ("ref_316L_perpendicular_b", 1.74e-10, 3.55),
    ("ref_316L_perpendicular_c", 2.50e-10, 3.76),
)


@dataclass(frozen=True)
class MaterialPoint:
    """Defect and hardness state of one coupon.

    Attributes
    ----------
    sqrt_area : float
        Defect size metric, micrometers.
    hardness : float
        Vickers hardness HV (kgf/mm2 convention), dimensionless.
    murakami_c1 : float
        Surface-defect coefficient C1 of the endurance-limit model.
        1.43 is the standard surface-inspection value.
    """

    sqrt_area: float
    hardness: float
    murakami_c1: float = 1.43

    def __post_init__(self) -> None:
        if self.sqrt_area <= 0 or self.hardness <= 0 or self.murakami_c1 <= 0:
            raise DomainError(
                f"MaterialPoint fields must be positive, got sqrt_area={self.sqrt_area}, "
                f"hardness={self.hardness}, murakami_c1={self.murakami_c1}"
            )


@dataclass(frozen=True)
class GeometryConfig:
    """Coupon geometry and test limits.

    Attributes
    ----------
    gauge_width_mm : float
        Gauge section width W, millimeters. Upper bound for crack size.
    geometry_factor : float
        Unitless SIF geometry factor Y. 0.65 is the surface-crack value.
    runout_cycles : int
        Cycle count at which an unfailed test is halted.
    """

    gauge_width_mm: float = 5.0
    geometry_factor: float = 0.65
    runout_cycles: int = 10_000_000

    def __post_init__(self) -> None:
        if self.gauge_width_mm <= 0 or self.geometry_factor <= 0 or self.runout_cycles < 1:
            raise DomainError(
                f"GeometryConfig fields out of range: W={self.gauge_width_mm}, "
                f"Y={self.geometry_factor}, runout={self.runout_cycles}"
            )

    @property
    def gauge_width_m(self) -> float:
        return self.gauge_width_mm * 1e-3


@dataclass(frozen=True)
class ParisParams:
    """Power-law growth constants: rate = coeff_c * delta_k ** exponent_m."""

    coeff_c: float
    exponent_m: float

    def __post_init__(self) -> None:
        if self.coeff_c <= 0 or self.exponent_m <= 0:
            raise DomainError(
                f"ParisParams must be positive, got C={self.coeff_c}, m={self.exponent_m}"
            )


@dataclass(frozen=True)
class ParisFit:
    """Result of a log-log regression of growth rate on SIF range."""

    params: ParisParams
    r_squared: float
    n_points: int

    def __post_init__(self) -> None:
        if not (-1e-9 <= self.r_squared <= 1.0 + 1e-9):
            raise DomainError(f"r_squared out of [0, 1]: {self.r_squared}")
        if self.n_points < 2:
            raise DomainError(f"fit needs >= 2 points, got {self.n_points}")


@dataclass(frozen=True, eq=False)
class CrackGrowthPrediction:
    """Per-row prediction of a crack growth curve plus its regression fit.

    All arrays share one length: ``delta_k`` (MPa*sqrt(m)), per-row Paris
    parameters ``paris_c``/``paris_m``, growth ``rate`` (mm/cycle), and
    cumulative ``crack_size`` (mm). ``fit`` is None when the log-log
    regression found no physical growth-law structure (non-positive slope,
    possible for untrained or badly converged networks).
    """

    delta_k: np.ndarray
    paris_c: np.ndarray
    paris_m: np.ndarray
    rate: np.ndarray
    crack_size: np.ndarray
    fit: ParisFit | None

    def __post_init__(self) -> None:
        n = len(self.delta_k)
        for name in ("paris_c", "paris_m", "rate", "crack_size"):
            if len(getattr(self, name)) != n:
                raise DomainError(f"prediction vector {name} has mismatched length")


def endurance_limit(mat: MaterialPoint) -> float:
    """Lower-bound endurance limit, MPa: C1 * (HV + 120) / sqrt_area**(1/6).

    ``sqrt_area`` is taken in micrometers; the exponent convention makes
    the result come out in MPa directly.
    """
    return mat.murakami_c1 * (mat.hardness + 120.0) / mat.sqrt_area ** (1.0 / 6.0)


def threshold_sif(mat: MaterialPoint) -> float:
    """Threshold SIF range, MPa*sqrt(m): 3.3e-3 * (HV + 120) * sqrt_area**(1/3)."""
    return 3.3e-3 * (mat.hardness + 120.0) * mat.sqrt_area ** (1.0 / 3.0)


def sif_range(stress_amplitude: float, crack_size_mm: float, geom: GeometryConfig) -> float:
    """SIF range 2 * Y * sigma_a * sqrt(pi * a), MPa*sqrt(m).

    ``crack_size_mm`` is converted to meters so the units balance.
    """
    if crack_size_mm <= 0:
        raise DomainError(f"crack size must be positive, got {crack_size_mm}")
    return 2.0 * geom.geometry_factor * stress_amplitude * math.sqrt(math.pi * crack_size_mm * 1e-3)


def nondim_sif(delta_k: float, sigma_w: float, geom: GeometryConfig) -> float:
    """Dimensionless SIF range: delta_k / (sigma_w * sqrt(W in meters))."""
    if sigma_w <= 0:
        raise DomainError(f"sigma_w must be positive, got {sigma_w}")
    return delta_k / (sigma_w * math.sqrt(geom.gauge_width_m))


def redim_sif(delta_k_star: float, sigma_w: float, geom: GeometryConfig) -> float:
    """Inverse of :func:`nondim_sif`: delta_k_star * sigma_w * sqrt(W in meters)."""
    if sigma_w <= 0:
        raise DomainError(f"sigma_w must be positive, got {sigma_w}")
    return delta_k_star * sigma_w * math.sqrt(geom.gauge_width_m)


def nondim_crack(crack_size_mm: float, geom: GeometryConfig) -> float:
    """Crack size as a fraction of the gauge width."""
    if crack_size_mm < 0:
        raise DomainError(f"crack size must be nonnegative, got {crack_size_mm}")
    return crack_size_mm / geom.gauge_width_mm


def nondim_cycles(cycles: float, geom: GeometryConfig) -> float:
    """Cycle count as a fraction of the runout limit. Provided for completeness;
    the training pipeline scales cycles by min-max instead."""
    if cycles < 0:
        raise DomainError(f"cycles must be nonnegative, got {cycles}")
    return cycles / geom.runout_cycles


def paris_rate(params: ParisParams, delta_k: float) -> float:
    """Growth rate C * delta_k**m, mm/cycle."""
    if delta_k <= 0:
        raise DomainError(f"delta_k must be positive, got {delta_k}")
    return params.coeff_c * delta_k**params.exponent_m


def integrate_crack_size(
    rate: np.ndarray,
    cycles: np.ndarray,
    a0_mm: float,
    rule: str = "left",
) -> np.ndarray:
    """Accumulate crack size from per-row growth rates, mm.

    Left-endpoint rule (default): a[0] = a0, a[i+1] = a[i] + rate[i] * dN[i],
    so with a0 = 0 the last entry equals the plain sum of rate[i] * dN[i].
    ``rule="trapezoid"`` averages adjacent rates instead, for sensitivity
    checks only.
    """
    rate = np.asarray(rate, dtype=float)
    cycles = np.asarray(cycles, dtype=float)
    if rate.shape != cycles.shape or rate.ndim != 1 or len(rate) < 2:
        raise DomainError("rate and cycles must be equal-length vectors of length >= 2")
    dn = np.diff(cycles)
    if np.any(dn <= 0):
        raise DomainError("cycles must be strictly increasing")
    if rule == "left":
        steps = rate[:-1] * dn
    elif rule == "trapezoid":
        steps = 0.5 * (rate[:-1] + rate[1:]) * dn
    else:
        raise DomainError(f"unknown integration rule: {rule!r}")
    out = np.empty_like(rate)
    out[0] = a0_mm
    out[1:] = a0_mm + np.cumsum(steps)
    return out


def fit_paris_constants(delta_k: np.ndarray, rate: np.ndarray) -> ParisFit:
    """Ordinary least squares of log10(rate) on log10(delta_k).

    Slope is the exponent m, intercept is log10(C). Raises
    :class:`DegenerateDataError` when log10(delta_k) has zero variance and
    :class:`DomainError` when the slope comes out non-positive (no
    growth-law structure in the data; the constants cannot represent it).
    """
    delta_k = np.asarray(delta_k, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if delta_k.shape != rate.shape or delta_k.ndim != 1 or len(delta_k) < 2:
        raise DomainError("delta_k and rate must be equal-length vectors of length >= 2")
    if np.any(delta_k <= 0) or np.any(rate <= 0):
        raise DomainError("delta_k and rate entries must all be positive")
    x = np.log10(delta_k)
    y = np.log10(rate)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise DegenerateDataError("log10(delta_k) has zero variance; regression is degenerate")
    slope = float(dx @ dy) / sxx
    if slope <= 0.0:
        raise DomainError(f"regression slope {slope:.4g} is non-physical for a growth law")
    intercept = float(y.mean() - slope * x.mean())
    resid = dy - slope * dx
    ss_res = float(resid @ resid)
    ss_tot = float(dy @ dy)
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    r_squared = min(max(r_squared, 0.0), 1.0)
    return ParisFit(
        params=ParisParams(coeff_c=10.0**intercept, exponent_m=slope),
        r_squared=r_squared,
        n_points=len(x),
    )

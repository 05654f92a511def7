"""File formats and config handling shared by the CLI commands.

All numbers are serialized with full round-trip precision (``repr``), every
writer has a matching reader, and files are written atomically (temp file
plus rename). Ground-truth files use the ``.truth.json`` suffix so coupon
ingestion can exclude them by naming convention.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .autodiff import Network, OutputScaling
from .errors import ConfigError, ParseError
from .fatigue import CrackGrowthPrediction, GeometryConfig, MaterialPoint, ParisParams
from .losses import LossBreakdown, LossWeights
from .prep import CouponDataset, PrepConfig, PreparedDataset
from .synth import GeneratorConfig, SyntheticTruth
from .training import TrainConfig

COUPON_HEADER = ["cycle", "frequency_hz"]
LOSS_HEADER = ["epoch", "l_ic", "l_bc", "l_mon_a", "l_mon_k", "l_rss", "total"]
PREDICTION_HEADER = ["cycle", "delta_k", "paris_c", "paris_m", "rate", "crack_size"]
FITS_HEADER = ["dataset_id", "C", "m", "r_squared", "final_crack_mm"]
PREP_REPORT_HEADER = [
    "dataset_id", "status", "omega", "n_total", "n_retained", "sigma_w_mpa", "delta_k_th"
]


def _fmt(value: float) -> str:
    return repr(float(value))


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: Path, payload) -> None:
    atomic_write_text(Path(path), json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path: Path):
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join("" if v is None else (v if isinstance(v, str) else _fmt(v)) for v in row))
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def read_csv_rows(path: Path, expected_header: list[str]) -> list[list[str]]:
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: line 1: empty file") from None
        if header != expected_header:
            raise ParseError(f"{path}: line 1: expected header {expected_header}, got {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected_header):
                raise ParseError(f"{path}: line {lineno}: expected {len(expected_header)} fields")
            rows.append(row)
    return rows


def _parse_float(path: Path, lineno: int, token: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"{path}: line {lineno}: not a number: {token!r}") from None


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


# -- coupon telemetry ------------------------------------------------------

def coupon_paths(csv_path: Path) -> tuple[Path, Path, Path]:
    """Time-series CSV plus its metadata and truth sidecars."""
    csv_path = Path(csv_path)
    stem = csv_path.with_suffix("")
    return csv_path, stem.with_suffix(".meta.json"), stem.with_suffix(".truth.json")


def write_coupon(out_dir: Path, dataset: CouponDataset) -> Path:
    out_dir = Path(out_dir)
    csv_path = out_dir / f"{dataset.id}.csv"
    write_csv(csv_path, COUPON_HEADER, zip(dataset.cycles, dataset.frequency))
    write_json(
        out_dir / f"{dataset.id}.meta.json",
        {
            "id": dataset.id,
            "sqrt_area_um": dataset.sqrt_area,
            "stress_amplitude_mpa": dataset.stress_amplitude,
            "hardness_hv": dataset.hardness,
        },
    )
    return csv_path


def read_coupon(csv_path: Path) -> CouponDataset:
    csv_path, meta_path, _ = coupon_paths(csv_path)
    if not meta_path.exists():
        raise ParseError(f"{csv_path}: missing metadata sidecar {meta_path.name}")
    meta = read_json(meta_path)
    try:
        dataset_id = str(meta["id"])
        sqrt_area = float(meta["sqrt_area_um"])
        stress = float(meta["stress_amplitude_mpa"])
        hardness = float(meta["hardness_hv"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{meta_path}: bad metadata: {exc}") from exc
    rows = read_csv_rows(csv_path, COUPON_HEADER)
    cycles = np.array([_parse_float(csv_path, i + 2, r[0]) for i, r in enumerate(rows)])
    freq = np.array([_parse_float(csv_path, i + 2, r[1]) for i, r in enumerate(rows)])
    return CouponDataset(
        id=dataset_id,
        sqrt_area=sqrt_area,
        stress_amplitude=stress,
        hardness=hardness,
        cycles=cycles,
        frequency=freq,
    )


def write_truth(out_dir: Path, dataset_id: str, truth: SyntheticTruth) -> Path:
    path = Path(out_dir) / f"{dataset_id}.truth.json"
    write_json(
        path,
        {
            "crack_initiation_index": truth.crack_initiation_index,
            "crack_sizes_mm": truth.crack_sizes.tolist(),
            "paris_c": truth.true_paris.coeff_c,
            "paris_m": truth.true_paris.exponent_m,
            "failed": truth.failed,
        },
    )
    return path


def read_truth(path: Path) -> SyntheticTruth:
    payload = read_json(path)
    return SyntheticTruth(
        crack_initiation_index=int(payload["crack_initiation_index"]),
        crack_sizes=np.asarray(payload["crack_sizes_mm"], dtype=float),
        true_paris=ParisParams(float(payload["paris_c"]), float(payload["paris_m"])),
        failed=bool(payload["failed"]),
    )


def list_coupon_csvs(patterns) -> list[Path]:
    """Expand glob patterns to coupon CSVs, excluding sidecar files."""
    import glob as globmod

    found: list[Path] = []
    for pattern in patterns:
        matches = sorted(globmod.glob(str(pattern))) or [str(pattern)]
        for m in matches:
            p = Path(m)
            if p.name.endswith((".meta.json", ".truth.json", ".prepared.csv", ".prepared.json")):
                continue
            if p.suffix == ".csv":
                found.append(p)
    seen = set()
    unique = []
    for p in found:
        if p not in seen:
            seen.add(p)
            unique.append(p)
    return unique


# -- prepared datasets ------------------------------------------------------

PREPARED_HEADER = ["cycle", "feat_log_sqrt_area", "feat_log_stress", "feat_cycle_scaled", "feat_freq_drop"]


def write_prepared(out_dir: Path, prepared: PreparedDataset) -> Path:
    out_dir = Path(out_dir)
    csv_path = out_dir / f"{prepared.source_id}.prepared.csv"
    rows = zip(
        prepared.cycles_retained,
        prepared.features[:, 0],
        prepared.features[:, 1],
        prepared.features[:, 2],
        prepared.features[:, 3],
    )
    write_csv(csv_path, PREPARED_HEADER, rows)
    write_json(
        out_dir / f"{prepared.source_id}.prepared.json",
        {
            "source_id": prepared.source_id,
            "sigma_w_mpa": prepared.sigma_w,
            "delta_k_th": prepared.delta_k_th,
            "sqrt_area_um": prepared.sqrt_area_um,
            "stress_amplitude_mpa": prepared.stress_amplitude_mpa,
            "transition_index": prepared.transition_index,
        },
    )
    return csv_path


def read_prepared(csv_path: Path) -> PreparedDataset:
    csv_path = Path(csv_path)
    meta_path = csv_path.with_name(csv_path.name.replace(".prepared.csv", ".prepared.json"))
    if not meta_path.exists():
        raise ParseError(f"{csv_path}: missing sidecar {meta_path.name}")
    meta = read_json(meta_path)
    rows = read_csv_rows(csv_path, PREPARED_HEADER)
    data = np.array(
        [[_parse_float(csv_path, i + 2, v) for v in row] for i, row in enumerate(rows)]
    )
    return PreparedDataset(
        features=data[:, 1:5],
        cycles_retained=data[:, 0],
        sigma_w=float(meta["sigma_w_mpa"]),
        delta_k_th=float(meta["delta_k_th"]),
        source_id=str(meta["source_id"]),
        sqrt_area_um=float(meta["sqrt_area_um"]),
        stress_amplitude_mpa=float(meta["stress_amplitude_mpa"]),
        transition_index=int(meta["transition_index"]),
    )


def list_prepared_csvs(patterns) -> list[Path]:
    import glob as globmod

    found: list[Path] = []
    for pattern in patterns:
        matches = sorted(globmod.glob(str(pattern))) or [str(pattern)]
        found.extend(Path(m) for m in matches if m.endswith(".prepared.csv"))
    seen = set()
    unique = []
    for p in found:
        if p not in seen:
            seen.add(p)
            unique.append(p)
    return unique


# -- model, losses, predictions, fits ---------------------------------------

def write_model(path: Path, net: Network, scaling: OutputScaling) -> None:
    payload = net.to_dict()
    payload["output_scaling"] = {
        "c_log10_range": list(scaling.c_log10_range),
        "m_range": list(scaling.m_range),
    }
    write_json(path, payload)


def read_model(path: Path) -> tuple[Network, OutputScaling]:
    payload = read_json(path)
    try:
        scaling_payload = payload["output_scaling"]
        scaling = OutputScaling(
            c_log10_range=tuple(float(v) for v in scaling_payload["c_log10_range"]),
            m_range=tuple(float(v) for v in scaling_payload["m_range"]),
        )
        net = Network.from_dict(payload)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: bad model payload: {exc}") from exc
    return net, scaling


def write_loss_history(path: Path, history: list[LossBreakdown]) -> None:
    rows = [
        (str(epoch), _fmt(h.l_ic), _fmt(h.l_bc), _fmt(h.l_mon_a), _fmt(h.l_mon_k),
         _fmt(h.l_rss), _fmt(h.total))
        for epoch, h in enumerate(history, start=1)
    ]
    write_csv(path, LOSS_HEADER, rows)


def read_loss_history(path: Path) -> np.ndarray:
    rows = read_csv_rows(Path(path), LOSS_HEADER)
    return np.array([[_parse_float(path, i + 2, v) for v in row] for i, row in enumerate(rows)])


def write_predictions(path: Path, cycles: np.ndarray, prediction: CrackGrowthPrediction) -> None:
    rows = zip(cycles, prediction.delta_k, prediction.paris_c, prediction.paris_m,
               prediction.rate, prediction.crack_size)
    write_csv(path, PREDICTION_HEADER, rows)


def read_predictions(path: Path) -> np.ndarray:
    rows = read_csv_rows(Path(path), PREDICTION_HEADER)
    return np.array([[_parse_float(path, i + 2, v) for v in row] for i, row in enumerate(rows)])


def fits_row(dataset_id: str, fit, final_crack_mm: float | None):
    """One fits-summary row from a (possibly absent) regression fit."""
    if fit is None:
        return (dataset_id, None, None, None, final_crack_mm)
    return (dataset_id, fit.params.coeff_c, fit.params.exponent_m, fit.r_squared, final_crack_mm)


def write_fits_summary(path: Path, rows) -> None:
    """Rows: (dataset_id, C, m, r_squared, final_crack_mm), None for blanks."""
    write_csv(path, FITS_HEADER, rows)


def read_fits_summary(path: Path) -> list[dict]:
    rows = read_csv_rows(Path(path), FITS_HEADER)
    out = []
    for i, row in enumerate(rows):
        record = {"dataset_id": row[0]}
        for key, token in zip(FITS_HEADER[1:], row[1:]):
            record[key] = None if token == "" else _parse_float(path, i + 2, token)
        out.append(record)
    return out


# -- configuration document --------------------------------------------------

def default_config() -> dict:
    """The single JSON config document with per-module sections."""
    return {
        "murakami_c1": 1.43,
        "geometry": {
            "gauge_width_mm": 5.0,
            "geometry_factor": 0.65,
            "runout_cycles": 10_000_000,
        },
        "prep": {"smoothing_window": 5, "initial_window": 10, "alpha": 2.0},
        "network": {
            "hidden_sizes": [16, 16],
            "hidden_activation": "tanh",
            "c_log10_range": [-16.0, -6.0],
            "m_range": [1.0, 10.0],
        },
        "training": {
            "epochs": 50,
            "learning_rate": 0.01,
            "seed": 0,
            "combined_epochs_per_dataset": 5,
            "beta1": 0.9,
            "beta2": 0.999,
            "epsilon": 1e-8,
            "weights": LossWeights().to_dict(),
        },
        "generator": {
            "paris_c": 8.63e-10,
            "paris_m": 3.46,
            "stress_levels": [round(v, 1) for v in np.linspace(380.0, 480.0, 10)],
            "sqrt_area_um": 100.0,
            "hardness_hv": 220.0,
            "initial_crack_mm": None,
            "base_frequency_hz": 95.0,
            "linear_drift_hz_per_mcycle": 0.02,
            "failure_drop_hz": 2.0,
            "sample_interval": 1000,
            "stiffness_exponent": 2.0,
            "noise_sigma_hz": 0.005,
            "defect_jitter": 0.15,
            "seed": 0,
        },
    }


def _merge_section(base: dict, override: dict, path: str) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path}{key!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            merged[key] = _merge_section(base[key], value, f"{path}{key}.")
        else:
            merged[key] = value
    return merged


def load_config(path: Path | None) -> dict:
    """Defaults overlaid with the user's config file, if any. Unknown keys
    are rejected so typos cannot silently fall back to defaults."""
    config = default_config()
    if path is None:
        return config
    payload = read_json(Path(path))
    if not isinstance(payload, dict):
        raise ConfigError(f"{path}: config document must be a JSON object")
    return _merge_section(config, payload, "")


def geometry_from_config(config: dict) -> GeometryConfig:
    g = config["geometry"]
    return GeometryConfig(
        gauge_width_mm=float(g["gauge_width_mm"]),
        geometry_factor=float(g["geometry_factor"]),
        runout_cycles=int(g["runout_cycles"]),
    )


def prep_from_config(config: dict) -> PrepConfig:
    p = config["prep"]
    return PrepConfig(
        smoothing_window=int(p["smoothing_window"]),
        initial_window=int(p["initial_window"]),
        alpha=float(p["alpha"]),
    )


def material_for(config: dict, dataset: CouponDataset) -> MaterialPoint:
    return MaterialPoint(
        sqrt_area=dataset.sqrt_area,
        hardness=dataset.hardness,
        murakami_c1=float(config["murakami_c1"]),
    )


def train_from_config(config: dict, seed_override: int | None = None) -> TrainConfig:
    t = config["training"]
    n = config["network"]
    return TrainConfig(
        epochs=int(t["epochs"]),
        learning_rate=float(t["learning_rate"]),
        seed=int(t["seed"] if seed_override is None else seed_override),
        weights=LossWeights.from_dict(t["weights"]),
        combined_epochs_per_dataset=int(t["combined_epochs_per_dataset"]),
        beta1=float(t["beta1"]),
        beta2=float(t["beta2"]),
        epsilon=float(t["epsilon"]),
        hidden_sizes=tuple(int(s) for s in n["hidden_sizes"]),
        hidden_activation=str(n["hidden_activation"]),
        scaling=OutputScaling(
            c_log10_range=tuple(float(v) for v in n["c_log10_range"]),
            m_range=tuple(float(v) for v in n["m_range"]),
        ),
    )


def generator_from_config(config: dict, seed_override: int | None = None):
    """Base GeneratorConfig plus the batch stress levels, jitter and seed."""
    g = config["generator"]
    geo = config["geometry"]
    sqrt_area = float(g["sqrt_area_um"])
    initial = g["initial_crack_mm"]
    base = GeneratorConfig(
        true_paris=ParisParams(float(g["paris_c"]), float(g["paris_m"])),
        initial_crack_mm=sqrt_area / 1000.0 if initial is None else float(initial),
        stress_amplitude=float(g["stress_levels"][0]),
        sqrt_area=sqrt_area,
        hardness=float(g["hardness_hv"]),
        base_frequency=float(g["base_frequency_hz"]),
        linear_drift_hz_per_mcycle=float(g["linear_drift_hz_per_mcycle"]),
        failure_drop_hz=float(g["failure_drop_hz"]),
        sample_interval=int(g["sample_interval"]),
        runout=int(geo["runout_cycles"]),
        stiffness_exponent=float(g["stiffness_exponent"]),
        noise_sigma_hz=float(g["noise_sigma_hz"]),
        seed=int(g["seed"] if seed_override is None else seed_override),
        gauge_width_mm=float(geo["gauge_width_mm"]),
        geometry_factor=float(geo["geometry_factor"]),
    )
    levels = [float(v) for v in g["stress_levels"]]
    return base, levels, base.seed, float(g["defect_jitter"])


# -- run manifest -------------------------------------------------------------

def build_manifest(command: str, config: dict, seed: int | None, input_paths, extra: dict | None = None) -> dict:
    from datetime import datetime, timezone

    from . import __version__

    manifest = {
        "tool_version": __version__,
        "command": command,
        "seed": seed,
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": config,
        "inputs": [
            {"path": Path(p).name, "sha256": sha256_file(p)} for p in sorted(map(str, input_paths))
        ],
    }
    if extra:
        manifest.update(extra)
    return manifest

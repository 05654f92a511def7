"""Plot-ready exports for a completed run directory: log-log growth-curve
point files plus SVG figures for the growth curves, the loss history, and
the integrated crack sizes.

SVG output is byte-deterministic for identical inputs: fixed hash salt, no
embedded creation date.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)
import numpy as np  # noqa: E402

from . import io  # noqa: E402
from .errors import ParseError  # noqa: E402

FIGURE_NAMES = ("paris_curves.svg", "loss_history.svg", "crack_size.svg")

_SVG_RC = {
    "svg.hashsalt": "crackgrow",
    "svg.fonttype": "path",
    "figure.figsize": (6.0, 4.5),
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_run_reports(run_dir: Path, out_dir: Path | None = None) -> list[Path]:
    """Render figures and point files for one cmd_train output directory.

    Raises :class:`ParseError` listing the expected files when the run
    directory has no usable outputs.
    """
    run_dir = Path(run_dir)
    out_dir = Path(out_dir) if out_dir is not None else run_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    prediction_files = sorted(run_dir.glob("predictions_*.csv"))
    history_files = sorted(run_dir.glob("loss_history*.csv"))
    fits_path = run_dir / "fits_summary.csv"
    missing = []
    if not prediction_files:
        missing.append("predictions_<dataset>.csv")
    if not history_files:
        missing.append("loss_history*.csv")
    if not fits_path.exists():
        missing.append("fits_summary.csv")
    if missing:
        raise ParseError(f"{run_dir}: no run outputs found; expected {', '.join(missing)}")

    gauge_width = 5.0
    manifest_path = run_dir / "manifest.json"
    if manifest_path.exists():
        manifest = io.read_json(manifest_path)
        gauge_width = float(
            manifest.get("config", {}).get("geometry", {}).get("gauge_width_mm", gauge_width)
        )

    predictions = {
        p.name[len("predictions_") : -len(".csv")]: io.read_predictions(p)
        for p in prediction_files
    }

    written = [
        _render_paris_points(predictions, out_dir),
        _render_paris_curves(predictions, out_dir),
        _render_loss_history(history_files, out_dir),
        _render_crack_size(predictions, gauge_width, out_dir),
    ]
    return written


def _render_paris_points(predictions: dict[str, np.ndarray], out_dir: Path) -> Path:
    rows = []
    for dataset_id in sorted(predictions):
        data = predictions[dataset_id]
        for dk, rate in zip(data[:, 1], data[:, 4]):
            rows.append((dataset_id, dk, rate))
    path = out_dir / "paris_curve_points.csv"
    io.write_csv(path, ["dataset_id", "delta_k", "rate"], rows)
    return path


def _render_paris_curves(predictions: dict[str, np.ndarray], out_dir: Path) -> Path:
    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots()
        for dataset_id in sorted(predictions):
            data = predictions[dataset_id]
            ax.loglog(data[:, 1], data[:, 4], lw=1.2, label=dataset_id)
        ax.set_xlabel(r"stress intensity factor range $\Delta K$ [MPa$\sqrt{m}$]")
        ax.set_ylabel("crack growth rate [mm/cycle]")
        ax.set_title("Predicted growth curves")
        if len(predictions) <= 12:
            ax.legend(fontsize=7)
        path = out_dir / "paris_curves.svg"
        _save(fig, path)
    return path


def _render_loss_history(history_files: list[Path], out_dir: Path) -> Path:
    term_labels = ["initial condition", "boundary condition", "rate monotonicity",
                   "SIF monotonicity", "regression residual"]
    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots()
        if len(history_files) == 1:
            data = io.read_loss_history(history_files[0])
            for col, label in enumerate(term_labels, start=1):
                ax.plot(data[:, 0], data[:, col], lw=1.0, label=label)
            ax.plot(data[:, 0], data[:, 6], lw=1.8, color="black", label="total")
        else:
            for path in history_files:
                data = io.read_loss_history(path)
                label = path.stem.replace("loss_history_", "")
                ax.plot(data[:, 0], data[:, 6], lw=1.0, label=label)
        ax.set_yscale("log")
        ax.set_xlabel("epoch")
        ax.set_ylabel("loss")
        ax.set_title("Training loss history")
        ax.legend(fontsize=7)
        path = out_dir / "loss_history.svg"
        _save(fig, path)
    return path


def _render_crack_size(predictions: dict[str, np.ndarray], gauge_width: float, out_dir: Path) -> Path:
    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots()
        for dataset_id in sorted(predictions):
            data = predictions[dataset_id]
            ax.plot(data[:, 0], data[:, 5], lw=1.2, label=dataset_id)
        ax.axhline(gauge_width, color="black", ls="--", lw=1.0, label="gauge width")
        ax.set_xlabel("cycles")
        ax.set_ylabel("crack size [mm]")
        ax.set_title("Integrated crack size")
        if len(predictions) <= 12:
            ax.legend(fontsize=7)
        path = out_dir / "crack_size.svg"
        _save(fig, path)
    return path

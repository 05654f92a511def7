"""Command-line front end: generate synthetic telemetry, prepare features,
train (individually or combined), and render report figures.

Exit codes: 0 success, 2 input/parse error, 3 numeric abort, 4 config error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__, io
from .errors import ConfigError, DomainError, ParseError, RunoutError, TrainingAbortError
from .fatigue import REFERENCE_PARIS_CONSTANTS_316L
from .prep import prepare
from .synth import generate_batch
from .training import TrainReport, train_combined, train_individual


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crackgrow",
        description="Train crack-growth predictors from resonance-fatigue telemetry "
        "using physics losses only.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="Write synthetic coupon datasets with truth sidecars.")
    gen.add_argument("--config", metavar="PATH", default=None, help="JSON config document")
    gen.add_argument("--out", metavar="DIR", required=True)
    gen.add_argument("--n", type=int, default=None, help="number of datasets (default: all stress levels)")
    gen.add_argument("--seed", type=int, default=None, help="override the generator seed")
    gen.set_defaults(func=cmd_generate)

    prep = sub.add_parser("prepare", help="Turn coupon CSVs into scaled training features.")
    prep.add_argument("inputs", nargs="+", metavar="CSV_OR_GLOB")
    prep.add_argument("--config", metavar="PATH", default=None)
    prep.add_argument("--out", metavar="DIR", required=True)
    prep.set_defaults(func=cmd_prepare)

    train = sub.add_parser("train", help="Train on prepared datasets and write predictions.")
    train.add_argument("inputs", nargs="+", metavar="PREPARED_CSV_OR_GLOB")
    train.add_argument("--mode", choices=["individual", "combined"], default="individual")
    train.add_argument("--config", metavar="PATH", default=None)
    train.add_argument("--out", metavar="DIR", required=True)
    train.add_argument("--seed", type=int, default=None, help="override the training seed")
    train.add_argument("--jobs", type=int, default=1, help="parallel workers for individual mode")
    train.add_argument(
        "--reference",
        choices=["table2"],
        default=None,
        help="append published 316L reference constants to the fits summary",
    )
    train.set_defaults(func=cmd_train)

    rep = sub.add_parser("report", help="Render SVG figures and point files for a run directory.")
    rep.add_argument("run_dir", metavar="DIR")
    rep.add_argument("--out", metavar="DIR", default=None, help="output directory (default: run dir)")
    rep.set_defaults(func=cmd_report)

    return parser


def cmd_generate(args: argparse.Namespace) -> int:
    config = io.load_config(args.config)
    base, levels, seed, jitter = io.generator_from_config(config, seed_override=args.seed)
    n = len(levels) if args.n is None else args.n
    if n < 1 or n > len(levels):
        raise ConfigError(f"--n must be in 1..{len(levels)} (one dataset per stress level)")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    batch = generate_batch(n, base, levels[:n], seed=seed, defect_jitter=jitter)
    written = []
    for dataset, truth in batch:
        csv_path = io.write_coupon(out_dir, dataset)
        io.write_truth(out_dir, dataset.id, truth)
        written.append(csv_path)
        status = "failed" if truth.failed else "runout"
        print(f"{dataset.id}: {len(dataset.cycles)} samples at {dataset.stress_amplitude:g} MPa ({status})")
    manifest = io.build_manifest("generate", config, seed, [], extra={"n_datasets": n})
    io.write_json(out_dir / "manifest.json", manifest)
    print(f"wrote {len(written)} dataset(s) to {out_dir}")
    return 0


def cmd_prepare(args: argparse.Namespace) -> int:
    config = io.load_config(args.config)
    geom = io.geometry_from_config(config)
    prep_cfg = io.prep_from_config(config)
    coupon_files = io.list_coupon_csvs(args.inputs)
    if not coupon_files:
        raise ParseError(f"no coupon CSVs matched {args.inputs}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_rows = []
    n_prepared = 0
    for path in coupon_files:
        dataset = io.read_coupon(path)
        mat = io.material_for(config, dataset)
        try:
            prepared = prepare(dataset, mat, geom, prep_cfg)
        except RunoutError as exc:
            print(f"notice: {exc}; skipped")
            report_rows.append((dataset.id, "runout", None, float(len(dataset.cycles)), None, None, None))
            continue
        io.write_prepared(out_dir, prepared)
        n_prepared += 1
        report_rows.append(
            (
                dataset.id,
                "prepared",
                float(prepared.transition_index),
                float(len(dataset.cycles)),
                float(prepared.n_rows),
                prepared.sigma_w,
                prepared.delta_k_th,
            )
        )
        print(
            f"{dataset.id}: omega={prepared.transition_index} retained={prepared.n_rows}"
            f" sigma_w={prepared.sigma_w:.2f} MPa delta_k_th={prepared.delta_k_th:.3f}"
        )
    io.write_csv(out_dir / "prep_report.csv", io.PREP_REPORT_HEADER, report_rows)
    manifest = io.build_manifest("prepare", config, None, coupon_files)
    io.write_json(out_dir / "manifest.json", manifest)
    print(f"prepared {n_prepared}/{len(coupon_files)} dataset(s)")
    return 0


def _train_one(packed) -> tuple[str, TrainReport]:
    """Worker for individual-mode training (top level for pickling)."""
    csv_path, config, seed_override = packed
    prepared = io.read_prepared(Path(csv_path))
    cfg = io.train_from_config(config, seed_override)
    geom = io.geometry_from_config(config)
    report = train_individual(prepared, cfg, geom)
    return prepared.source_id, report


def _prepared_path_for(prepared_files: list[Path], dataset_id: str) -> Path:
    for p in prepared_files:
        if p.name == f"{dataset_id}.prepared.csv":
            return p
    raise ParseError(f"prepared file for dataset {dataset_id} disappeared")


def cmd_train(args: argparse.Namespace) -> int:
    config = io.load_config(args.config)
    cfg = io.train_from_config(config, args.seed)
    geom = io.geometry_from_config(config)
    prepared_files = io.list_prepared_csvs(args.inputs)
    if not prepared_files:
        raise ParseError(f"no prepared CSVs matched {args.inputs}")
    prepared_files = sorted(prepared_files, key=lambda p: p.name)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    fits_rows = []
    if args.mode == "individual":
        jobs = max(1, args.jobs)
        packed = [(str(p), config, args.seed) for p in prepared_files]
        if jobs > 1:
            from concurrent.futures import ProcessPoolExecutor

            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_train_one, packed))
        else:
            results = [_train_one(item) for item in packed]
        results.sort(key=lambda pair: pair[0])
        for dataset_id, report in results:
            io.write_model(out_dir / f"model_{dataset_id}.json", report.final_network, cfg.scaling)
            io.write_loss_history(out_dir / f"loss_history_{dataset_id}.csv", report.loss_history)
            prediction = report.predictions[0]
            prepared = io.read_prepared(_prepared_path_for(prepared_files, dataset_id))
            io.write_predictions(
                out_dir / f"predictions_{dataset_id}.csv", prepared.cycles_retained, prediction
            )
            fits_rows.append(io.fits_row(dataset_id, prediction.fit, float(prediction.crack_size[-1])))
            print(f"{dataset_id}: trained {cfg.epochs} epochs, final loss {report.loss_history[-1].total:.4g}")
    else:
        prepared_list = [io.read_prepared(p) for p in prepared_files]
        if len(prepared_list) < 2:
            raise ConfigError("combined mode needs at least 2 prepared datasets")
        report = train_combined(prepared_list, cfg, geom)
        io.write_model(out_dir / "model.json", report.final_network, cfg.scaling)
        io.write_loss_history(out_dir / "loss_history.csv", report.loss_history)
        by_id = {p.source_id: p for p in prepared_list}
        for dataset_id, prediction in zip(report.dataset_ids, report.predictions):
            io.write_predictions(
                out_dir / f"predictions_{dataset_id}.csv",
                by_id[dataset_id].cycles_retained,
                prediction,
            )
            fits_rows.append(io.fits_row(dataset_id, prediction.fit, float(prediction.crack_size[-1])))
        print(f"combined: trained {cfg.epochs} epochs over {len(prepared_list)} datasets")

    if args.reference == "table2":
        for ref_id, coeff_c, exponent_m in REFERENCE_PARIS_CONSTANTS_316L:
            fits_rows.append((ref_id, coeff_c, exponent_m, None, None))
    io.write_fits_summary(out_dir / "fits_summary.csv", fits_rows)

    inputs = list(prepared_files) + [
        Path(str(p).replace(".prepared.csv", ".prepared.json")) for p in prepared_files
    ]
    manifest = io.build_manifest(
        "train", config, cfg.seed, inputs, extra={"mode": args.mode, "reference": args.reference}
    )
    io.write_json(out_dir / "manifest.json", manifest)
    print(f"fits summary: {out_dir / 'fits_summary.csv'}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    from .report import render_run_reports

    written = render_run_reports(Path(args.run_dir), None if args.out is None else Path(args.out))
    for path in written:
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TrainingAbortError as exc:
        print(f"error: training aborted: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"error: bad configuration: {exc}", file=sys.stderr)
        return 4
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())

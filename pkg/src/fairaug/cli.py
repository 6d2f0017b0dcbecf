"""Command-line entry point.

Subcommands follow the audit workflow end to end:

    extract-attrs   fill lighting/background attributes into a manifest
    stats           intersection count/proportion table
    weights         inverse-representation augmentation weights
    augment         materialize the weight-adapted doubled training set
    evaluate        fairness report from a predictions file
    compare         baseline-vs-treated deltas with significance
    attribution     aggregate saliency rasters and feature attributions
    synth           generate synthetic fixtures with known answers

Reports are JSON with CSV siblings; ``--plot-data`` additionally writes
per-figure CSVs and rendered PNG charts. Every report embeds the run
configuration (command, options, input digests, tool version) so a
report is reproducible byte for byte from its inputs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .attributes import CannyParams, extract_all
from .attribution import (
    env_attribution_share,
    intersection_mass_summary,
    lighting_similarity_by_class,
    load_matrix_dir,
)
from .augment import augment_dataset
from .errors import DataError
from .evaluation import (
    FairnessReport,
    disparity_reduction,
    evaluate,
    load_predictions,
    write_report_csvs,
)
from .fixtures import FixtureSpec, randomized_specs, write_fixture_set
from .intersections import ClassWeights, compute_class_weights, enumerate_intersections
from .manifest import load_manifest, write_manifest
from .rng import GENERATOR_NAME
from .stats import paired_t_test


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _run_config(command: str, options: dict, inputs: dict[str, Path]) -> dict:
    return {
        "command": command,
        "version": __version__,
        "rng_generator": GENERATOR_NAME,
        "options": {k: options[k] for k in sorted(options)},
        "input_digests": {name: _sha256(p) for name, p in sorted(inputs.items())},
    }


def _write_json(path: Path, payload: dict) -> None:
    # serialize fully before touching the file: no partial reports
    text = json.dumps(payload, indent=2) + "\n"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(v) -> str:
    return "" if v is None else repr(v)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_extract_attrs(args) -> int:
    manifest = load_manifest(args.manifest)
    params = CannyParams(
        sigma=args.canny_sigma,
        kernel_size=args.canny_kernel,
        low=args.canny_low,
        high=args.canny_high,
    )
    result = extract_all(
        manifest,
        params,
        on_error=args.on_error,
        resize_to=224 if args.resize_first else None,
        threads=args.threads,
    )
    write_manifest(result.manifest, args.out)
    for sample_id, message in result.failures:
        print(f"skipped {sample_id}: {message}", file=sys.stderr)
    print(f"wrote {args.out} ({len(result.manifest.samples)} samples, "
          f"{len(result.failures)} failures)")
    return 0


def _cmd_stats(args) -> int:
    manifest = load_manifest(args.manifest)
    rows = enumerate_intersections(manifest, args.split)
    _write_csv(
        Path(args.out),
        ["class", "lighting", "background", "count", "proportion"],
        [
            [s.key.class_label, s.key.lighting_cat, s.key.bg_cat, s.count,
             repr(s.proportion)]
            for s in rows
        ],
    )
    print(f"wrote {args.out} ({len(rows)} cells)")
    if args.plot_data:
        from . import plots  # deferred: pulls in matplotlib

        plot_dir = Path(args.plot_data)
        plot_dir.mkdir(parents=True, exist_ok=True)
        counts = manifest.class_counts(args.split)
        _write_csv(
            plot_dir / "fig_class_distribution.csv",
            ["class", "count"],
            [[c, counts[c]] for c in manifest.labels],
        )
        plots.save_class_distribution_figure(
            {c: counts[c] for c in manifest.labels},
            plot_dir / "fig_class_distribution.png",
            title=f"Class distribution ({args.split})",
        )
        _write_csv(
            plot_dir / "fig_intersections.csv",
            ["class", "lighting", "background", "count", "proportion"],
            [
                [s.key.class_label, s.key.lighting_cat, s.key.bg_cat, s.count,
                 repr(s.proportion)]
                for s in rows
            ],
        )
        plots.save_intersection_figure(rows, plot_dir / "fig_intersections.png")
        print(f"wrote plot data to {plot_dir}")
    return 0


def _cmd_weights(args) -> int:
    manifest_path = Path(args.manifest)
    manifest = load_manifest(manifest_path)
    weights = compute_class_weights(manifest, args.split)
    payload = {
        "classes": {
            c: {"n": weights.counts[c], "w": weights.weights[c]}
            for c in manifest.labels
        },
        "total": weights.total,
        "split": args.split,
        "formula": "w = N / (n * C)",
        "note": "Weights follow the inverse-representation formula exactly; "
                "verify any externally published weight table against it "
                "before comparing.",
        "run_config": _run_config(
            "weights",
            {"split": args.split},
            {"manifest": manifest_path},
        ),
    }
    _write_json(Path(args.out), payload)
    print(f"wrote {args.out}")
    return 0


def _cmd_augment(args) -> int:
    manifest_path = Path(args.manifest)
    manifest = load_manifest(manifest_path)
    if args.uniform_w is not None:
        counts = manifest.class_counts(args.split)
        weights = ClassWeights(
            weights={c: args.uniform_w for c in manifest.labels},
            counts=counts,
            total=sum(counts.values()),
        )
    else:
        weights = compute_class_weights(manifest, args.split)
    out_manifest = augment_dataset(
        manifest,
        weights,
        args.seed,
        args.out,
        split=args.split,
        flip_enabled=not args.no_flip,
        contrast_pivot=args.contrast_pivot,
        threads=args.threads,
        extra_config=_run_config(
            "augment",
            {
                "seed": args.seed,
                "split": args.split,
                "no_flip": args.no_flip,
                "contrast_pivot": args.contrast_pivot,
                "uniform_w": args.uniform_w,
            },
            {"manifest": manifest_path},
        ),
    )
    print(f"wrote {len(out_manifest.samples)} records to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    manifest_path = Path(args.manifest)
    predictions_path = Path(args.predictions)
    manifest = load_manifest(manifest_path)
    preds = load_predictions(predictions_path, manifest.labels)
    report = evaluate(preds, manifest, split=args.split, threshold=args.threshold)
    report.run_config = _run_config(
        "evaluate",
        {"split": args.split, "threshold": args.threshold},
        {"manifest": manifest_path, "predictions": predictions_path},
    )
    _write_json(Path(args.out), report.to_dict())
    print(f"wrote {args.out}")
    for flag in report.flags:
        print(f"flagged: {flag.metric} = {flag.value:.4f} > {flag.threshold}")
    if args.csv_dir:
        written = write_report_csvs(report, args.csv_dir)
        print(f"wrote {len(written)} tables to {args.csv_dir}")
    if args.plot_data:
        _emit_report_figures({"report": report}, Path(args.plot_data))
        print(f"wrote plot data to {args.plot_data}")
    return 0


def _emit_report_figures(reports: dict[str, FairnessReport], plot_dir: Path) -> None:
    """Per-figure CSVs plus rendered PNGs for one or two reports."""
    from . import plots  # deferred: pulls in matplotlib

    plot_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for name, rep in reports.items():
        for c in rep.per_class:
            rows.append([name, c.class_label, _fmt(c.accuracy), _fmt(c.f1)])
    _write_csv(plot_dir / "fig_class_metrics.csv",
               ["report", "class", "accuracy", "f1"], rows)
    plots.save_class_metrics_figure(reports, plot_dir / "fig_class_metrics.png")

    rows = []
    for name, rep in reports.items():
        for y in rep.labels:
            rows.append([
                name, y, _fmt(rep.dp_by_class[y]), _fmt(rep.eo_by_class[y]),
                repr(rep.dp_disparity), repr(rep.eo_disparity),
            ])
    _write_csv(
        plot_dir / "fig_fairness.csv",
        ["report", "class", "dp", "eo", "dp_disparity", "eo_disparity"],
        rows,
    )
    plots.save_fairness_figure(reports, plot_dir / "fig_fairness.png")

    rows = []
    for name, rep in reports.items():
        for i, true_label in enumerate(rep.labels):
            for j, pred_label in enumerate(rep.labels):
                rows.append([name, true_label, pred_label, rep.confusion[i][j]])
    _write_csv(plot_dir / "fig_confusion.csv",
               ["report", "true", "pred", "count"], rows)
    plots.save_confusion_figure(reports, plot_dir / "fig_confusion.png")


def _compare_reports(baseline: FairnessReport, treated: FairnessReport) -> list[dict]:
    if baseline.labels != treated.labels:
        raise DataError(
            f"label sets differ: {baseline.labels} vs {treated.labels}"
        )
    rows = []
    acc_a, acc_b = [], []
    for cell_a, cell_b in zip(baseline.per_class, treated.per_class):
        rows.append({
            "name": cell_a.class_label,
            "metric": "accuracy",
            "baseline": cell_a.accuracy,
            "treated": cell_b.accuracy,
            "delta": None if None in (cell_a.accuracy, cell_b.accuracy)
            else cell_b.accuracy - cell_a.accuracy,
            "p_value": None,
            "reduction": None,
        })
        if cell_a.accuracy is not None and cell_b.accuracy is not None:
            acc_a.append(cell_a.accuracy)
            acc_b.append(cell_b.accuracy)
    mean_a = sum(acc_a) / len(acc_a)
    mean_b = sum(acc_b) / len(acc_b)
    # pairing axis: class (one report per configuration)
    test = paired_t_test(acc_b, acc_a)
    rows.append({
        "name": "mean", "metric": "accuracy",
        "baseline": mean_a, "treated": mean_b, "delta": mean_b - mean_a,
        "p_value": test.p_value, "reduction": None,
    })
    for metric, attr in (("dp_disparity", "dp_disparity"), ("eo_disparity", "eo_disparity")):
        before = getattr(baseline, attr)
        after = getattr(treated, attr)
        rows.append({
            "name": metric, "metric": "fairness",
            "baseline": before, "treated": after, "delta": after - before,
            "p_value": None,
            "reduction": disparity_reduction(before, after) if before > 0 else None,
        })
    return rows


def _read_run_csv(path: Path) -> tuple[list[str], dict[str, list[float]]]:
    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "run" or len(header) < 2:
            raise DataError(f"{path}: expected header 'run,<metric>,...'")
        columns: dict[str, list[float]] = {name: [] for name in header[1:]}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: ragged row")
            for name, value in zip(header[1:], row[1:]):
                try:
                    columns[name].append(float(value))
                except ValueError:
                    raise DataError(f"{path}:{lineno}: non-numeric {value!r}") from None
    if not next(iter(columns.values())):
        raise DataError(f"{path}: no runs")
    return header[1:], columns


def _compare_run_csvs(path_a: Path, path_b: Path) -> list[dict]:
    names_a, cols_a = _read_run_csv(path_a)
    names_b, cols_b = _read_run_csv(path_b)
    if names_a != names_b:
        raise DataError(f"metric columns differ: {names_a} vs {names_b}")
    rows = []
    for name in names_a:
        a, b = cols_a[name], cols_b[name]
        if len(a) != len(b):
            raise DataError(f"column {name!r}: {len(a)} vs {len(b)} runs")
        mean_a = sum(a) / len(a)
        mean_b = sum(b) / len(b)
        # pairing axis: run
        test = paired_t_test(b, a)
        rows.append({
            "name": name, "metric": "per_run",
            "baseline": mean_a, "treated": mean_b, "delta": mean_b - mean_a,
            "p_value": test.p_value, "reduction": None,
        })
    return rows


def _cmd_compare(args) -> int:
    path_a, path_b = Path(args.baseline), Path(args.treated)
    suffixes = {path_a.suffix, path_b.suffix}
    if suffixes == {".json"}:
        baseline = FairnessReport.from_dict(json.loads(path_a.read_text("utf-8")))
        treated = FairnessReport.from_dict(json.loads(path_b.read_text("utf-8")))
        rows = _compare_reports(baseline, treated)
        reports = {"baseline": baseline, "treated": treated}
    elif suffixes == {".csv"}:
        rows = _compare_run_csvs(path_a, path_b)
        reports = None
    else:
        raise DataError("compare needs two .json reports or two .csv run tables")
    _write_csv(
        Path(args.out),
        ["name", "metric", "baseline", "treated", "delta", "p_value", "reduction"],
        [
            [r["name"], r["metric"], _fmt(r["baseline"]), _fmt(r["treated"]),
             _fmt(r["delta"]), _fmt(r["p_value"]), _fmt(r["reduction"])]
            for r in rows
        ],
    )
    print(f"wrote {args.out}")
    if args.json:
        _write_json(Path(args.json), {
            "rows": rows,
            "run_config": _run_config(
                "compare", {}, {"baseline": path_a, "treated": path_b}
            ),
        })
        print(f"wrote {args.json}")
    if args.plot_data:
        if reports is None:
            raise DataError("--plot-data requires two .json reports")
        _emit_report_figures(reports, Path(args.plot_data))
        print(f"wrote plot data to {args.plot_data}")
    return 0


def _cmd_attribution(args) -> int:
    manifest_path = Path(args.manifest)
    manifest = load_manifest(manifest_path)
    rasters = load_matrix_dir(args.rasters)
    masks = load_matrix_dir(args.masks)
    summary = intersection_mass_summary(manifest, rasters, masks)
    similarity = lighting_similarity_by_class(manifest, rasters)
    inputs = {"manifest": manifest_path}
    payload: dict = {
        "mass_by_intersection": summary,
        "lighting_similarity_by_class": similarity,
    }
    if args.features:
        features_path = Path(args.features)
        ids, attribs = _read_features(features_path)
        by_id = manifest.by_id()
        missing = [i for i in ids if i not in by_id or by_id[i].env is None]
        if missing:
            raise DataError(
                "features reference samples without attributes: "
                + ", ".join(missing[:10])
            )
        env_values = [
            [by_id[i].env.lighting_score, by_id[i].env.bg_complexity] for i in ids
        ]
        result = env_attribution_share(attribs, env_values, args.corr_threshold)
        payload["env_attribution"] = {
            "share": result.share,
            "environmental_features": list(result.environmental_features),
            "skipped_features": list(result.skipped_features),
            "corr_threshold": args.corr_threshold,
            "note": "feature tagged environmental when max |pearson r| against "
                    "any environmental attribute exceeds the threshold",
        }
        inputs["features"] = features_path
    payload["run_config"] = _run_config(
        "attribution", {"corr_threshold": args.corr_threshold}, inputs
    )
    _write_json(Path(args.out), payload)
    print(f"wrote {args.out}")
    if args.csv_out:
        _write_csv(
            Path(args.csv_out),
            ["class", "lighting", "background", "n", "object", "background_mass",
             "transition"],
            [
                [r["class"], r["lighting"], r["background"], r["n"],
                 repr(r["object"]), repr(r["background_mass"]), repr(r["transition"])]
                for r in summary
            ],
        )
        print(f"wrote {args.csv_out}")
    return 0


def _read_features(path: Path) -> tuple[list[str], list[list[float]]]:
    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "id" or len(header) < 2:
            raise DataError(f"{path}: expected header 'id,<feature>,...'")
        ids, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: ragged row")
            ids.append(row[0])
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    if not ids:
        raise DataError(f"{path}: no feature rows")
    return ids, rows


def _cmd_synth(args) -> int:
    if args.random is not None:
        specs = randomized_specs(args.random, args.seed)
    else:
        spec_path = Path(args.spec)
        entries = json.loads(spec_path.read_text("utf-8"))
        if not isinstance(entries, list) or not entries:
            raise DataError(f"{spec_path}: expected a nonempty JSON list of specs")
        specs = [FixtureSpec.from_dict(e) for e in entries]
    manifest, expected_path = write_fixture_set(specs, args.out, split=args.split)
    print(f"wrote {len(manifest.samples)} images, manifest.csv and "
          f"{expected_path.name} to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairaug",
        description="Intersectional fairness auditing and bias-weighted augmentation.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"fairaug {__version__} (rng: {GENERATOR_NAME})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-attrs", help="extract lighting/background attributes")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--canny-sigma", type=float, default=1.4)
    p.add_argument("--canny-kernel", type=int, default=5)
    p.add_argument("--canny-low", type=float, default=50.0)
    p.add_argument("--canny-high", type=float, default=150.0)
    p.add_argument("--resize-first", action="store_true",
                   help="resize to 224x224 before measuring")
    p.add_argument("--on-error", choices=["fail", "skip"], default="fail")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_extract_attrs)

    p = sub.add_parser("stats", help="intersection count/proportion table")
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", choices=["train", "val", "test"], default="train")
    p.add_argument("--out", required=True)
    p.add_argument("--plot-data")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("weights", help="augmentation weights per class")
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", choices=["train", "val", "test"], default="train")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_weights)

    p = sub.add_parser("augment", help="write the weight-adapted doubled dataset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", choices=["train", "val", "test"], default="train")
    p.add_argument("--no-flip", action="store_true",
                   help="disable the horizontal flip stage")
    p.add_argument("--contrast-pivot", choices=["mean", "mid"], default="mean")
    p.add_argument("--uniform-w", type=float, default=None,
                   help="ignore class counts and use this weight everywhere")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("evaluate", help="fairness report from predictions")
    p.add_argument("--manifest", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--split", choices=["train", "val", "test"], default="test")
    p.add_argument("--threshold", type=float, default=0.15)
    p.add_argument("--out", required=True)
    p.add_argument("--csv-dir", help="also write flat CSV tables here")
    p.add_argument("--plot-data", help="also write figure CSVs and PNGs here")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("compare", help="baseline-vs-treated deltas with p-values")
    p.add_argument("baseline", help="report .json or per-run .csv")
    p.add_argument("treated", help="report .json or per-run .csv")
    p.add_argument("--out", required=True)
    p.add_argument("--json", help="also write the comparison as JSON")
    p.add_argument("--plot-data", help="figure CSVs and PNGs (json inputs only)")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("attribution", help="aggregate saliency and attributions")
    p.add_argument("--rasters", required=True)
    p.add_argument("--masks", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--features", help="CSV id,f_1..f_K of attribution magnitudes")
    p.add_argument("--corr-threshold", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.add_argument("--csv-out", help="also write the mass table as CSV")
    p.set_defaults(func=_cmd_attribution)

    p = sub.add_parser("synth", help="generate synthetic fixtures")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--spec", help="JSON list of fixture specs")
    group.add_argument("--random", type=int, help="generate N randomized fixtures")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", choices=["train", "val", "test"], default="train")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

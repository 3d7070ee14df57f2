"""Command-line surface. Every subcommand reads and writes plain files, so
pipeline stages can be scripted independently or driven end to end through
``audit``.

Exit codes: 0 success, 2 validation error, 3 statistical degeneracy in a
requested headline test, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import anonymize, lexicon, predictor, records, report, residuals, stats, synth

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DEGENERATE = 3
EXIT_IO = 4


def _add_dataset_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset", required=True, help="dataset file (JSONL or CSV)")
    parser.add_argument("--format", default="jsonl", choices=["jsonl", "csv"])


def _load_dataset(args) -> records.Dataset:
    dataset, errors = records.load_records(args.dataset, fmt=args.format)
    if errors:
        for err in errors:
            print(f"row {err.row} ({err.record_id or '?'}): {err.reason}", file=sys.stderr)
        print(f"{len(errors)} row(s) rejected", file=sys.stderr)
    if len(dataset) == 0:
        raise records.ValidationError("dataset has no valid records")
    return dataset


def cmd_preprocess(args) -> int:
    dataset = _load_dataset(args)
    gazetteer = anonymize.load_gazetteer(args.gazetteer) if args.gazetteer else None
    span_map = anonymize.load_span_annotations(args.spans) if args.spans else None
    cleaned, errors = anonymize.preprocess_dataset(dataset, span_map=span_map, gazetteer=gazetteer)
    for err in errors:
        print(f"record {err.record_id}: {err.reason}", file=sys.stderr)
    records.write_jsonl(cleaned, args.out)
    print(f"wrote {len(cleaned)} records to {args.out} ({len(errors)} dropped)")
    return EXIT_OK


def cmd_split(args) -> int:
    dataset = _load_dataset(args)
    ratios = tuple(float(x) for x in args.ratios.split(","))
    split = records.stratified_split(dataset, ratios=ratios, seed=args.seed)
    report.write_atomic(args.out, json.dumps(split.to_dict(), indent=2))
    sizes = {p: len(split.ids_in(p)) for p in records.PARTITIONS}
    print(f"wrote split to {args.out}: {sizes}")
    return EXIT_OK


def _load_split(path: str) -> records.SplitAssignment:
    with open(path, encoding="utf-8") as fh:
        return records.SplitAssignment.from_dict(json.load(fh))


def cmd_train(args) -> int:
    dataset = _load_dataset(args)
    split = _load_split(args.split)
    train = [dataset.get(rid) for rid in split.ids_in("train")]
    validation = [dataset.get(rid) for rid in split.ids_in("validation")]
    grid = tuple(float(x) for x in args.lambda_grid.split(",")) if args.lambda_grid else predictor.DEFAULT_LAMBDA_GRID
    model = predictor.fit_records(train, validation, lambda_grid=grid, min_df=args.min_df)
    report.write_atomic(args.out, model.to_json())
    print(f"wrote model to {args.out} (lambda={model.ridge_lambda}, vocab={len(model.vocabulary)})")
    return EXIT_OK


def cmd_predict(args) -> int:
    dataset = _load_dataset(args)
    with open(args.model, encoding="utf-8") as fh:
        model = predictor.LinearTextModel.from_json(fh.read())
    if args.partition != "all":
        if not args.split:
            raise records.ValidationError("--split is required unless --partition all")
        split = _load_split(args.split)
        ids = split.ids_in(args.partition)
    else:
        ids = None
    predictions = predictor.predict_dataset(model, dataset, ids=ids, partition=args.partition)
    predictor.write_predictions(predictions, args.out)
    print(f"wrote {len(predictions)} predictions to {args.out}")
    return EXIT_OK


def cmd_residuals(args) -> int:
    dataset = _load_dataset(args)
    predictions = predictor.load_external_predictions(args.predictions, dataset)
    split = _load_split(args.split) if args.split else None
    deltas = residuals.compute_residuals(dataset, predictions, split=split, partition=args.partition)
    dims = [d.strip() for d in args.group_dims.split(",") if d.strip()]
    grouped = residuals.group_residuals(deltas, dataset, dims)
    result = residuals.compare_all(
        grouped.sets, holm=args.holm_pairwise, n_excluded=grouped.n_excluded
    )
    report.write_atomic(args.out, json.dumps(result.to_dict(), sort_keys=True, indent=2))
    print(f"wrote residual report to {args.out}")
    return EXIT_DEGENERATE if _residuals_degenerate(result) else EXIT_OK


def _residuals_degenerate(result: residuals.ResidualReport) -> bool:
    if result.anova is not None and result.anova.degenerate:
        return True
    return any(p.test.degenerate for p in result.pairwise)


def cmd_lexicon(args) -> int:
    dataset = _load_dataset(args)
    lex = lexicon.load_lexicon(args.lexicon) if args.lexicon else lexicon.default_lexicon()
    results = lexicon.audit_themes(list(dataset), lex, dimension=args.dimension)
    payload = [t.to_dict() for t in results]
    report.write_atomic(args.out, json.dumps(payload, sort_keys=True, indent=2))
    print(f"wrote {len(results)} theme results to {args.out}")
    return EXIT_OK


def cmd_audit(args) -> int:
    if args.config:
        config = report.AuditConfig.from_json_file(args.config)
    else:
        config = report.AuditConfig()
    # CLI flags override config-file fields
    overrides: dict = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.lexicon:
        overrides["lexicon_path"] = args.lexicon
    if args.predictions:
        overrides["predictor_mode"] = "external"
        overrides["predictions_path"] = args.predictions
    if args.group_dims:
        overrides["group_dims"] = tuple(d.strip() for d in args.group_dims.split(","))
    if args.partition:
        overrides["partition"] = args.partition
    if args.alpha_metric:
        overrides["alpha_metric"] = args.alpha_metric
    if args.holm_pairwise:
        overrides["holm_pairwise"] = True
    if args.annotations:
        overrides["annotations_path"] = args.annotations
    if args.format:
        overrides["dataset_format"] = args.format
    if overrides:
        config = report.AuditConfig.from_dict({**config.to_dict(), **overrides})

    audit_report = report.run_audit(args.dataset, config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report.write_atomic(out_dir / "report.json", audit_report.to_json())
    report.write_atomic(out_dir / "report.md", report.render_markdown(audit_report))
    plot_files = report.emit_plot_data(audit_report, out_dir / "plots")
    print(f"wrote report.json, report.md, and {len(plot_files)} histogram files to {out_dir}")
    return EXIT_DEGENERATE if audit_report.headline_degenerate() else EXIT_OK


def cmd_synth(args) -> int:
    if args.config:
        config = synth.SynthConfig.from_json_file(args.config)
    else:
        config = synth.SynthConfig()
    if args.seed is not None:
        config = synth.SynthConfig.from_dict({**config.to_dict(), "seed": args.seed})
    dataset, truth = synth.generate(config)
    records.write_jsonl(dataset, args.out)
    if args.truth_out:
        truth.write_jsonl(args.truth_out)
    print(f"wrote {len(dataset)} synthetic records to {args.out}")
    return EXIT_OK


def cmd_agreement(args) -> int:
    dataset = _load_dataset(args)
    rows = report.load_annotations(args.annotations)
    result = report.agreement(rows, dataset, metric=args.alpha_metric)
    report.write_atomic(args.out, json.dumps(result.to_dict(), sort_keys=True, indent=2))
    alpha_text = "degenerate" if result.alpha.degenerate else f"{result.alpha.value:.4g}"
    print(f"mean accuracy {result.mean_accuracy:.4g}, alpha ({result.metric}) {alpha_text}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evalaudit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="mask names, neutralize pronouns, lowercase")
    _add_dataset_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--gazetteer", help="newline-delimited name terms")
    p.add_argument("--spans", help="JSONL of {id, spans} character offsets")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("split", help="deterministic stratified train/validation/test split")
    _add_dataset_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ratios", default="0.70,0.15,0.15")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="fit the TF-IDF ridge predictor")
    _add_dataset_args(p)
    p.add_argument("--split", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lambda-grid", dest="lambda_grid")
    p.add_argument("--min-df", dest="min_df", type=int, default=predictor.DEFAULT_MIN_DF)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="write a predictions exchange file")
    _add_dataset_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--partition", default="all", choices=["train", "validation", "test", "all"])
    p.add_argument("--split", help="required unless --partition all")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("residuals", help="group residual comparison from a predictions file")
    _add_dataset_args(p)
    p.add_argument("--predictions", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split")
    p.add_argument("--partition", default="all", choices=["train", "validation", "test", "all"])
    p.add_argument("--group-dims", dest="group_dims", default="student")
    p.add_argument("--holm-pairwise", dest="holm_pairwise", action="store_true")
    p.set_defaults(func=cmd_residuals)

    p = sub.add_parser("lexicon", help="theme coding and Fisher/Holm audit")
    _add_dataset_args(p)
    p.add_argument("--lexicon", help="lexicon JSON (defaults to the bundled 16-theme list)")
    p.add_argument("--out", required=True)
    p.add_argument("--dimension", default="student", choices=["student", "assessor"])
    p.set_defaults(func=cmd_lexicon)

    p = sub.add_parser("audit", help="full pipeline: report.json, report.md, plot data")
    _add_dataset_args(p)
    p.add_argument("--config", help="audit config JSON; flags below override it")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--lexicon")
    p.add_argument("--predictions", help="external predictions JSONL (switches predictor mode)")
    p.add_argument("--group-dims", dest="group_dims")
    p.add_argument("--partition", choices=["test", "all"])
    p.add_argument("--alpha-metric", dest="alpha_metric", choices=list(stats.ALPHA_METRICS))
    p.add_argument("--holm-pairwise", dest="holm_pairwise", action="store_true")
    p.add_argument("--annotations")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("synth", help="generate a synthetic corpus with known ground truth")
    p.add_argument("--config", help="SynthConfig JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--truth-out", dest="truth_out")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("agreement", help="annotator accuracy and Krippendorff alpha")
    _add_dataset_args(p)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--alpha-metric", dest="alpha_metric", default="interval",
                   choices=list(stats.ALPHA_METRICS))
    p.set_defaults(func=cmd_agreement)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except records.ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

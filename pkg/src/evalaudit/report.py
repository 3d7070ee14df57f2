"""End-to-end audit orchestration and report rendering.

run_audit composes the full pipeline (preprocess, split, predict, residual
audit, theme audit, optional agreement) into a single AuditReport value;
the JSON and markdown renderings both derive from that one value, and the
JSON form is byte-stable for fixed inputs and seed.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import anonymize, lexicon, predictor, records, residuals, stats

DEFAULT_RATIOS = (0.70, 0.15, 0.15)


@dataclass
class AuditConfig:
    seed: int = 0
    dataset_format: str = "jsonl"
    ratios: tuple[float, float, float] = DEFAULT_RATIOS
    preprocess: bool = True
    gazetteer_path: str | None = None
    spans_path: str | None = None
    predictor_mode: str = "internal"  # internal | external
    predictions_path: str | None = None
    lambda_grid: tuple[float, ...] = predictor.DEFAULT_LAMBDA_GRID
    min_df: int = predictor.DEFAULT_MIN_DF
    partition: str = "test"  # residual-audit partition: test | all
    group_dims: tuple[str, ...] = ("student",)
    holm_pairwise: bool = False
    histogram_bins: int = residuals.DEFAULT_HISTOGRAM_BINS
    lexicon_path: str | None = None
    lexicon_dimension: str = "student"
    annotations_path: str | None = None
    alpha_metric: str = "interval"

    def __post_init__(self):
        if self.predictor_mode not in ("internal", "external"):
            raise records.ValidationError(f"unknown predictor_mode {self.predictor_mode!r}")
        if self.predictor_mode == "external" and not self.predictions_path:
            raise records.ValidationError("external predictor mode needs predictions_path")
        if self.partition not in ("test", "all"):
            raise records.ValidationError(f"partition must be test or all, got {self.partition!r}")
        if self.alpha_metric not in stats.ALPHA_METRICS:
            raise records.ValidationError(f"unknown alpha_metric {self.alpha_metric!r}")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "dataset_format": self.dataset_format,
            "ratios": list(self.ratios),
            "preprocess": self.preprocess,
            "gazetteer_path": self.gazetteer_path,
            "spans_path": self.spans_path,
            "predictor_mode": self.predictor_mode,
            "predictions_path": self.predictions_path,
            "lambda_grid": list(self.lambda_grid),
            "min_df": self.min_df,
            "partition": self.partition,
            "group_dims": list(self.group_dims),
            "holm_pairwise": self.holm_pairwise,
            "histogram_bins": self.histogram_bins,
            "lexicon_path": self.lexicon_path,
            "lexicon_dimension": self.lexicon_dimension,
            "annotations_path": self.annotations_path,
            "alpha_metric": self.alpha_metric,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "AuditConfig":
        kwargs = dict(obj)
        for key in ("ratios", "lambda_grid", "group_dims"):
            if key in kwargs and kwargs[key] is not None:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)

    @classmethod
    def from_json_file(cls, path: str | Path) -> "AuditConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class AgreementReport:
    n_items: int
    raters: list[str]
    per_rater_accuracy: dict[str, float]
    mean_accuracy: float
    alpha: stats.AlphaResult
    metric: str

    def to_dict(self) -> dict:
        return {
            "n_items": self.n_items,
            "raters": self.raters,
            "per_rater_accuracy": self.per_rater_accuracy,
            "mean_accuracy": self.mean_accuracy,
            "alpha": self.alpha.to_dict(),
            "metric": self.metric,
        }


def load_annotations(path: str | Path) -> list[tuple[str, str, int]]:
    """Annotation file: JSONL of {id, rater, rating} with rating in 0..3."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise records.ValidationError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None
            rating = obj.get("rating")
            if not isinstance(rating, int) or isinstance(rating, bool) or rating not in (0, 1, 2, 3):
                raise records.ValidationError(f"{path}:{lineno}: rating out of range: {rating!r}")
            rows.append((str(obj["id"]), str(obj["rater"]), rating))
    return rows


def agreement(
    annotations: Sequence[tuple[str, str, int]],
    dataset: records.Dataset,
    metric: str = "interval",
) -> AgreementReport:
    """Per-rater accuracy against the dataset labels, plus Krippendorff's
    alpha across raters (labels are not treated as a rater)."""
    raters = sorted({rater for _, rater, _ in annotations})
    item_ids = sorted({rid for rid, _, _ in annotations})
    if not item_ids:
        raise records.ValidationError("no annotations supplied")
    cell: dict[tuple[str, str], int] = {}
    for rid, rater, rating in annotations:
        if rid not in dataset:
            raise records.ValidationError(f"annotation references unknown id {rid!r}")
        if (rid, rater) in cell:
            raise records.ValidationError(f"duplicate annotation for (id={rid!r}, rater={rater!r})")
        cell[(rid, rater)] = rating

    per_rater = {}
    for rater in raters:
        rated = [(rid, cell[(rid, rater)]) for rid in item_ids if (rid, rater) in cell]
        hits = sum(1 for rid, rating in rated if rating == dataset.get(rid).global_score)
        per_rater[rater] = hits / len(rated)
    matrix = [[cell.get((rid, rater)) for rater in raters] for rid in item_ids]
    return AgreementReport(
        n_items=len(item_ids),
        raters=raters,
        per_rater_accuracy=per_rater,
        mean_accuracy=sum(per_rater.values()) / len(per_rater),
        alpha=stats.krippendorff_alpha(matrix, metric=metric),
        metric=metric,
    )


@dataclass
class AuditReport:
    config: AuditConfig
    dataset_path: str
    n_row_errors: int
    n_preprocess_errors: int
    summary: records.SummaryReport
    split_sizes: dict[str, int]
    predictor_tag: str
    ridge_lambda: float | None
    rounded_accuracy: float
    residual_report: residuals.ResidualReport
    theme_results: list[lexicon.ThemeResult]
    theme_dimension: str
    agreement_report: AgreementReport | None = None

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "dataset": {
                "path": self.dataset_path,
                "row_errors": self.n_row_errors,
                "preprocess_errors": self.n_preprocess_errors,
                "summary": self.summary.to_dict(),
                "split_sizes": self.split_sizes,
            },
            "predictor": {
                "tag": self.predictor_tag,
                "ridge_lambda": self.ridge_lambda,
                "rounded_accuracy": self.rounded_accuracy,
                "partition": self.config.partition,
            },
            "residuals": self.residual_report.to_dict(),
            "themes": [t.to_dict() for t in self.theme_results],
            "theme_dimension": self.theme_dimension,
            "agreement": self.agreement_report.to_dict() if self.agreement_report else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def headline_degenerate(self) -> bool:
        """True when the omnibus test or any pairwise residual test on the
        requested dimensions came back degenerate."""
        rep = self.residual_report
        if rep.anova is not None and rep.anova.degenerate:
            return True
        return any(p.test.degenerate for p in rep.pairwise)


def _stage(name: str, exc: Exception) -> records.ValidationError:
    return records.ValidationError(f"[{name}] {exc}")


def run_audit(dataset_path: str | Path, config: AuditConfig) -> AuditReport:
    """Compose the full pipeline; any stage error aborts (no partial report).

    The predictor stage only ever sees (comment, score) pairs; group labels
    stay outside the model boundary.
    """
    try:
        dataset, row_errors = records.load_records(dataset_path, fmt=config.dataset_format)
        if len(dataset) == 0:
            raise records.ValidationError("dataset has no valid records")
    except records.ValidationError as exc:
        raise _stage("load", exc) from exc

    n_preprocess_errors = 0
    if config.preprocess:
        try:
            gazetteer = (
                anonymize.load_gazetteer(config.gazetteer_path) if config.gazetteer_path else None
            )
            span_map = (
                anonymize.load_span_annotations(config.spans_path) if config.spans_path else None
            )
            dataset, pre_errors = anonymize.preprocess_dataset(
                dataset, span_map=span_map, gazetteer=gazetteer
            )
            n_preprocess_errors = len(pre_errors)
            if len(dataset) == 0:
                raise records.ValidationError("no records survived preprocessing")
        except records.ValidationError as exc:
            raise _stage("preprocess", exc) from exc

    try:
        summary = records.summarize(dataset)
        split = records.stratified_split(dataset, ratios=config.ratios, seed=config.seed)
        split_sizes = {p: len(split.ids_in(p)) for p in records.PARTITIONS}
    except records.ValidationError as exc:
        raise _stage("split", exc) from exc

    try:
        audited_ids = (
            [r.id for r in dataset] if config.partition == "all" else split.ids_in(config.partition)
        )
        if config.predictor_mode == "internal":
            train = [dataset.get(rid) for rid in split.ids_in("train")]
            validation = [dataset.get(rid) for rid in split.ids_in("validation")]
            model = predictor.fit_records(
                train, validation, lambda_grid=config.lambda_grid, min_df=config.min_df
            )
            predictions = predictor.predict_dataset(
                model, dataset, ids=audited_ids, partition=config.partition
            )
            predictor_tag = "tfidf-ridge"
            ridge_lambda = model.ridge_lambda
        else:
            predictions = predictor.load_external_predictions(config.predictions_path, dataset)
            for rid in audited_ids:
                if rid not in predictions.y_hat:
                    raise records.ValidationError(
                        f"missing prediction for id {rid!r} in partition {config.partition!r}"
                    )
            predictor_tag = predictions.model_tag
            ridge_lambda = None
        accuracy = predictor.rounded_accuracy(
            predictions, [dataset.get(rid) for rid in audited_ids if rid in predictions.y_hat]
        )
    except records.ValidationError as exc:
        raise _stage("predict", exc) from exc

    try:
        deltas = residuals.compute_residuals(
            dataset, predictions, split=split, partition=config.partition
        )
        grouped = residuals.group_residuals(deltas, dataset, list(config.group_dims))
        residual_report = residuals.compare_all(
            grouped.sets,
            holm=config.holm_pairwise,
            histogram_bins=config.histogram_bins,
            n_excluded=grouped.n_excluded,
        )
    except records.ValidationError as exc:
        raise _stage("residuals", exc) from exc

    try:
        lex = (
            lexicon.load_lexicon(config.lexicon_path)
            if config.lexicon_path
            else lexicon.default_lexicon()
        )
        theme_results = lexicon.audit_themes(
            list(dataset), lex, dimension=config.lexicon_dimension
        )
    except records.ValidationError as exc:
        raise _stage("lexicon", exc) from exc

    agreement_report = None
    if config.annotations_path:
        try:
            rows = load_annotations(config.annotations_path)
            agreement_report = agreement(rows, dataset, metric=config.alpha_metric)
        except records.ValidationError as exc:
            raise _stage("agreement", exc) from exc

    return AuditReport(
        config=config,
        dataset_path=str(dataset_path),
        n_row_errors=len(row_errors),
        n_preprocess_errors=n_preprocess_errors,
        summary=summary,
        split_sizes=split_sizes,
        predictor_tag=predictor_tag,
        ridge_lambda=ridge_lambda,
        rounded_accuracy=accuracy,
        residual_report=residual_report,
        theme_results=theme_results,
        theme_dimension=config.lexicon_dimension,
        agreement_report=agreement_report,
    )


def format_p(p: float, degenerate: bool = False, reason: str = "") -> str:
    if degenerate:
        return f"degenerate ({reason})" if reason else "degenerate"
    if p < 1e-4:
        return f"{p:.2e}"
    return f"{p:.3g}"


def format_test(test: stats.TestResult) -> str:
    if test.degenerate:
        return format_p(float("nan"), degenerate=True, reason=test.reason)
    if isinstance(test.df, tuple):
        df_text = f"df=({test.df[0]:.3g}, {test.df[1]:.3g})"
    else:
        df_text = f"df={test.df:.4g}"
    return f"stat={test.statistic:.4g}, {df_text}, p={format_p(test.p_value)}"


def render_markdown(report: AuditReport) -> str:
    """Human rendering; every figure is a formatting of a value present in
    the JSON rendering of the same report."""
    lines = []
    lines.append("# Evaluation audit report")
    lines.append("")
    lines.append("## Dataset")
    s = report.summary
    lines.append(f"- source: `{report.dataset_path}`")
    lines.append(
        f"- records: {s.n_records} "
        f"(load errors: {report.n_row_errors}, preprocess errors: {report.n_preprocess_errors})"
    )
    dist = ", ".join(f"{k}: {v:.3g}" for k, v in sorted(s.score_distribution.items()))
    lines.append(f"- score distribution: {dist}")
    lines.append(
        f"- students M/F/Unspecified: {s.student_counts['M']}/{s.student_counts['F']}"
        f"/{s.student_counts['Unspecified']}"
    )
    lines.append(f"- comment words: mean {s.word_count_mean:.3g}, max {s.word_count_max}")
    sizes = report.split_sizes
    lines.append(
        f"- split (seed {report.config.seed}): train {sizes['train']}, "
        f"validation {sizes['validation']}, test {sizes['test']}"
    )
    lines.append("")
    lines.append("## Predictor")
    lines.append(f"- model: {report.predictor_tag}")
    if report.ridge_lambda is not None:
        lines.append(f"- ridge lambda: {report.ridge_lambda:.3g}")
    lines.append(
        f"- rounded accuracy ({report.config.partition}): {report.rounded_accuracy:.3g}"
    )
    lines.append("")
    lines.append(f"## Residuals ({report.config.partition} partition)")
    rep = report.residual_report
    lines.append("")
    lines.append("| group | n | mean | sd |")
    lines.append("|---|---|---|---|")
    for g in rep.groups:
        lines.append(f"| {g.group} | {g.n} | {g.mean:.4g} | {g.sd:.4g} |")
    lines.append("")
    if rep.n_excluded:
        lines.append(f"- excluded (Unspecified label): {rep.n_excluded}")
    if rep.excluded_groups:
        lines.append(f"- groups too small to test: {', '.join(rep.excluded_groups)}")
    if rep.anova is not None:
        lines.append(f"- ANOVA: {format_test(rep.anova)}")
    lines.append("")
    header = "| group A | group B | mean diff (A-B) | t | df | p |"
    divider = "|---|---|---|---|---|---|"
    if rep.holm_applied:
        header += " Holm p |"
        divider += "---|"
    lines.append(header)
    lines.append(divider)
    for pair in rep.pairwise:
        if pair.test.degenerate:
            cells = [pair.group_a, pair.group_b, f"{pair.mean_difference:.4g}", "-", "-",
                     format_p(float("nan"), True, pair.test.reason)]
        else:
            cells = [
                pair.group_a,
                pair.group_b,
                f"{pair.mean_difference:.4g}",
                f"{pair.test.statistic:.4g}",
                f"{pair.test.df:.4g}",
                format_p(pair.test.p_value),
            ]
        if rep.holm_applied:
            cells.append(format_p(pair.holm_p) if pair.holm_p is not None else "-")
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    lines.append(f"## Themes (dimension: {report.theme_dimension})")
    lines.append("")
    lines.append("| Theme | Example words | % (M) | % (F) | Odds ratio (M/F) | Corrected p |")
    lines.append("|---|---|---|---|---|---|")
    for t in report.theme_results:
        odds_text = f"{t.odds.value:.3g}"
        if t.odds.corrected:
            odds_text += " (0-cell corrected)"
        lines.append(
            f"| {t.theme} | {', '.join(t.example_terms)} | {100 * t.percent_m:.3g}% "
            f"| {100 * t.percent_f:.3g}% | {odds_text} | {format_p(t.p_corrected)} |"
        )
    lines.append("")
    if report.agreement_report is not None:
        agr = report.agreement_report
        lines.append("## Annotator agreement")
        lines.append(f"- items: {agr.n_items}, raters: {len(agr.raters)}")
        for rater in agr.raters:
            lines.append(f"- accuracy ({rater}): {agr.per_rater_accuracy[rater]:.3g}")
        lines.append(f"- mean accuracy: {agr.mean_accuracy:.3g}")
        if agr.alpha.degenerate:
            lines.append(f"- Krippendorff alpha ({agr.metric}): degenerate ({agr.alpha.reason})")
        else:
            lines.append(f"- Krippendorff alpha ({agr.metric}): {agr.alpha.value:.3g}")
        lines.append("")
    return "\n".join(lines)


def write_atomic(path: str | Path, content: str) -> None:
    """Write via temp file + rename so partial output never lands."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_plot_data(report: AuditReport, out_dir: str | Path) -> list[Path]:
    """One histogram JSON per (group, score level):
    {"bins": [...], "counts": [...], "group": ..., "score": ...}."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for group_name, per_score in report.residual_report.histograms.items():
        for score, hist in sorted(per_score.items()):
            payload = {
                "bins": hist.bin_edges,
                "counts": hist.counts,
                "group": group_name,
                "score": score,
                "n": hist.n,
                "n_clipped": hist.n_clipped,
            }
            safe = group_name.replace(",", "__")
            path = out_dir / f"residual_hist_{safe}_score{score}.json"
            write_atomic(path, json.dumps(payload, sort_keys=True, indent=2))
            written.append(path)
    return written

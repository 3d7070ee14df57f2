"""evalaudit: group-bias audits for datasets of free-text evaluations with
integer ratings.

Two complementary signals on any (comment, score, group labels) dataset:

* residual audit: train or ingest a text -> score predictor, then test
  whether prediction residuals (score minus predicted score) differ
  systematically across groups;
* theme audit: code each comment 0/1 against a wildcard theme lexicon and
  compare group occurrence rates with exact tests under family-wise error
  control.

A seeded synthetic-corpus generator with injectable bias calibrates both
audits end to end.
"""

from .records import (
    Dataset,
    EvaluationRecord,
    GroupLabel,
    SplitAssignment,
    ValidationError,
    load_records,
    stratified_split,
    summarize,
    write_jsonl,
)
from .anonymize import mask_entities, neutralize_pronouns, preprocess, preprocess_dataset
from .stats import (
    AlphaResult,
    ContingencyTable2x2,
    TestResult,
    fisher_exact_two_sided,
    holm_bonferroni,
    krippendorff_alpha,
    odds_ratio,
    one_way_anova,
    welch_t_test,
)
from .predictor import (
    LinearTextModel,
    PredictionSet,
    fit,
    fit_records,
    load_external_predictions,
    predict,
    rounded_accuracy,
    tokenize,
)
from .residuals import (
    GroupKey,
    ResidualReport,
    ResidualSet,
    compare_all,
    compare_two,
    compute_residuals,
    group_residuals,
    score_conditional_histograms,
)
from .lexicon import ThemeLexicon, ThemeResult, audit_themes, code_comment, default_lexicon, load_lexicon
from .synth import GroundTruth, SynthConfig, generate, inject_theme, power_experiment
from .report import AuditConfig, AuditReport, agreement, emit_plot_data, render_markdown, run_audit

__version__ = "0.1.0"

"""Synthetic evaluation corpora with known ground truth.

Each record gets a latent quality q ~ U[0, 1]. The integer score
discretizes 3q plus Gaussian noise at thresholds fitted so the target
score distribution is hit exactly in expectation. The comment is assembled
from valence-banded template fragments keyed to q. Two independent bias
knobs reproduce the audit's target scenarios: score_bias shifts the
designated group's scores without touching its text (text says less than
the score), and text_bias shifts its text without touching scores.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .predictor import fit_records, predict_dataset
from .records import (
    Dataset,
    EvaluationRecord,
    GroupLabel,
    Provenance,
    ValidationError,
    stratified_split,
)
from .residuals import PairwiseComparison, compare_two, compute_residuals, group_residuals

PAPER_SCORE_DISTRIBUTION = (0.05, 0.35, 0.45, 0.15)
DEFAULT_NOISE_SD = 0.15
DEFAULT_THEME_PHRASE = (
    "great proactive attitude interacting with patients and their families at the bedside"
)


@dataclass(frozen=True)
class SynthConfig:
    n: int = 3000
    score_distribution: tuple[float, float, float, float] = PAPER_SCORE_DISTRIBUTION
    female_student_share: float = 0.5
    female_assessor_share: float = 0.5
    biased_dimension: str = "student"
    biased_label: str = "F"
    score_bias: float = 0.0  # added to the continuous score of the biased group
    text_bias: float = 0.0  # added to the comment valence of the biased group
    noise_sd: float = DEFAULT_NOISE_SD
    theme_rates: tuple[tuple[str, float], ...] | None = None  # (label, rate) pairs
    theme_phrase: str = DEFAULT_THEME_PHRASE
    seed: int = 0
    id_prefix: str = "synth"

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("n must be >= 1")
        dist = self.score_distribution
        if len(dist) != 4 or any(p < 0 for p in dist):
            raise ValidationError("score_distribution must be 4 non-negative probabilities")
        if sum(dist) == 0:
            raise ValidationError("score distribution has zero mass everywhere")
        if abs(sum(dist) - 1.0) > 1e-9:
            raise ValidationError(f"score_distribution must sum to 1, got {sum(dist)}")
        for name in ("female_student_share", "female_assessor_share"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {v}")
        if self.biased_dimension not in ("student", "assessor"):
            raise ValidationError(f"biased_dimension must be student or assessor, got {self.biased_dimension!r}")
        if self.biased_label not in ("M", "F"):
            raise ValidationError(f"biased_label must be M or F, got {self.biased_label!r}")
        if self.noise_sd < 0:
            raise ValidationError("noise_sd must be >= 0")
        if self.theme_rates is not None:
            for label, rate in self.theme_rates:
                if not 0.0 <= rate <= 1.0:
                    raise ValidationError(f"theme rate for {label!r} must be in [0, 1], got {rate}")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "score_distribution": list(self.score_distribution),
            "female_student_share": self.female_student_share,
            "female_assessor_share": self.female_assessor_share,
            "biased_dimension": self.biased_dimension,
            "biased_label": self.biased_label,
            "score_bias": self.score_bias,
            "text_bias": self.text_bias,
            "noise_sd": self.noise_sd,
            "theme_rates": dict(self.theme_rates) if self.theme_rates is not None else None,
            "theme_phrase": self.theme_phrase,
            "seed": self.seed,
            "id_prefix": self.id_prefix,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "SynthConfig":
        kwargs = dict(obj)
        if "score_distribution" in kwargs:
            kwargs["score_distribution"] = tuple(kwargs["score_distribution"])
        if kwargs.get("theme_rates") is not None:
            kwargs["theme_rates"] = tuple(sorted(kwargs["theme_rates"].items()))
        return cls(**kwargs)

    @classmethod
    def from_json_file(cls, path: str | Path) -> "SynthConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class GroundTruthEntry:
    q: float
    continuous_score: float  # pre-discretization, includes score bias + noise
    score_bias_applied: float
    theme_injected: bool


@dataclass
class GroundTruth:
    entries: dict[str, GroundTruthEntry]

    def write_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rid, e in self.entries.items():
                fh.write(
                    json.dumps(
                        {
                            "id": rid,
                            "q": e.q,
                            "continuous_score": e.continuous_score,
                            "score_bias_applied": e.score_bias_applied,
                            "theme_injected": e.theme_injected,
                        }
                    )
                    + "\n"
                )


def _norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def _norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _smoothed_uniform_cdf(t: float, sd: float) -> float:
    """CDF of 3*U[0,1] + N(0, sd^2)."""
    if sd == 0.0:
        return min(1.0, max(0.0, t / 3.0))

    def g(x: float) -> float:  # antiderivative of the normal CDF
        return x * _norm_cdf(x) + _norm_pdf(x)

    return (sd / 3.0) * (g(t / sd) - g((t - 3.0) / sd))


def fit_score_thresholds(distribution: Sequence[float], sd: float) -> list[float]:
    """Cut points such that discretizing 3q + noise reproduces the target
    distribution exactly in expectation (at zero bias)."""
    cut_probs = []
    acc = 0.0
    for p in distribution[:-1]:
        acc += p
        cut_probs.append(acc)
    thresholds = []
    for target in cut_probs:
        lo, hi = -1.0 - 6.0 * sd, 4.0 + 6.0 * sd
        for _ in range(200):
            mid = (lo + hi) / 2.0
            if _smoothed_uniform_cdf(mid, sd) < target:
                lo = mid
            else:
                hi = mid
        thresholds.append((lo + hi) / 2.0)
    return thresholds


def load_fragment_bands() -> list[list[str]]:
    payload = resources.files("evalaudit.data").joinpath("comment_templates.json").read_text("utf-8")
    return json.loads(payload)["bands"]


def _compose_comment(rng: np.random.Generator, bands: list[list[str]], valence: float) -> str:
    """Draw fragments from the band under ``valence``, interpolating
    continuously between adjacent bands."""
    v = min(1.0, max(0.0, valence))
    position = v * (len(bands) - 1)
    lower = min(int(math.floor(position)), len(bands) - 1)
    frac = position - lower
    n_fragments = int(rng.integers(3, 6))
    parts = []
    for _ in range(n_fragments):
        band = lower
        if lower + 1 < len(bands) and rng.random() < frac:
            band = lower + 1
        parts.append(bands[band][int(rng.integers(0, len(bands[band])))])
    return ". ".join(parts) + "."


def generate(config: SynthConfig) -> tuple[Dataset, GroundTruth]:
    """Produce a corpus plus its ground truth, deterministically per seed."""
    rng = np.random.default_rng(config.seed)
    bands = load_fragment_bands()
    thresholds = fit_score_thresholds(config.score_distribution, config.noise_sd)

    width = len(str(config.n))
    records = []
    truth: dict[str, GroundTruthEntry] = {}
    for i in range(config.n):
        rid = f"{config.id_prefix}-{i:0{width}d}"
        student = GroupLabel.F if rng.random() < config.female_student_share else GroupLabel.M
        assessor = GroupLabel.F if rng.random() < config.female_assessor_share else GroupLabel.M
        group_label = student if config.biased_dimension == "student" else assessor
        biased = group_label.value == config.biased_label

        q = float(rng.random())
        noise = float(rng.normal(0.0, config.noise_sd)) if config.noise_sd > 0 else 0.0
        score_bias = config.score_bias if biased else 0.0
        continuous = 3.0 * q + score_bias + noise
        score = sum(1 for t in thresholds if continuous > t)

        valence = q + (config.text_bias if biased else 0.0)
        comment = _compose_comment(rng, bands, valence)

        records.append(
            EvaluationRecord(
                id=rid,
                comment=comment,
                global_score=score,
                student_gender=student,
                assessor_gender=assessor,
            )
        )
        truth[rid] = GroundTruthEntry(
            q=q,
            continuous_score=continuous,
            score_bias_applied=score_bias,
            theme_injected=False,
        )

    dataset = Dataset(
        records=tuple(records),
        provenance=Provenance(source=f"synth(seed={config.seed})", loaded_at=""),
    )
    if config.theme_rates is not None:
        inject_seed = int(np.random.SeedSequence([config.seed, 1]).generate_state(1)[0])
        dataset, injected = inject_theme(
            dataset,
            rates=dict(config.theme_rates),
            phrase=config.theme_phrase,
            dimension=config.biased_dimension,
            seed=inject_seed,
        )
        for rid in injected:
            entry = truth[rid]
            truth[rid] = GroundTruthEntry(
                q=entry.q,
                continuous_score=entry.continuous_score,
                score_bias_applied=entry.score_bias_applied,
                theme_injected=True,
            )
    return dataset, GroundTruth(entries=truth)


def inject_theme(
    dataset: Dataset,
    rates: dict[str, float],
    phrase: str = DEFAULT_THEME_PHRASE,
    dimension: str = "student",
    seed: int = 0,
) -> tuple[Dataset, list[str]]:
    """Append the theme phrase to each record independently with its group's
    rate. Labels missing from ``rates`` (including Unspecified) get rate 0.
    Returns the new dataset and the injected record ids."""
    for label, rate in rates.items():
        if not 0.0 <= rate <= 1.0:
            raise ValidationError(f"rate for {label!r} must be in [0, 1], got {rate}")
    attr = "student_gender" if dimension == "student" else "assessor_gender"
    rng = np.random.default_rng(seed)
    new_records = []
    injected = []
    for rec in dataset:
        rate = rates.get(getattr(rec, attr).value, 0.0)
        if rate > 0 and rng.random() < rate:
            new_records.append(rec.replace_comment(rec.comment + " " + phrase + "."))
            injected.append(rec.id)
        else:
            new_records.append(rec)
    return Dataset(records=tuple(new_records), provenance=dataset.provenance), injected


def residual_two_group_test(
    dataset: Dataset,
    seed: int,
    dimension: str = "student",
    partition: str = "test",
) -> PairwiseComparison:
    """End-to-end pipeline on one corpus: split, fit the internal predictor,
    predict the audit partition, and Welch-test the two group residual sets.
    Group order is M first, so mean_difference is mean(M) - mean(F)."""
    split = stratified_split(dataset, seed=seed)
    train = [dataset.get(rid) for rid in split.ids_in("train")]
    validation = [dataset.get(rid) for rid in split.ids_in("validation")]
    model = fit_records(train, validation)
    if partition == "all":
        ids = [r.id for r in dataset]
    else:
        ids = split.ids_in(partition)
    predictions = predict_dataset(model, dataset, ids=ids, partition=partition)
    deltas = compute_residuals(dataset, predictions, split=split, partition=partition)
    grouped = group_residuals(deltas, dataset, [dimension])
    by_name = grouped.by_name()
    name_m, name_f = f"{dimension}=M", f"{dimension}=F"
    if name_m not in by_name or name_f not in by_name:
        raise ValidationError(f"corpus lacks one of the {dimension} groups in {partition!r}")
    return compare_two(by_name[name_m], by_name[name_f])


@dataclass
class PowerResult:
    n_seeds: int
    n_rejections: int
    rate: float
    standard_error: float
    alpha: float
    p_values: list[float] = field(default_factory=list)
    mean_differences: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n_seeds": self.n_seeds,
            "n_rejections": self.n_rejections,
            "rate": self.rate,
            "standard_error": self.standard_error,
            "alpha": self.alpha,
            "p_values": self.p_values,
            "mean_differences": self.mean_differences,
        }


def power_experiment(
    config: SynthConfig,
    n_seeds: int,
    alpha: float = 0.05,
    dimension: str | None = None,
) -> PowerResult:
    """Fraction of seeds where the end-to-end residual audit rejects at
    ``alpha``, with the binomial standard error of that rate."""
    if n_seeds < 1:
        raise ValidationError("n_seeds must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must be in (0, 1)")
    dim = dimension if dimension is not None else config.biased_dimension
    child_seeds = np.random.SeedSequence(config.seed).generate_state(n_seeds)
    p_values = []
    diffs = []
    rejections = 0
    for child in child_seeds:
        cfg = replace(config, seed=int(child))
        dataset, _ = generate(cfg)
        comparison = residual_two_group_test(dataset, seed=cfg.seed, dimension=dim)
        p_values.append(comparison.test.p_value)
        diffs.append(comparison.mean_difference)
        if not comparison.test.degenerate and comparison.test.p_value < alpha:
            rejections += 1
    rate = rejections / n_seeds
    se = math.sqrt(rate * (1.0 - rate) / n_seeds)
    return PowerResult(
        n_seeds=n_seeds,
        n_rejections=rejections,
        rate=rate,
        standard_error=se,
        alpha=alpha,
        p_values=p_values,
        mean_differences=diffs,
    )

"""Group residual analysis: per-group residual sets, two-group tests,
omnibus ANOVA with pairwise comparisons, and score-conditional histograms.

The residual for a record is score minus predicted score, computed with no
rounding or clamping. A systematic group difference in residual means is
the bias signal: that group's scores sit above or below what its comments
alone would predict.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

from .predictor import PredictionSet
from .records import Dataset, GroupLabel, SplitAssignment, ValidationError
from .stats import TestResult, holm_bonferroni, one_way_anova, welch_t_test

# Short dimension names accepted by the CLI and config, mapped to fields.
DIMENSIONS = {
    "student": "student_gender",
    "assessor": "assessor_gender",
    "student_gender": "student_gender",
    "assessor_gender": "assessor_gender",
}

HISTOGRAM_RANGE = (-3.0, 3.0)
DEFAULT_HISTOGRAM_BINS = 24


def compute_residuals(
    dataset: Dataset,
    predictions: PredictionSet,
    split: SplitAssignment | None = None,
    partition: str = "all",
) -> dict[str, float]:
    """score - y_hat for every record in the requested partition.

    partition 'all' uses the whole dataset; anything else needs ``split``.
    A missing prediction for an in-partition record is an error.
    """
    if partition == "all":
        wanted = [r.id for r in dataset]
    else:
        if split is None:
            raise ValidationError(f"partition {partition!r} requested without a split assignment")
        members = set(split.ids_in(partition))
        wanted = [r.id for r in dataset if r.id in members]
    out = {}
    for rid in wanted:
        if rid not in predictions.y_hat:
            raise ValidationError(f"missing prediction for id {rid!r} in partition {partition!r}")
        out[rid] = dataset.get(rid).global_score - predictions.y_hat[rid]
    return out


@dataclass(frozen=True)
class GroupKey:
    """Ordered (dimension, label) pairs, e.g. (student=F) or
    (assessor=M, student=F)."""

    dimensions: tuple[tuple[str, str], ...]

    @property
    def name(self) -> str:
        return ",".join(f"{dim}={label}" for dim, label in self.dimensions)

    def __str__(self) -> str:
        return self.name


@dataclass
class ResidualSet:
    group: GroupKey
    residuals: list[float]
    scores: list[int]
    ids: list[str]

    @property
    def n(self) -> int:
        return len(self.residuals)

    def mean(self) -> float:
        return sum(self.residuals) / self.n

    def sd(self) -> float:
        if self.n < 2:
            return float("nan")
        m = self.mean()
        return (sum((x - m) ** 2 for x in self.residuals) / (self.n - 1)) ** 0.5


@dataclass
class GroupedResiduals:
    sets: list[ResidualSet]
    n_excluded: int  # records skipped for an Unspecified label on a dimension

    def by_name(self) -> dict[str, ResidualSet]:
        return {s.group.name: s for s in self.sets}


def group_residuals(
    residuals: Mapping[str, float],
    dataset: Dataset,
    dimensions: Sequence[str],
) -> GroupedResiduals:
    """Partition residuals into one set per present label combination.

    Records carrying an Unspecified label on any requested dimension are
    excluded and counted. Empty combinations are simply absent.
    """
    fields = []
    for dim in dimensions:
        if dim not in DIMENSIONS:
            raise ValidationError(f"unknown grouping dimension {dim!r}")
        fields.append((dim if dim in ("student", "assessor") else dim.removesuffix("_gender"), DIMENSIONS[dim]))

    buckets: dict[GroupKey, ResidualSet] = {}
    n_excluded = 0
    for rid, delta in residuals.items():
        rec = dataset.get(rid)
        labels = []
        skip = False
        for short, attr in fields:
            label: GroupLabel = getattr(rec, attr)
            if label is GroupLabel.UNSPECIFIED:
                skip = True
                break
            labels.append((short, label.value))
        if skip:
            n_excluded += 1
            continue
        key = GroupKey(dimensions=tuple(labels))
        bucket = buckets.get(key)
        if bucket is None:
            bucket = buckets[key] = ResidualSet(group=key, residuals=[], scores=[], ids=[])
        bucket.residuals.append(delta)
        bucket.scores.append(rec.global_score)
        bucket.ids.append(rid)
    ordered = [buckets[k] for k in sorted(buckets, key=lambda k: k.name)]
    return GroupedResiduals(sets=ordered, n_excluded=n_excluded)


@dataclass
class PairwiseComparison:
    group_a: str
    group_b: str
    n_a: int
    n_b: int
    mean_difference: float  # mean(a) - mean(b)
    test: TestResult
    holm_p: float | None = None

    def to_dict(self) -> dict:
        return {
            "group_a": self.group_a,
            "group_b": self.group_b,
            "n_a": self.n_a,
            "n_b": self.n_b,
            "mean_difference": self.mean_difference,
            "test": self.test.to_dict(),
            "holm_p": self.holm_p,
        }


def compare_two(group_a: ResidualSet, group_b: ResidualSet) -> PairwiseComparison:
    """Welch test between two residual sets; mean difference is a minus b."""
    if group_a.n < 2 or group_b.n < 2:
        raise ValidationError("compare_two needs at least 2 residuals per group")
    return PairwiseComparison(
        group_a=group_a.group.name,
        group_b=group_b.group.name,
        n_a=group_a.n,
        n_b=group_b.n,
        mean_difference=group_a.mean() - group_b.mean(),
        test=welch_t_test(group_a.residuals, group_b.residuals),
    )


@dataclass
class Histogram:
    bin_edges: list[float]
    counts: list[int]
    n: int
    n_clipped: int  # residuals outside the fixed range, folded into edge bins

    def to_dict(self) -> dict:
        return {
            "bin_edges": self.bin_edges,
            "counts": self.counts,
            "n": self.n,
            "n_clipped": self.n_clipped,
        }


def _histogram(values: Sequence[float], bins: int) -> Histogram:
    lo, hi = HISTOGRAM_RANGE
    width = (hi - lo) / bins
    counts = [0] * bins
    clipped = 0
    for v in values:
        if v < lo:
            counts[0] += 1
            clipped += 1
        elif v >= hi:
            counts[-1] += 1
            if v > hi:
                clipped += 1
        else:
            counts[int((v - lo) / width)] += 1
    edges = [lo + i * width for i in range(bins + 1)]
    return Histogram(bin_edges=edges, counts=counts, n=len(values), n_clipped=clipped)


def score_conditional_histograms(
    residual_set: ResidualSet, bins: int = DEFAULT_HISTOGRAM_BINS
) -> dict[int, Histogram]:
    """Residual histogram per score level 0-3 over the fixed [-3, 3] range.

    Out-of-range residuals fold into the edge bins and are counted in
    ``n_clipped``.
    """
    if bins < 2:
        raise ValidationError("bins must be >= 2")
    by_score: dict[int, list[float]] = {s: [] for s in (0, 1, 2, 3)}
    for delta, score in zip(residual_set.residuals, residual_set.scores):
        by_score[score].append(delta)
    return {score: _histogram(vals, bins) for score, vals in by_score.items()}


@dataclass
class GroupSummary:
    group: str
    n: int
    mean: float
    sd: float

    def to_dict(self) -> dict:
        return {"group": self.group, "n": self.n, "mean": self.mean, "sd": self.sd}


@dataclass
class ResidualReport:
    groups: list[GroupSummary]
    pairwise: list[PairwiseComparison]
    anova: TestResult | None
    histograms: dict[str, dict[int, Histogram]]  # group name -> score -> histogram
    n_excluded: int
    excluded_groups: list[str] = field(default_factory=list)  # too small for testing
    holm_applied: bool = False

    def to_dict(self) -> dict:
        return {
            "groups": [g.to_dict() for g in self.groups],
            "pairwise": [p.to_dict() for p in self.pairwise],
            "anova": self.anova.to_dict() if self.anova is not None else None,
            "histograms": {
                name: {str(score): h.to_dict() for score, h in per_score.items()}
                for name, per_score in self.histograms.items()
            },
            "n_excluded": self.n_excluded,
            "excluded_groups": self.excluded_groups,
            "holm_applied": self.holm_applied,
        }


def compare_all(
    groups: Sequence[ResidualSet],
    holm: bool = False,
    histogram_bins: int = DEFAULT_HISTOGRAM_BINS,
    n_excluded: int = 0,
) -> ResidualReport:
    """Omnibus ANOVA plus every pairwise Welch comparison.

    Groups with fewer than two residuals are excluded (noted in the
    report); pairwise p-values are uncorrected unless ``holm`` is set.
    ``n_excluded`` carries through the Unspecified-label exclusion count.
    """
    usable = [g for g in groups if g.n >= 2]
    excluded = [g.group.name for g in groups if g.n < 2]
    if len(usable) < 2:
        raise ValidationError("compare_all needs at least 2 groups with n >= 2")

    anova = one_way_anova([g.residuals for g in usable])
    pairwise = [compare_two(a, b) for a, b in combinations(usable, 2)]
    holm_applied = False
    if holm:
        testable = [p for p in pairwise if not p.test.degenerate]
        adjusted = holm_bonferroni([p.test.p_value for p in testable])
        for comp, adj in zip(testable, adjusted):
            comp.holm_p = adj
        holm_applied = True

    return ResidualReport(
        groups=[GroupSummary(g.group.name, g.n, g.mean(), g.sd()) for g in usable],
        pairwise=pairwise,
        anova=anova,
        histograms={
            g.group.name: score_conditional_histograms(g, bins=histogram_bins) for g in usable
        },
        n_excluded=n_excluded,
        excluded_groups=excluded,
        holm_applied=holm_applied,
    )

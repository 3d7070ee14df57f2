"""Loading, validation, summarization, and deterministic splitting of
evaluation datasets.

A dataset is an ordered collection of records, each pairing a free-text
comment with an integer rating (0-3) and group labels for the rated
student and the assessor. Records with an unparseable field are collected
into an error list rather than silently dropped; a duplicate id is fatal.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

SCORE_VALUES = (0, 1, 2, 3)
PARTITIONS = ("train", "validation", "test")

REQUIRED_FIELDS = ("id", "comment", "global_score", "student_gender", "assessor_gender")
OPTIONAL_FIELDS = ("assessor_rank", "institution")


class ValidationError(ValueError):
    """A record, file, or argument violated a documented invariant."""


class GroupLabel(Enum):
    M = "M"
    F = "F"
    UNSPECIFIED = ""

    @classmethod
    def parse(cls, raw) -> "GroupLabel":
        """Map 'M'/'F' to labels; empty string, None, or a missing field
        become UNSPECIFIED. Anything else is a validation error."""
        if raw is None:
            return cls.UNSPECIFIED
        text = str(raw).strip()
        if text == "":
            return cls.UNSPECIFIED
        if text in ("M", "F"):
            return cls(text)
        raise ValidationError(f"unknown group label {raw!r} (expected 'M', 'F', or '')")


@dataclass(frozen=True)
class EvaluationRecord:
    id: str
    comment: str
    global_score: int
    student_gender: GroupLabel
    assessor_gender: GroupLabel
    assessor_rank: str | None = None
    institution: str | None = None
    extras: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if not self.id:
            raise ValidationError("empty id")
        if not self.comment.strip():
            raise ValidationError("comment empty after trimming")
        if self.global_score not in SCORE_VALUES:
            raise ValidationError(f"score out of range: {self.global_score!r}")

    def replace_comment(self, comment: str) -> "EvaluationRecord":
        return EvaluationRecord(
            id=self.id,
            comment=comment,
            global_score=self.global_score,
            student_gender=self.student_gender,
            assessor_gender=self.assessor_gender,
            assessor_rank=self.assessor_rank,
            institution=self.institution,
            extras=self.extras,
        )


@dataclass(frozen=True)
class Provenance:
    source: str
    loaded_at: str  # ISO timestamp; never serialized into reports


@dataclass
class Dataset:
    """Immutable-by-convention ordered record collection.

    Ordering is the file order and is stable under reload of the same file.
    """

    records: tuple[EvaluationRecord, ...]
    provenance: Provenance

    def __post_init__(self):
        self.records = tuple(self.records)
        by_id: dict[str, EvaluationRecord] = {}
        for rec in self.records:
            if rec.id in by_id:
                raise ValidationError(f"duplicate id: {rec.id!r}")
            by_id[rec.id] = rec
        self._by_id = by_id

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def get(self, record_id: str) -> EvaluationRecord:
        return self._by_id[record_id]

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._by_id


@dataclass(frozen=True)
class RowError:
    row: int  # 1-based position in the input file
    record_id: str | None
    reason: str


def _coerce_score(raw) -> int:
    if isinstance(raw, bool):
        raise ValidationError(f"score out of range: {raw!r}")
    if isinstance(raw, int):
        return raw
    if isinstance(raw, float):
        if raw.is_integer():
            return int(raw)
        raise ValidationError(f"score out of range: {raw!r}")
    if isinstance(raw, str):
        text = raw.strip()
        try:
            return int(text)
        except ValueError:
            raise ValidationError(f"score out of range: {raw!r}") from None
    raise ValidationError(f"score out of range: {raw!r}")


def record_from_mapping(row: dict) -> EvaluationRecord:
    """Build a record from one parsed JSONL object or CSV row.

    Unknown keys are preserved as opaque metadata in ``extras``.
    """
    missing = [k for k in ("id", "comment", "global_score") if row.get(k) in (None, "")]
    if missing:
        raise ValidationError(f"missing field(s): {', '.join(missing)}")
    extras = tuple(
        (k, str(v))
        for k, v in row.items()
        if k not in REQUIRED_FIELDS and k not in OPTIONAL_FIELDS
    )
    rank = row.get("assessor_rank")
    inst = row.get("institution")
    return EvaluationRecord(
        id=str(row["id"]),
        comment=str(row["comment"]),
        global_score=_coerce_score(row["global_score"]),
        student_gender=GroupLabel.parse(row.get("student_gender")),
        assessor_gender=GroupLabel.parse(row.get("assessor_gender")),
        assessor_rank=str(rank) if rank not in (None, "") else None,
        institution=str(inst) if inst not in (None, "") else None,
        extras=extras,
    )


def _iter_jsonl(path: Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                yield lineno, None, f"invalid JSON: {exc.msg}"
                continue
            if not isinstance(obj, dict):
                yield lineno, None, "line is not a JSON object"
                continue
            yield lineno, obj, None


def _iter_csv(path: Path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValidationError(f"{path}: empty CSV (no header)")
        try:
            for lineno, row in enumerate(reader, start=2):
                yield lineno, {k: v for k, v in row.items() if k is not None}, None
        except csv.Error as exc:
            raise ValidationError(f"{path}: malformed CSV near line {reader.line_num}: {exc}") from None


def load_records(path: str | Path, fmt: str = "jsonl") -> tuple[Dataset, list[RowError]]:
    """Load a dataset, returning (dataset, row errors).

    Rows failing field validation land in the error list; a duplicate id
    anywhere in the file raises. ``fmt`` is 'jsonl' or 'csv'.
    """
    path = Path(path)
    if fmt == "jsonl":
        rows = _iter_jsonl(path)
    elif fmt == "csv":
        rows = _iter_csv(path)
    else:
        raise ValidationError(f"unknown format: {fmt!r}")

    records: list[EvaluationRecord] = []
    errors: list[RowError] = []
    seen: set[str] = set()
    for lineno, obj, parse_err in rows:
        if parse_err is not None:
            errors.append(RowError(lineno, None, parse_err))
            continue
        rid = obj.get("id")
        try:
            rec = record_from_mapping(obj)
        except ValidationError as exc:
            errors.append(RowError(lineno, str(rid) if rid else None, str(exc)))
            continue
        if rec.id in seen:
            raise ValidationError(f"{path}: duplicate id {rec.id!r} at line {lineno}")
        seen.add(rec.id)
        records.append(rec)

    provenance = Provenance(source=str(path), loaded_at=_dt.datetime.now().isoformat())
    return Dataset(records=tuple(records), provenance=provenance), errors


def write_jsonl(records: Iterable[EvaluationRecord], path: str | Path) -> None:
    """Emit records in the ingest JSONL schema (UNSPECIFIED genders as "")."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            obj = {
                "id": rec.id,
                "comment": rec.comment,
                "global_score": rec.global_score,
                "student_gender": rec.student_gender.value,
                "assessor_gender": rec.assessor_gender.value,
            }
            if rec.assessor_rank is not None:
                obj["assessor_rank"] = rec.assessor_rank
            if rec.institution is not None:
                obj["institution"] = rec.institution
            obj.update(dict(rec.extras))
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


@dataclass
class SummaryReport:
    n_records: int
    score_distribution: dict[int, float]
    student_counts: dict[str, int]
    assessor_counts: dict[str, int]
    word_count_mean: float
    word_count_max: int

    def to_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "score_distribution": {str(k): v for k, v in self.score_distribution.items()},
            "student_counts": self.student_counts,
            "assessor_counts": self.assessor_counts,
            "word_count_mean": self.word_count_mean,
            "word_count_max": self.word_count_max,
        }


def summarize(dataset: Dataset) -> SummaryReport:
    """Record count, per-group counts, score distribution, and comment word
    counts (whitespace tokenization)."""
    if len(dataset) == 0:
        raise ValidationError("cannot summarize an empty dataset")
    score_counts = {s: 0 for s in SCORE_VALUES}
    student = {"M": 0, "F": 0, "Unspecified": 0}
    assessor = {"M": 0, "F": 0, "Unspecified": 0}
    word_counts = []
    for rec in dataset:
        score_counts[rec.global_score] += 1
        student[_label_name(rec.student_gender)] += 1
        assessor[_label_name(rec.assessor_gender)] += 1
        word_counts.append(len(rec.comment.split()))
    n = len(dataset)
    return SummaryReport(
        n_records=n,
        score_distribution={s: score_counts[s] / n for s in SCORE_VALUES},
        student_counts=student,
        assessor_counts=assessor,
        word_count_mean=sum(word_counts) / n,
        word_count_max=max(word_counts),
    )


def _label_name(label: GroupLabel) -> str:
    return "Unspecified" if label is GroupLabel.UNSPECIFIED else label.value


@dataclass
class SplitAssignment:
    assignment: dict[str, str]  # id -> train | validation | test
    seed: int

    def ids_in(self, partition: str) -> list[str]:
        if partition not in PARTITIONS:
            raise ValidationError(f"unknown partition: {partition!r}")
        return [rid for rid, part in self.assignment.items() if part == partition]

    def to_dict(self) -> dict:
        return {"seed": self.seed, "assignment": self.assignment}

    @classmethod
    def from_dict(cls, obj: dict) -> "SplitAssignment":
        return cls(assignment=dict(obj["assignment"]), seed=int(obj["seed"]))


def largest_remainder_sizes(n: int, ratios: Sequence[float]) -> list[int]:
    """Integer partition sizes for ``n`` items under ``ratios``.

    Floors the quotas, then hands leftover items to the partitions with the
    largest fractional remainders; remainder ties go to the earlier
    partition (train before validation before test).
    """
    quotas = [n * r for r in ratios]
    sizes = [math.floor(q) for q in quotas]
    leftover = n - sum(sizes)
    order = sorted(range(len(ratios)), key=lambda i: (-(quotas[i] - sizes[i]), i))
    for i in order[:leftover]:
        sizes[i] += 1
    return sizes


def stratified_split(
    dataset: Dataset,
    ratios: tuple[float, float, float] = (0.70, 0.15, 0.15),
    seed: int = 0,
) -> SplitAssignment:
    """Deterministic stratified split on (global_score, student_gender).

    Within each stratum, ids are shuffled with a seeded RNG and sliced into
    train/validation/test using largest-remainder partition sizes, so each
    stratum lands within one record of the requested proportions.
    """
    if len(ratios) != 3:
        raise ValidationError("ratios must have exactly three entries")
    if any(r < 0 for r in ratios):
        raise ValidationError("ratios must be non-negative")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValidationError(f"ratios must sum to 1, got {sum(ratios)}")

    strata: dict[tuple[int, str], list[str]] = {}
    for rec in dataset:
        key = (rec.global_score, rec.student_gender.value)
        strata.setdefault(key, []).append(rec.id)

    rng = random.Random(seed)
    assignment: dict[str, str] = {}
    for key in sorted(strata):
        ids = list(strata[key])
        rng.shuffle(ids)
        sizes = largest_remainder_sizes(len(ids), ratios)
        offset = 0
        for partition, size in zip(PARTITIONS, sizes):
            for rid in ids[offset : offset + size]:
                assignment[rid] = partition
            offset += size
    # report in dataset order so serialization is stable
    ordered = {rec.id: assignment[rec.id] for rec in dataset}
    return SplitAssignment(assignment=ordered, seed=seed)

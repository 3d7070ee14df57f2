"""Comment preprocessing: entity masking, pronoun neutralization, lowercasing.

Masking accepts either externally supplied character spans (code-point
offsets) or a gazetteer of name terms; each masked span becomes a single
"x" token. Gendered pronouns are rewritten to "they"-forms with a small
positional heuristic for the ambiguous surface forms. Verb agreement after
substitution ("they was") is deliberately left alone.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .records import Dataset, EvaluationRecord, RowError, ValidationError

MASK_TOKEN = "x"

_WS_RE = re.compile(r"\s+")
_TOKEN_RE = re.compile(r"[A-Za-z0-9']+")

# Unambiguous rewrites.
_SIMPLE_PRONOUNS = {
    "he": "they",
    "she": "they",
    "him": "them",
    "hers": "theirs",
    "himself": "themself",
    "herself": "themself",
}

# Tokens that, when following "her"/"his", indicate the pronoun is NOT a
# determiner (object / standalone-possessive reading instead). Common verbs,
# auxiliaries, conjunctions, prepositions. Deliberately small; the
# disambiguation is a documented heuristic, not a parser.
_NON_NOUN_FOLLOWERS = frozenset(
    """
    and or but so because that if when while after before than then
    is was are were be been being am
    do does did has have had will would can could shall should may might must
    to at by for from in of on with as
    """.split()
)

GENDERED_FORMS = frozenset(_SIMPLE_PRONOUNS) | {"his", "her"}


@dataclass(frozen=True)
class MaskPlan:
    """Non-overlapping, sorted replacement spans over one comment."""

    spans: tuple[tuple[int, int], ...]
    source: str  # "gazetteer" | "external_annotation"

    def apply(self, text: str) -> str:
        out = text
        for start, end in reversed(self.spans):
            out = out[:start] + MASK_TOKEN + out[end:]
        return _WS_RE.sub(" ", out).strip()


def _merge_spans(spans: Iterable[tuple[int, int]], text_len: int) -> tuple[tuple[int, int], ...]:
    cleaned = []
    for start, end in spans:
        if start < 0 or end > text_len or start >= end:
            raise ValidationError(f"span ({start}, {end}) out of bounds for text of length {text_len}")
        cleaned.append((int(start), int(end)))
    cleaned.sort()
    merged: list[list[int]] = []
    for start, end in cleaned:
        if merged and start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    return tuple((s, e) for s, e in merged)


def _gazetteer_spans(text: str, terms: Iterable[str]) -> tuple[tuple[int, int], ...]:
    spans = []
    for term in terms:
        term = term.strip()
        if not term:
            continue
        pattern = re.compile(
            r"(?<![A-Za-z0-9'])" + re.escape(term) + r"(?![A-Za-z0-9'])", re.IGNORECASE
        )
        for m in pattern.finditer(text):
            spans.append((m.start(), m.end()))
    return _merge_spans(spans, len(text))


def build_mask_plan(
    text: str,
    spans: Sequence[tuple[int, int]] | None = None,
    gazetteer: Iterable[str] | None = None,
) -> MaskPlan:
    if spans is not None:
        return MaskPlan(spans=_merge_spans(spans, len(text)), source="external_annotation")
    if gazetteer is not None:
        return MaskPlan(spans=_gazetteer_spans(text, gazetteer), source="gazetteer")
    return MaskPlan(spans=(), source="external_annotation")


def mask_entities(
    text: str,
    spans: Sequence[tuple[int, int]] | None = None,
    gazetteer: Iterable[str] | None = None,
) -> str:
    """Replace each name span with a single "x" and normalize whitespace."""
    return build_mask_plan(text, spans=spans, gazetteer=gazetteer).apply(text)


def _her_is_determiner(next_token: str | None) -> bool:
    # Determiner reading needs a following noun-ish token: alphabetic and not
    # on the follower stop-list. End of text / punctuation means object form.
    if next_token is None:
        return False
    return next_token.isalpha() and next_token.lower() not in _NON_NOUN_FOLLOWERS


def neutralize_pronouns(text: str) -> str:
    """Rewrite gendered pronouns to they-forms (whole-token, case-insensitive).

    he/she -> they; him -> them; hers -> theirs; himself/herself -> themself;
    his -> their (determiner) or theirs; her -> their (determiner) or them.
    Replacements are emitted lowercase; surrounding text is untouched.
    """
    matches = list(_TOKEN_RE.finditer(text))
    out = []
    last = 0
    for i, m in enumerate(matches):
        token = m.group(0)
        low = token.lower()
        if low in _SIMPLE_PRONOUNS:
            replacement = _SIMPLE_PRONOUNS[low]
        elif low in ("her", "his"):
            nxt = matches[i + 1].group(0) if i + 1 < len(matches) else None
            if _her_is_determiner(nxt):
                replacement = "their"
            else:
                replacement = "them" if low == "her" else "theirs"
        else:
            continue
        out.append(text[last : m.start()])
        out.append(replacement)
        last = m.end()
    out.append(text[last:])
    return "".join(out)


def preprocess_comment(
    text: str,
    spans: Sequence[tuple[int, int]] | None = None,
    gazetteer: Iterable[str] | None = None,
) -> str:
    return neutralize_pronouns(mask_entities(text, spans=spans, gazetteer=gazetteer)).lower()


def preprocess(
    record: EvaluationRecord,
    spans: Sequence[tuple[int, int]] | None = None,
    gazetteer: Iterable[str] | None = None,
) -> EvaluationRecord:
    """mask -> neutralize -> lowercase, all other fields unchanged.

    Raises if the comment is empty once masked (record invariant).
    """
    cleaned = preprocess_comment(record.comment, spans=spans, gazetteer=gazetteer)
    if not cleaned.strip():
        raise ValidationError(f"record {record.id!r}: comment empty after masking")
    return record.replace_comment(cleaned)


def preprocess_dataset(
    dataset: Dataset,
    span_map: Mapping[str, Sequence[tuple[int, int]]] | None = None,
    gazetteer: Iterable[str] | None = None,
) -> tuple[Dataset, list[RowError]]:
    """Preprocess every record; records invalidated by masking go to the
    error list. Gazetteer terms, if any, apply to all records; spans apply
    per record id."""
    gazetteer = list(gazetteer) if gazetteer is not None else None
    records = []
    errors = []
    for pos, rec in enumerate(dataset, start=1):
        spans = span_map.get(rec.id) if span_map else None
        try:
            records.append(preprocess(rec, spans=spans, gazetteer=gazetteer))
        except ValidationError as exc:
            errors.append(RowError(pos, rec.id, str(exc)))
    return Dataset(records=tuple(records), provenance=dataset.provenance), errors


def load_span_annotations(path: str | Path) -> dict[str, list[tuple[int, int]]]:
    """Span annotation file: JSONL of {id, spans: [[start, end], ...]}."""
    out: dict[str, list[tuple[int, int]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None
            rid = str(obj["id"])
            if rid in out:
                raise ValidationError(f"{path}:{lineno}: duplicate id {rid!r}")
            out[rid] = [(int(s), int(e)) for s, e in obj.get("spans", [])]
    return out


def load_gazetteer(path: str | Path) -> list[str]:
    """Newline-delimited name terms, matched case-insensitively as whole tokens."""
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]

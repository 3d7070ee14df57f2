"""Dataset file handling for the adapter.

Reads the evaluation JSONL schema but extracts only (id, comment, score):
group-label fields never reach the model. Inputs are expected to be
preprocessed (anonymized) text; a gendered-pronoun scan aborts training
when they are not.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

_TOKEN_RE = re.compile(r"[a-z0-9']+")

GENDERED_TOKENS = frozenset(
    ["he", "she", "him", "her", "his", "hers", "himself", "herself"]
)


class AdapterError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledText:
    id: str
    comment: str
    score: float


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def load_labeled_jsonl(path: str | Path) -> list[LabeledText]:
    """Read (id, comment, global_score) rows; everything else is ignored."""
    rows = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise AdapterError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None
            for key in ("id", "comment", "global_score"):
                if key not in obj:
                    raise AdapterError(f"{path}:{lineno}: missing {key!r}")
            rid = str(obj["id"])
            if rid in seen:
                raise AdapterError(f"{path}:{lineno}: duplicate id {rid!r}")
            seen.add(rid)
            rows.append(
                LabeledText(id=rid, comment=str(obj["comment"]), score=float(obj["global_score"]))
            )
    if not rows:
        raise AdapterError(f"{path}: no records")
    return rows


def check_preprocessed(rows: list[LabeledText], source: str) -> None:
    """Abort when gendered pronouns survive in the text: the pipeline's
    contract is that explicit gender markers are removed before training."""
    for row in rows:
        hit = set(tokenize(row.comment)) & GENDERED_TOKENS
        if hit:
            raise AdapterError(
                f"{source}: record {row.id!r} contains gendered pronoun(s) "
                f"{sorted(hit)}; run the anonymization step first"
            )


class WordVocab:
    """Word-level vocabulary for the fresh-tiny encoder."""

    PAD, UNK, CLS = 0, 1, 2
    SPECIALS = ["[PAD]", "[UNK]", "[CLS]"]

    def __init__(self, token_to_id: dict[str, int]):
        self.token_to_id = token_to_id

    def __len__(self) -> int:
        return len(self.token_to_id) + len(self.SPECIALS)

    @classmethod
    def build(cls, rows: list[LabeledText]) -> "WordVocab":
        mapping: dict[str, int] = {}
        next_id = len(cls.SPECIALS)
        for row in rows:
            for token in tokenize(row.comment):
                if token not in mapping:
                    mapping[token] = next_id
                    next_id += 1
        return cls(mapping)

    def encode(self, text: str, max_length: int) -> list[int]:
        ids = [self.CLS]
        for token in tokenize(text)[: max_length - 1]:
            ids.append(self.token_to_id.get(token, self.UNK))
        return ids

    def to_json(self) -> str:
        return json.dumps(self.token_to_id, sort_keys=True)

    @classmethod
    def from_json(cls, payload: str) -> "WordVocab":
        return cls({str(k): int(v) for k, v in json.loads(payload).items()})

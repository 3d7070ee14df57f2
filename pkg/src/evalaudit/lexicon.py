"""Dictionary-based theme coding and group comparison.

A lexicon is an ordered list of themes, each a list of term patterns. A
pattern is a literal token, a prefix stem ending in '*', or a multi-word
phrase matched as a consecutive token sequence. Each comment is coded 0/1
per theme; group disparities are tested with the two-sided Fisher exact
test and Holm-corrected across all themes in the lexicon.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

from .predictor import tokenize
from .records import EvaluationRecord, GroupLabel, ValidationError
from .stats import (
    ContingencyTable2x2,
    OddsRatioResult,
    fisher_exact_two_sided,
    holm_bonferroni,
    odds_ratio,
)
from .residuals import DIMENSIONS


@dataclass(frozen=True)
class TermPattern:
    """One dictionary entry, pre-split into token components.

    Every component is a literal except possibly the last, which may be a
    prefix stem ('arrogan*' matches arrogant, arrogance, ...).
    """

    raw: str
    literals: tuple[str, ...]
    prefix: str | None  # final component stem, None when the last is literal

    @classmethod
    def parse(cls, raw: str) -> "TermPattern":
        text = raw.strip().lower()
        if not text:
            raise ValidationError("empty term pattern")
        if "*" in text[:-1] or text == "*":
            raise ValidationError(f"malformed pattern {raw!r}: '*' only allowed in final position")
        parts = text.split()
        if text.endswith("*"):
            stem = parts[-1][:-1]
            if not stem:
                raise ValidationError(f"malformed pattern {raw!r}: empty stem")
            return cls(raw=raw.strip(), literals=tuple(parts[:-1]), prefix=stem)
        return cls(raw=raw.strip(), literals=tuple(parts), prefix=None)

    def matches_at(self, tokens: Sequence[str], start: int) -> bool:
        n_literal = len(self.literals)
        end = start + n_literal + (1 if self.prefix is not None else 0)
        if end > len(tokens):
            return False
        for offset, literal in enumerate(self.literals):
            if tokens[start + offset] != literal:
                return False
        if self.prefix is not None:
            return tokens[start + n_literal].startswith(self.prefix)
        return True


@dataclass(frozen=True)
class Theme:
    name: str
    patterns: tuple[TermPattern, ...]
    # Pre-split views of ``patterns`` so coding a corpus stays cheap:
    literals: frozenset[str] = frozenset()  # single-token literal entries
    prefixes: tuple[str, ...] = ()  # single-token stems
    sequences: tuple[TermPattern, ...] = ()  # multi-word entries

    @classmethod
    def build(cls, name: str, patterns: tuple[TermPattern, ...]) -> "Theme":
        literals = frozenset(
            p.literals[0] for p in patterns if p.prefix is None and len(p.literals) == 1
        )
        prefixes = tuple(p.prefix for p in patterns if p.prefix is not None and not p.literals)
        sequences = tuple(
            p for p in patterns if len(p.literals) + (p.prefix is not None) > 1
        )
        return cls(
            name=name, patterns=patterns, literals=literals, prefixes=prefixes, sequences=sequences
        )


@dataclass(frozen=True)
class ThemeLexicon:
    themes: tuple[Theme, ...]

    def __len__(self) -> int:
        return len(self.themes)

    def names(self) -> list[str]:
        return [t.name for t in self.themes]


def parse_lexicon(obj: dict) -> ThemeLexicon:
    if "themes" not in obj or not isinstance(obj["themes"], list):
        raise ValidationError("lexicon file must contain a 'themes' list")
    themes = []
    seen = set()
    for entry in obj["themes"]:
        name = entry.get("name")
        if not name:
            raise ValidationError("theme missing a name")
        if name in seen:
            raise ValidationError(f"duplicate theme {name!r}")
        seen.add(name)
        terms = entry.get("terms", [])
        if not terms:
            raise ValidationError(f"theme {name!r} has an empty term list")
        themes.append(Theme.build(name, tuple(TermPattern.parse(t) for t in terms)))
    return ThemeLexicon(themes=tuple(themes))


def load_lexicon(path: str | Path) -> ThemeLexicon:
    """Lexicon file: JSON {"themes": [{"name": ..., "terms": [...]}, ...]}.

    Theme order in the file defines report row order.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON: {exc.msg}") from None
    return parse_lexicon(obj)


def default_lexicon() -> ThemeLexicon:
    """The bundled 16-theme lexicon (published example words only).

    Full dictionary results require the user's own licensed word lists via
    load_lexicon.
    """
    payload = resources.files("evalaudit.data").joinpath("default_lexicon.json").read_text("utf-8")
    return parse_lexicon(json.loads(payload))


def _as_theme(patterns: Theme | Sequence[TermPattern]) -> Theme:
    if isinstance(patterns, Theme):
        return patterns
    return Theme.build("", tuple(patterns))


def code_tokens(tokens: Sequence[str], patterns: Theme | Sequence[TermPattern]) -> int:
    theme = _as_theme(patterns)
    token_set = set(tokens)
    if token_set & theme.literals:
        return 1
    for stem in theme.prefixes:
        for token in token_set:
            if token.startswith(stem):
                return 1
    for pattern in theme.sequences:
        for start in range(len(tokens)):
            if pattern.matches_at(tokens, start):
                return 1
    return 0


def code_comment(comment: str, patterns: Theme | Sequence[TermPattern]) -> int:
    """1 iff any token (sequence) of the preprocessed comment matches any
    pattern; literal patterns match whole tokens only."""
    return code_tokens(tokenize(comment), patterns)


def _two_group_split(
    records: Sequence[EvaluationRecord], dimension: str
) -> tuple[list[EvaluationRecord], list[EvaluationRecord]]:
    if dimension not in DIMENSIONS:
        raise ValidationError(f"unknown grouping dimension {dimension!r}")
    attr = DIMENSIONS[dimension]
    groups = {GroupLabel.M: [], GroupLabel.F: []}
    for rec in records:
        label = getattr(rec, attr)
        if label is not GroupLabel.UNSPECIFIED:
            groups[label].append(rec)
    present = [lab for lab, members in groups.items() if members]
    if len(present) != 2:
        raise ValidationError(
            f"theme audit needs exactly two groups on {dimension!r}, found {len(present)}"
        )
    return groups[GroupLabel.M], groups[GroupLabel.F]


def theme_contingency(
    records: Sequence[EvaluationRecord],
    patterns: Sequence[TermPattern],
    dimension: str = "student",
) -> ContingencyTable2x2:
    """2x2 counts with rows (M, F) and columns (theme present, absent)."""
    m_group, f_group = _two_group_split(records, dimension)
    m_with = sum(code_comment(r.comment, patterns) for r in m_group)
    f_with = sum(code_comment(r.comment, patterns) for r in f_group)
    return ContingencyTable2x2(
        a=m_with, b=len(m_group) - m_with, c=f_with, d=len(f_group) - f_with
    )


@dataclass
class ThemeResult:
    theme: str
    example_terms: list[str]
    table: ContingencyTable2x2
    percent_m: float
    percent_f: float
    odds: OddsRatioResult
    p_raw: float
    p_corrected: float

    def to_dict(self) -> dict:
        return {
            "theme": self.theme,
            "example_terms": self.example_terms,
            "counts": {
                "m_with": self.table.a,
                "m_without": self.table.b,
                "f_with": self.table.c,
                "f_without": self.table.d,
            },
            "percent_m": self.percent_m,
            "percent_f": self.percent_f,
            "odds_ratio": self.odds.to_dict(),
            "p_raw": self.p_raw,
            "p_corrected": self.p_corrected,
        }


def audit_themes(
    records: Sequence[EvaluationRecord],
    lexicon: ThemeLexicon,
    dimension: str = "student",
) -> list[ThemeResult]:
    """Per theme: contingency, odds ratio, Fisher raw p; Holm across all
    themes in the lexicon (m = theme count). Results in lexicon order.
    """
    m_group, f_group = _two_group_split(records, dimension)
    m_tokens = [tokenize(r.comment) for r in m_group]
    f_tokens = [tokenize(r.comment) for r in f_group]

    tables = []
    for theme in lexicon.themes:
        m_with = sum(code_tokens(toks, theme) for toks in m_tokens)
        f_with = sum(code_tokens(toks, theme) for toks in f_tokens)
        tables.append(
            ContingencyTable2x2(
                a=m_with, b=len(m_tokens) - m_with, c=f_with, d=len(f_tokens) - f_with
            )
        )
    raw_ps = [fisher_exact_two_sided(t) for t in tables]
    corrected = holm_bonferroni(raw_ps)

    results = []
    for theme, table, p_raw, p_adj in zip(lexicon.themes, tables, raw_ps, corrected):
        results.append(
            ThemeResult(
                theme=theme.name,
                example_terms=[p.raw for p in theme.patterns[:3]],
                table=table,
                percent_m=table.a / (table.a + table.b),
                percent_f=table.c / (table.c + table.d),
                odds=odds_ratio(table),
                p_raw=p_raw,
                p_corrected=p_adj,
            )
        )
    return results

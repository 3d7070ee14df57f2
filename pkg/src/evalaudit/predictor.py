"""Text -> score prediction: an in-process TF-IDF ridge regressor plus
ingestion of externally produced prediction files.

The regressor is a stand-in; the audit only ever sees a PredictionSet, so
any model that writes the predictions exchange format (JSONL of
{"id": ..., "y_hat": ...}) can take its place.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .records import Dataset, EvaluationRecord, ValidationError

_TOKEN_RE = re.compile(r"[a-z0-9']+")

DEFAULT_LAMBDA_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)
DEFAULT_MIN_DF = 2


def tokenize(text: str) -> list[str]:
    """Lowercase maximal runs of letters, digits, and apostrophes."""
    return _TOKEN_RE.findall(text.lower())


def round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def clamp_score(s: int, lo: int = 0, hi: int = 3) -> int:
    return max(lo, min(hi, s))


@dataclass
class PredictionSet:
    """id -> real-valued predicted score; the predictor/audit boundary."""

    y_hat: dict[str, float]
    model_tag: str
    partition: str = "all"

    def __len__(self) -> int:
        return len(self.y_hat)


@dataclass
class LinearTextModel:
    """Ridge regression over smoothed-idf TF-IDF counts.

    Feature for term t in a document: count(t) * idf(t), where
    idf = ln((1 + N) / (1 + df)) + 1 with N the training document count.
    The intercept is unpenalized.
    """

    vocabulary: dict[str, int]  # term -> column index
    document_frequency: list[int]  # per column
    n_train_docs: int
    weights: list[float]
    intercept: float
    ridge_lambda: float
    min_df: int = DEFAULT_MIN_DF
    validation_fallback: bool = False  # lambda chosen without validation data

    def idf(self, column: int) -> float:
        return math.log((1 + self.n_train_docs) / (1 + self.document_frequency[column])) + 1.0

    def to_json(self) -> str:
        terms = [""] * len(self.vocabulary)
        for term, col in self.vocabulary.items():
            terms[col] = term
        return json.dumps(
            {
                "model": "tfidf-ridge",
                "terms": terms,
                "document_frequency": self.document_frequency,
                "n_train_docs": self.n_train_docs,
                "weights": self.weights,
                "intercept": self.intercept,
                "ridge_lambda": self.ridge_lambda,
                "min_df": self.min_df,
                "validation_fallback": self.validation_fallback,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, payload: str) -> "LinearTextModel":
        obj = json.loads(payload)
        if obj.get("model") != "tfidf-ridge":
            raise ValidationError(f"not a tfidf-ridge model file (model={obj.get('model')!r})")
        return cls(
            vocabulary={t: i for i, t in enumerate(obj["terms"])},
            document_frequency=[int(x) for x in obj["document_frequency"]],
            n_train_docs=int(obj["n_train_docs"]),
            weights=[float(w) for w in obj["weights"]],
            intercept=float(obj["intercept"]),
            ridge_lambda=float(obj["ridge_lambda"]),
            min_df=int(obj.get("min_df", DEFAULT_MIN_DF)),
            validation_fallback=bool(obj.get("validation_fallback", False)),
        )


def _build_vocabulary(token_lists: Sequence[list[str]], min_df: int) -> tuple[dict[str, int], list[int]]:
    df_counts: dict[str, int] = {}
    for tokens in token_lists:
        for term in set(tokens):
            df_counts[term] = df_counts.get(term, 0) + 1
    terms = sorted(t for t, df in df_counts.items() if df >= min_df)
    vocabulary = {t: i for i, t in enumerate(terms)}
    return vocabulary, [df_counts[t] for t in terms]


def _feature_matrix(
    token_lists: Sequence[list[str]],
    vocabulary: dict[str, int],
    idf: np.ndarray,
) -> np.ndarray:
    X = np.zeros((len(token_lists), len(vocabulary)))
    for row, tokens in enumerate(token_lists):
        for term in tokens:
            col = vocabulary.get(term)
            if col is not None:
                X[row, col] += 1.0
    return X * idf


def _ridge_solve(X: np.ndarray, y: np.ndarray, lam: float) -> tuple[np.ndarray, float]:
    """Ridge with unpenalized intercept via centering.

    Uses the primal normal equations when features <= samples, the dual
    (kernel) form otherwise; both give the same solution.
    """
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    Xc = X - x_mean
    yc = y - y_mean
    n, v = Xc.shape
    if v <= n:
        A = Xc.T @ Xc + lam * np.eye(v)
        w = np.linalg.solve(A, Xc.T @ yc)
    else:
        G = Xc @ Xc.T + lam * np.eye(n)
        w = Xc.T @ np.linalg.solve(G, yc)
    intercept = y_mean - float(x_mean @ w)
    return w, intercept


def fit(
    train: Sequence[tuple[str, float]],
    validation: Sequence[tuple[str, float]],
    lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
    min_df: int = DEFAULT_MIN_DF,
) -> LinearTextModel:
    """Fit the ridge model, selecting lambda by validation MSE.

    ``train`` and ``validation`` are (comment, score) pairs; group labels
    never enter here. With an empty validation set the smallest lambda is
    used and the model carries a fallback flag. Deterministic in its inputs.
    """
    if not train:
        raise ValidationError("fit needs a non-empty training set")
    if not lambda_grid or any(l <= 0 for l in lambda_grid):
        raise ValidationError("lambda_grid must be non-empty with positive entries")
    if min_df < 1:
        raise ValidationError("min_df must be >= 1")

    train_tokens = [tokenize(text) for text, _ in train]
    y_train = np.array([float(score) for _, score in train])
    vocabulary, df_list = _build_vocabulary(train_tokens, min_df)
    n_docs = len(train_tokens)
    idf = np.array(
        [math.log((1 + n_docs) / (1 + df)) + 1.0 for df in df_list]
    ) if vocabulary else np.zeros(0)
    X_train = _feature_matrix(train_tokens, vocabulary, idf)

    grid = sorted(set(float(l) for l in lambda_grid))
    fallback = len(validation) == 0
    if fallback:
        best_lambda = grid[0]
        w, intercept = _ridge_solve(X_train, y_train, best_lambda)
    else:
        val_tokens = [tokenize(text) for text, _ in validation]
        y_val = np.array([float(score) for _, score in validation])
        X_val = _feature_matrix(val_tokens, vocabulary, idf)
        best = None
        for lam in grid:
            w_lam, b_lam = _ridge_solve(X_train, y_train, lam)
            mse = float(np.mean((X_val @ w_lam + b_lam - y_val) ** 2))
            if best is None or mse < best[0]:
                best = (mse, lam, w_lam, b_lam)
        _, best_lambda, w, intercept = best

    return LinearTextModel(
        vocabulary=vocabulary,
        document_frequency=df_list,
        n_train_docs=n_docs,
        weights=[float(x) for x in w],
        intercept=float(intercept),
        ridge_lambda=best_lambda,
        min_df=min_df,
        validation_fallback=fallback,
    )


def fit_records(
    train: Sequence[EvaluationRecord],
    validation: Sequence[EvaluationRecord],
    lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
    min_df: int = DEFAULT_MIN_DF,
) -> LinearTextModel:
    """Record-level wrapper that strips everything except comment and score."""
    return fit(
        [(r.comment, float(r.global_score)) for r in train],
        [(r.comment, float(r.global_score)) for r in validation],
        lambda_grid=lambda_grid,
        min_df=min_df,
    )


def predict(model: LinearTextModel, comment: str) -> float:
    """Intercept plus the weighted TF-IDF dot product; never clamped."""
    total = model.intercept
    counts: dict[int, int] = {}
    for term in tokenize(comment):
        col = model.vocabulary.get(term)
        if col is not None:
            counts[col] = counts.get(col, 0) + 1
    for col, count in counts.items():
        total += count * model.idf(col) * model.weights[col]
    return float(total)


def predict_dataset(
    model: LinearTextModel,
    dataset: Dataset,
    ids: Sequence[str] | None = None,
    model_tag: str = "tfidf-ridge",
    partition: str = "all",
) -> PredictionSet:
    wanted = list(ids) if ids is not None else [r.id for r in dataset]
    return PredictionSet(
        y_hat={rid: predict(model, dataset.get(rid).comment) for rid in wanted},
        model_tag=model_tag,
        partition=partition,
    )


def load_external_predictions(path: str | Path, dataset: Dataset) -> PredictionSet:
    """Read a predictions exchange file (JSONL of {"id", "y_hat"}).

    Every id must exist in the dataset; duplicates and non-finite values
    are fatal.
    """
    y_hat: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict) or "id" not in obj or "y_hat" not in obj:
                raise ValidationError(f"{path}:{lineno}: expected object with id and y_hat")
            rid = str(obj["id"])
            if rid not in dataset:
                raise ValidationError(f"{path}:{lineno}: unknown id {rid!r}")
            if rid in y_hat:
                raise ValidationError(f"{path}:{lineno}: duplicate id {rid!r}")
            value = obj["y_hat"]
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                raise ValidationError(f"{path}:{lineno}: non-finite y_hat for id {rid!r}: {value!r}")
            y_hat[rid] = float(value)
    return PredictionSet(y_hat=y_hat, model_tag=f"external:{Path(path).name}", partition="all")


def write_predictions(predictions: PredictionSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rid, value in predictions.y_hat.items():
            fh.write(json.dumps({"id": rid, "y_hat": value}) + "\n")


def rounded_accuracy(predictions: PredictionSet, records: Sequence[EvaluationRecord]) -> float:
    """Fraction of records whose prediction, rounded half away from zero and
    clamped to [0, 3], equals the integer score."""
    overlap = [r for r in records if r.id in predictions.y_hat]
    if not overlap:
        raise ValidationError("no overlap between predictions and records")
    hits = sum(
        1
        for r in overlap
        if clamp_score(round_half_away(predictions.y_hat[r.id])) == r.global_score
    )
    return hits / len(overlap)

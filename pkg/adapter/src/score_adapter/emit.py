"""Prediction emission in the exchange format the audit toolkit ingests:
JSONL of {"id": <string>, "y_hat": <finite number>}, one line per input
record, ids bijective with the input file. The writer validates its own
output before anything lands on disk."""

from __future__ import annotations

import json
import math
from pathlib import Path

from .data import AdapterError, load_labeled_jsonl
from .finetune import TrainedModel


def validate_prediction_rows(rows: list[dict], expected_ids: list[str]) -> None:
    """Schema violations here are bugs, not warnings: fail before writing."""
    if len(rows) != len(expected_ids):
        raise AdapterError(
            f"prediction count {len(rows)} != input count {len(expected_ids)}"
        )
    seen = set()
    for row in rows:
        if set(row) != {"id", "y_hat"}:
            raise AdapterError(f"bad prediction keys: {sorted(row)}")
        if not isinstance(row["id"], str) or not row["id"]:
            raise AdapterError(f"bad prediction id: {row['id']!r}")
        if row["id"] in seen:
            raise AdapterError(f"duplicate prediction id: {row['id']!r}")
        seen.add(row["id"])
        value = row["y_hat"]
        if not isinstance(value, float) or not math.isfinite(value):
            raise AdapterError(f"non-finite y_hat for {row['id']!r}: {value!r}")
    if seen != set(expected_ids):
        missing = sorted(set(expected_ids) - seen)[:5]
        raise AdapterError(f"prediction ids not bijective with input; missing {missing}")


def emit_predictions(
    trained: TrainedModel, dataset_path: str | Path, out_path: str | Path
) -> int:
    """Predict every record in the dataset file and write the exchange file.

    Returns the number of predictions written.
    """
    rows = load_labeled_jsonl(dataset_path)
    predictions = trained.predict([r.comment for r in rows])
    payload = [
        {"id": r.id, "y_hat": float(p)} for r, p in zip(rows, predictions)
    ]
    validate_prediction_rows(payload, [r.id for r in rows])
    out_path = Path(out_path)
    with open(out_path, "w", encoding="utf-8") as fh:
        for row in payload:
            fh.write(json.dumps(row) + "\n")
    return len(payload)

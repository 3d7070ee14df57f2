import json

import pytest

from score_adapter.config import FRESH_TINY, FinetuneConfig
from score_adapter.data import (
    AdapterError,
    LabeledText,
    WordVocab,
    check_preprocessed,
    load_labeled_jsonl,
)
from score_adapter.emit import emit_predictions, validate_prediction_rows
from score_adapter.finetune import finetune, load_trained

TINY = FinetuneConfig(
    encoder=FRESH_TINY, learning_rate=1e-3, max_epochs=4, seed=7, max_length=64
)


def write_rows(path, rows):
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def labeled(rid, comment, score):
    return {"id": rid, "comment": comment, "global_score": score,
            "student_gender": "M", "assessor_gender": "F"}


class TestData:
    def test_load_ignores_group_fields(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_rows(path, [labeled("a", "steady work", 2)])
        rows = load_labeled_jsonl(path)
        assert rows == [LabeledText(id="a", comment="steady work", score=2.0)]

    def test_missing_key_rejected(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_rows(path, [{"id": "a", "comment": "x"}])
        with pytest.raises(AdapterError, match="global_score"):
            load_labeled_jsonl(path)

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_rows(path, [labeled("a", "x y", 1), labeled("a", "z w", 2)])
        with pytest.raises(AdapterError, match="duplicate"):
            load_labeled_jsonl(path)

    def test_gendered_pronoun_check(self):
        rows = [LabeledText("a", "she performed well", 2.0)]
        with pytest.raises(AdapterError, match="gendered pronoun"):
            check_preprocessed(rows, "train.jsonl")

    def test_clean_text_passes_check(self):
        check_preprocessed([LabeledText("a", "they performed well", 2.0)], "x")

    def test_vocab_roundtrip(self):
        rows = [LabeledText("a", "solid focused shift", 2.0)]
        vocab = WordVocab.build(rows)
        clone = WordVocab.from_json(vocab.to_json())
        assert clone.encode("solid unknown shift", 16) == vocab.encode("solid unknown shift", 16)
        assert clone.encode("solid shift", 16)[0] == WordVocab.CLS


@pytest.fixture(scope="module")
def toy_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy")
    train = root / "train.jsonl"
    val = root / "val.jsonl"
    texts = [
        ("excellent thorough outstanding work", 3),
        ("poor disorganized unsafe shift", 0),
        ("adequate routine acceptable work", 2),
        ("weak rushed incomplete charting", 1),
    ]
    rows = []
    for i in range(10):
        for j, (text, score) in enumerate(texts):
            rows.append(labeled(f"t{i}-{j}", text, score))
    write_rows(train, rows)
    write_rows(val, [labeled(f"v{j}", text, score) for j, (text, score) in enumerate(texts)])
    return train, val


class TestFinetune:
    def test_constant_labels_collapse(self, tmp_path):
        train = tmp_path / "train.jsonl"
        val = tmp_path / "val.jsonl"
        write_rows(train, [labeled(f"r{i}", f"steady dependable work {i % 5}", 2) for i in range(40)])
        write_rows(val, [labeled(f"v{i}", "steady dependable work", 2) for i in range(8)])
        config = FinetuneConfig(
            encoder=FRESH_TINY, learning_rate=2e-3, max_epochs=12, seed=3, max_length=32
        )
        trained = finetune(train, val, config)
        preds = trained.predict(["steady dependable work", "steady work 3"])
        assert all(abs(p - 2.0) < 0.3 for p in preds)

    def test_same_seed_identical_logs(self, toy_files):
        train, val = toy_files
        first = finetune(train, val, TINY)
        second = finetune(train, val, TINY)
        assert [(e.train_loss, e.validation_loss) for e in first.log] == [
            (e.train_loss, e.validation_loss) for e in second.log
        ]

    def test_early_stopping_bounds_epochs(self, toy_files):
        train, val = toy_files
        config = FinetuneConfig(
            encoder=FRESH_TINY, learning_rate=1e-3, max_epochs=20, patience=2, seed=1,
            max_length=64,
        )
        trained = finetune(train, val, config)
        assert len(trained.log) <= 20
        assert trained.best_epoch <= trained.log[-1].epoch

    def test_gendered_input_aborts(self, tmp_path, toy_files):
        train, _ = toy_files
        bad_val = tmp_path / "bad_val.jsonl"
        write_rows(bad_val, [labeled("v0", "he was excellent", 3)])
        with pytest.raises(AdapterError, match="gendered pronoun"):
            finetune(train, bad_val, TINY)

    def test_save_load_roundtrip(self, toy_files, tmp_path):
        train, val = toy_files
        trained = finetune(train, val, TINY)
        trained.save(tmp_path / "model")
        reloaded = load_trained(tmp_path / "model")
        probe = ["excellent thorough outstanding work", "poor disorganized unsafe shift"]
        assert reloaded.predict(probe) == pytest.approx(trained.predict(probe), abs=1e-6)


class TestEmit:
    def test_emit_bijective(self, toy_files, tmp_path):
        train, val = toy_files
        trained = finetune(train, val, TINY)
        out = tmp_path / "preds.jsonl"
        count = emit_predictions(trained, val, out)
        lines = [json.loads(l) for l in out.read_text().splitlines()]
        assert count == len(lines) == 4
        assert {l["id"] for l in lines} == {"v0", "v1", "v2", "v3"}
        assert all(isinstance(l["y_hat"], float) for l in lines)

    def test_validator_catches_duplicates(self):
        rows = [{"id": "a", "y_hat": 1.0}, {"id": "a", "y_hat": 2.0}]
        with pytest.raises(AdapterError, match="duplicate"):
            validate_prediction_rows(rows, ["a", "b"])

    def test_validator_catches_nonfinite(self):
        rows = [{"id": "a", "y_hat": float("nan")}]
        with pytest.raises(AdapterError, match="non-finite"):
            validate_prediction_rows(rows, ["a"])

    def test_validator_catches_missing_ids(self):
        rows = [{"id": "a", "y_hat": 1.0}]
        with pytest.raises(AdapterError, match="count"):
            validate_prediction_rows(rows, ["a", "b"])

    def test_validator_catches_extra_keys(self):
        rows = [{"id": "a", "y_hat": 1.0, "extra": 1}]
        with pytest.raises(AdapterError, match="keys"):
            validate_prediction_rows(rows, ["a"])

"""Training loop: mean-squared-error regression against integer scores with
early stopping on validation loss, plus model save/load."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import torch
from torch import nn

from .config import FRESH_TINY, FinetuneConfig
from .data import AdapterError, WordVocab, check_preprocessed, load_labeled_jsonl
from .model import ScoreRegressor, TextEncoder, build_model


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    validation_loss: float


@dataclass
class TrainedModel:
    model: ScoreRegressor
    encoder: TextEncoder
    config: FinetuneConfig
    log: list[EpochLog]
    best_epoch: int

    def predict(self, comments: list[str], batch_size: int = 64) -> list[float]:
        self.model.eval()
        out: list[float] = []
        with torch.no_grad():
            for start in range(0, len(comments), batch_size):
                ids, mask = self.encoder.batch(comments[start : start + batch_size])
                out.extend(float(v) for v in self.model(ids, mask))
        return out

    def save(self, out_dir: str | Path) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "adapter_config.json").write_text(
            json.dumps(self.config.to_dict(), indent=2), encoding="utf-8"
        )
        torch.save(self.model.state_dict(), out_dir / "weights.pt")
        if self.encoder.vocab is not None:
            (out_dir / "vocab.json").write_text(self.encoder.vocab.to_json(), encoding="utf-8")
        (out_dir / "training_log.json").write_text(
            json.dumps(
                {
                    "best_epoch": self.best_epoch,
                    "epochs": [
                        {
                            "epoch": e.epoch,
                            "train_loss": e.train_loss,
                            "validation_loss": e.validation_loss,
                        }
                        for e in self.log
                    ],
                },
                indent=2,
            ),
            encoding="utf-8",
        )


def load_trained(model_dir: str | Path) -> TrainedModel:
    model_dir = Path(model_dir)
    config = FinetuneConfig.from_json_file(model_dir / "adapter_config.json")
    vocab = None
    if config.encoder == FRESH_TINY:
        vocab = WordVocab.from_json((model_dir / "vocab.json").read_text(encoding="utf-8"))
    model, encoder = build_model(config, vocab=vocab)
    state = torch.load(model_dir / "weights.pt", map_location="cpu", weights_only=True)
    model.load_state_dict(state)
    model.eval()
    log_payload = json.loads((model_dir / "training_log.json").read_text(encoding="utf-8"))
    log = [
        EpochLog(e["epoch"], e["train_loss"], e["validation_loss"])
        for e in log_payload["epochs"]
    ]
    return TrainedModel(
        model=model, encoder=encoder, config=config, log=log, best_epoch=log_payload["best_epoch"]
    )


def _epoch_loss(model, encoder, rows, batch_size) -> float:
    loss_fn = nn.MSELoss(reduction="sum")
    model.eval()
    total = 0.0
    with torch.no_grad():
        for start in range(0, len(rows), batch_size):
            chunk = rows[start : start + batch_size]
            ids, mask = encoder.batch([r.comment for r in chunk])
            target = torch.tensor([r.score for r in chunk])
            total += float(loss_fn(model(ids, mask), target))
    return total / len(rows)


def finetune(
    train_path: str | Path,
    validation_path: str | Path,
    config: FinetuneConfig,
) -> TrainedModel:
    """Train the regression head (and encoder) on (comment -> score) pairs.

    Early stopping: keep the epoch with the lowest validation loss; stop
    after ``config.patience`` epochs without improvement. Deterministic per
    seed on fixed hardware (best effort within framework guarantees).
    """
    train_rows = load_labeled_jsonl(train_path)
    validation_rows = load_labeled_jsonl(validation_path)
    check_preprocessed(train_rows, str(train_path))
    check_preprocessed(validation_rows, str(validation_path))

    torch.manual_seed(config.seed)
    vocab = WordVocab.build(train_rows) if config.encoder == FRESH_TINY else None
    model, encoder = build_model(config, vocab=vocab)
    optimizer = torch.optim.AdamW(
        model.parameters(),
        lr=config.learning_rate,
        eps=config.adam_epsilon,
        weight_decay=config.weight_decay,
    )
    loss_fn = nn.MSELoss()
    shuffler = torch.Generator().manual_seed(config.seed)

    log: list[EpochLog] = []
    best_state = None
    best_loss = float("inf")
    best_epoch = -1
    since_best = 0
    for epoch in range(config.max_epochs):
        model.train()
        order = torch.randperm(len(train_rows), generator=shuffler)
        running = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = [train_rows[int(i)] for i in order[start : start + config.batch_size]]
            ids, mask = encoder.batch([r.comment for r in batch])
            target = torch.tensor([r.score for r in batch])
            optimizer.zero_grad()
            loss = loss_fn(model(ids, mask), target)
            loss.backward()
            optimizer.step()
            running += loss.item() * len(batch)
        train_loss = running / len(train_rows)
        val_loss = _epoch_loss(model, encoder, validation_rows, config.batch_size)
        log.append(EpochLog(epoch=epoch, train_loss=train_loss, validation_loss=val_loss))

        if val_loss < best_loss:
            best_loss = val_loss
            best_epoch = epoch
            best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                break

    if best_state is None:
        raise AdapterError("training produced no finite validation loss")
    model.load_state_dict(best_state)
    model.eval()
    return TrainedModel(
        model=model, encoder=encoder, config=config, log=log, best_epoch=best_epoch
    )

"""Fine-tuning configuration.

The optimizer defaults (learning rate 5e-6, epsilon 1e-8, weight decay
1e-10, batch size 32) are the published settings this adapter reproduces;
early stopping watches validation loss with a documented default patience.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

DEFAULT_ENCODER = "bert-base-uncased"

# Sentinel encoder name: build a small randomly initialized encoder with a
# vocabulary taken from the training file. No download required; useful for
# offline runs and CI.
FRESH_TINY = "fresh-tiny"


@dataclass(frozen=True)
class FinetuneConfig:
    encoder: str = DEFAULT_ENCODER
    learning_rate: float = 5e-6
    adam_epsilon: float = 1e-8
    weight_decay: float = 1e-10
    batch_size: int = 32
    patience: int = 3
    max_epochs: int = 20
    max_length: int = 128
    seed: int = 0
    # fresh-tiny architecture knobs; ignored for pretrained encoders
    tiny_hidden_size: int = 64
    tiny_layers: int = 2
    tiny_heads: int = 2

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")

    def to_dict(self) -> dict:
        return {
            "encoder": self.encoder,
            "learning_rate": self.learning_rate,
            "adam_epsilon": self.adam_epsilon,
            "weight_decay": self.weight_decay,
            "batch_size": self.batch_size,
            "patience": self.patience,
            "max_epochs": self.max_epochs,
            "max_length": self.max_length,
            "seed": self.seed,
            "tiny_hidden_size": self.tiny_hidden_size,
            "tiny_layers": self.tiny_layers,
            "tiny_heads": self.tiny_heads,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "FinetuneConfig":
        return cls(**obj)

    @classmethod
    def from_json_file(cls, path: str | Path) -> "FinetuneConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

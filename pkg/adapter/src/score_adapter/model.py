"""Encoder + linear regression head, with batch encoding for both the
pretrained and the fresh-tiny paths. The head reads the pooled
classification token."""

from __future__ import annotations

import torch
from torch import nn
from transformers import AutoModel, AutoTokenizer, BertConfig, BertModel

from .config import FRESH_TINY, FinetuneConfig
from .data import WordVocab


class ScoreRegressor(nn.Module):
    def __init__(self, encoder: nn.Module, hidden_size: int):
        super().__init__()
        self.encoder = encoder
        self.head = nn.Linear(hidden_size, 1)

    def forward(self, input_ids: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        out = self.encoder(input_ids=input_ids, attention_mask=attention_mask)
        pooled = out.pooler_output
        if pooled is None:
            pooled = out.last_hidden_state[:, 0]
        return self.head(pooled).squeeze(-1)


class TextEncoder:
    """Turns raw comment strings into model tensors.

    Only ever sees text: the assertion guards the no-group-labels contract
    at the feature boundary.
    """

    def __init__(self, config: FinetuneConfig, vocab: WordVocab | None, tokenizer=None):
        self.max_length = config.max_length
        self.vocab = vocab
        self.tokenizer = tokenizer

    def batch(self, comments: list[str]) -> tuple[torch.Tensor, torch.Tensor]:
        assert all(isinstance(c, str) for c in comments), "encoder accepts text only"
        if self.tokenizer is not None:
            enc = self.tokenizer(
                comments,
                truncation=True,
                max_length=self.max_length,
                padding=True,
                return_tensors="pt",
            )
            return enc["input_ids"], enc["attention_mask"]
        encoded = [self.vocab.encode(c, self.max_length) for c in comments]
        width = max(len(e) for e in encoded)
        ids = torch.full((len(encoded), width), WordVocab.PAD, dtype=torch.long)
        mask = torch.zeros((len(encoded), width), dtype=torch.long)
        for i, row in enumerate(encoded):
            ids[i, : len(row)] = torch.tensor(row, dtype=torch.long)
            mask[i, : len(row)] = 1
        return ids, mask


def build_model(
    config: FinetuneConfig, vocab: WordVocab | None = None
) -> tuple[ScoreRegressor, TextEncoder]:
    """Pretrained encoder by name, or a randomly initialized small encoder
    over the supplied word vocabulary for the fresh-tiny mode."""
    if config.encoder == FRESH_TINY:
        if vocab is None:
            raise ValueError("fresh-tiny encoder needs a vocabulary")
        bert_config = BertConfig(
            vocab_size=len(vocab),
            hidden_size=config.tiny_hidden_size,
            num_hidden_layers=config.tiny_layers,
            num_attention_heads=config.tiny_heads,
            intermediate_size=config.tiny_hidden_size * 2,
            max_position_embeddings=config.max_length,
            pad_token_id=WordVocab.PAD,
        )
        encoder = BertModel(bert_config)
        model = ScoreRegressor(encoder, config.tiny_hidden_size)
        return model, TextEncoder(config, vocab=vocab)
    tokenizer = AutoTokenizer.from_pretrained(config.encoder)
    encoder = AutoModel.from_pretrained(config.encoder)
    model = ScoreRegressor(encoder, encoder.config.hidden_size)
    return model, TextEncoder(config, vocab=None, tokenizer=tokenizer)

"""Encoder, classifier, and trained-model artifact handling.

The encoder is a small transformer (embeddings + learned positions + a
couple of self-attention layers + mean pooling) trained from random
initialization at desk scale. ``EncoderConfig.init_checkpoint`` optionally
names a state-dict file to warm-start from; which checkpoint to use is a
configuration concern, never a code constant.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from typing import Sequence

import torch
import torch.nn as nn
import torch.nn.functional as F

from .tokenizer import PAD_ID, encode

ARCHITECTURE_FIELDS = ("vocab_buckets", "dim", "heads", "layers", "ffn", "max_len")


@dataclass(frozen=True)
class EncoderConfig:
    vocab_buckets: int = 2048
    dim: int = 64
    heads: int = 4
    layers: int = 2
    ffn: int = 128
    max_len: int = 256
    dropout: float = 0.1
    init_checkpoint: str | None = None

    def architecture(self) -> tuple:
        return tuple(getattr(self, name) for name in ARCHITECTURE_FIELDS)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EncoderConfig":
        return cls(**data)


class TextEncoder(nn.Module):
    def __init__(self, config: EncoderConfig) -> None:
        super().__init__()
        self.config = config
        self.embedding = nn.Embedding(config.vocab_buckets, config.dim, padding_idx=PAD_ID)
        self.positions = nn.Embedding(config.max_len, config.dim)
        layer = nn.TransformerEncoderLayer(
            d_model=config.dim,
            nhead=config.heads,
            dim_feedforward=config.ffn,
            dropout=config.dropout,
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, config.layers, enable_nested_tensor=False)
        if config.init_checkpoint:
            state = torch.load(config.init_checkpoint, map_location="cpu")
            self.load_state_dict(state)

    def forward(self, ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        pos = torch.arange(ids.shape[1], device=ids.device).unsqueeze(0)
        hidden = self.embedding(ids) + self.positions(pos)
        hidden = self.encoder(hidden, src_key_padding_mask=~mask)
        lengths = mask.sum(dim=1, keepdim=True).clamp(min=1)
        return (hidden * mask.unsqueeze(-1)).sum(dim=1) / lengths


class SequenceClassifier(nn.Module):
    def __init__(self, config: EncoderConfig, num_labels: int) -> None:
        super().__init__()
        self.encoder = TextEncoder(config)
        self.head = nn.Linear(config.dim, num_labels)

    def forward(self, ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        return self.head(self.encoder(ids, mask))


def batch_encode(
    texts: Sequence[str], config: EncoderConfig
) -> tuple[torch.Tensor, torch.Tensor]:
    """Pad a batch of texts into (ids, attention mask) tensors."""
    encoded = [encode(t, config.vocab_buckets, config.max_len) for t in texts]
    width = max(len(ids) for ids in encoded)
    ids = torch.full((len(encoded), width), PAD_ID, dtype=torch.long)
    mask = torch.zeros((len(encoded), width), dtype=torch.bool)
    for row, token_ids in enumerate(encoded):
        ids[row, : len(token_ids)] = torch.tensor(token_ids, dtype=torch.long)
        mask[row, : len(token_ids)] = True
    return ids, mask


@dataclass
class TrainedModel:
    """One variable's classifier plus everything needed to reload and serve it."""

    variable: str
    labels: list[str]
    module: SequenceClassifier
    config: EncoderConfig
    artifact_path: str | None = None
    metadata: dict = field(default_factory=dict)

    @torch.no_grad()
    def predict(self, texts: Sequence[str]) -> list[tuple[str, float]]:
        """(label, score) per text; score is the max softmax probability."""
        self.module.eval()
        ids, mask = batch_encode(texts, self.config)
        probabilities = F.softmax(self.module(ids, mask), dim=1)
        scores, indices = probabilities.max(dim=1)
        return [
            (self.labels[int(i)], float(s)) for i, s in zip(indices.tolist(), scores.tolist())
        ]

    @torch.no_grad()
    def logits(self, texts: Sequence[str]) -> torch.Tensor:
        self.module.eval()
        ids, mask = batch_encode(texts, self.config)
        return self.module(ids, mask)

    def save(self, directory: str) -> None:
        os.makedirs(directory, exist_ok=True)
        torch.save(self.module.state_dict(), os.path.join(directory, "model.pt"))
        manifest = {
            "variable": self.variable,
            "labels": self.labels,
            "encoder": self.config.to_dict(),
            "metadata": self.metadata,
        }
        with open(os.path.join(directory, "config.json"), "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
        self.artifact_path = directory

    @classmethod
    def load(cls, directory: str) -> "TrainedModel":
        with open(os.path.join(directory, "config.json"), encoding="utf-8") as f:
            manifest = json.load(f)
        # The artifact carries the real weights; never re-read a warm-start file.
        config = EncoderConfig.from_dict({**manifest["encoder"], "init_checkpoint": None})
        module = SequenceClassifier(config, num_labels=len(manifest["labels"]))
        state = torch.load(os.path.join(directory, "model.pt"), map_location="cpu")
        module.load_state_dict(state)
        module.eval()
        return cls(
            variable=manifest["variable"],
            labels=manifest["labels"],
            module=module,
            config=config,
            artifact_path=directory,
            metadata=manifest.get("metadata", {}),
        )

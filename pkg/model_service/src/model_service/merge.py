"""Classifier-head weight merging across per-variable models.

Builds one model with a shared encoder and a single wide head spanning the
union of every source model's label space: each source's head weights are
block-copied into its slice at a per-variable offset. The shared encoder's
weights are copied from the first source, so slice decoding is exactly the
donor's classifier and an approximation for the rest — which is the point
of the experiment: measuring what that approximation costs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import IncompatibleEncoders
from .model import EncoderConfig, TextEncoder, TrainedModel, batch_encode


@dataclass
class MergedModel:
    encoder: TextEncoder
    head: nn.Linear
    config: EncoderConfig
    offsets: dict[str, tuple[int, int]]  # variable -> (start, label count)
    labels: dict[str, list[str]]
    donor_variable: str

    @property
    def union_width(self) -> int:
        return self.head.out_features

    @torch.no_grad()
    def union_logits(self, texts: Sequence[str]) -> torch.Tensor:
        self.encoder.eval()
        ids, mask = batch_encode(texts, self.config)
        return self.head(self.encoder(ids, mask))

    @torch.no_grad()
    def predict(self, variable: str, texts: Sequence[str]) -> list[tuple[str, float]]:
        """Decode one variable's slice of the union head."""
        start, count = self.offsets[variable]
        logits = self.union_logits(texts)[:, start : start + count]
        probabilities = F.softmax(logits, dim=1)
        scores, indices = probabilities.max(dim=1)
        names = self.labels[variable]
        return [(names[int(i)], float(s)) for i, s in zip(indices.tolist(), scores.tolist())]


def merge_heads(models: Sequence[TrainedModel]) -> MergedModel:
    """Combine per-variable classifiers into one union-head model.

    All sources must share an encoder architecture; the merged encoder's
    weights come from the first source. Raises
    :class:`IncompatibleEncoders` on architecture mismatch.
    """
    if not models:
        raise ValueError("need at least one model to merge")
    architecture = models[0].config.architecture()
    for model in models[1:]:
        if model.config.architecture() != architecture:
            raise IncompatibleEncoders(
                f"{model.variable} encoder {model.config.architecture()} != {architecture}"
            )

    config = models[0].config
    encoder = TextEncoder(EncoderConfig.from_dict({**config.to_dict(),
                                                   "init_checkpoint": None}))
    encoder.load_state_dict(models[0].module.encoder.state_dict())
    encoder.eval()

    total = sum(len(model.labels) for model in models)
    head = nn.Linear(config.dim, total)
    offsets: dict[str, tuple[int, int]] = {}
    labels: dict[str, list[str]] = {}
    cursor = 0
    with torch.no_grad():
        for model in models:
            count = len(model.labels)
            head.weight[cursor : cursor + count] = model.module.head.weight
            head.bias[cursor : cursor + count] = model.module.head.bias
            offsets[model.variable] = (cursor, count)
            labels[model.variable] = list(model.labels)
            cursor += count
    head.eval()
    return MergedModel(
        encoder=encoder,
        head=head,
        config=config,
        offsets=offsets,
        labels=labels,
        donor_variable=models[0].variable,
    )

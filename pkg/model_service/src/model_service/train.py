"""Fine-tuning loop over exported training files.

Input is the training export format: JSON Lines of {"text", "label"}, one
file per variable, where the label is that variable's composite-label
string. The label list is the sorted distinct labels in the file; a fresh
classifier head is trained on top of the encoder and evaluated on a seeded
20% hold-out.

Desk-scale defaults (small encoder, 3 epochs) train in seconds on CPU.
Real corpus-scale runs use the same entry point with a bigger encoder
config and more epochs; they take hours and are not CI-gated.
"""

from __future__ import annotations

import json
import random
import time

import torch
import torch.nn as nn

from .errors import DegenerateLabels
from .model import EncoderConfig, SequenceClassifier, TrainedModel, batch_encode


def load_training_file(path: str) -> list[tuple[str, str]]:
    examples: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if "text" not in record or "label" not in record:
                raise ValueError(f"{path}:{line_no}: expected keys text and label")
            examples.append((record["text"], record["label"]))
    return examples


def _batches(examples: list[tuple[str, str]], label_index: dict[str, int],
             config: EncoderConfig, batch_size: int):
    for start in range(0, len(examples), batch_size):
        chunk = examples[start : start + batch_size]
        ids, mask = batch_encode([text for text, _ in chunk], config)
        targets = torch.tensor([label_index[label] for _, label in chunk], dtype=torch.long)
        yield ids, mask, targets


@torch.no_grad()
def _accuracy(module: SequenceClassifier, examples, label_index, config, batch_size) -> float:
    if not examples:
        return 0.0
    module.eval()
    correct = 0
    for ids, mask, targets in _batches(examples, label_index, config, batch_size):
        correct += int((module(ids, mask).argmax(dim=1) == targets).sum())
    return correct / len(examples)


def train(
    variable: str,
    training_file: str,
    epochs: int = 3,
    seed: int = 0,
    encoder: EncoderConfig | None = None,
    learning_rate: float = 1e-3,
    batch_size: int = 16,
    holdout_ratio: float = 0.2,
) -> TrainedModel:
    """Train one variable's classifier; returns the in-memory trained model.

    Deterministic for a given seed within torch's CPU determinism limits.
    Raises :class:`DegenerateLabels` when the file holds fewer than two
    distinct labels.
    """
    config = encoder or EncoderConfig()
    examples = load_training_file(training_file)
    labels = sorted({label for _, label in examples})
    if len(labels) < 2:
        raise DegenerateLabels(f"{training_file} holds {len(labels)} distinct label(s)")
    label_index = {label: i for i, label in enumerate(labels)}

    rng = random.Random(seed)
    shuffled = list(examples)
    rng.shuffle(shuffled)
    holdout_size = int(holdout_ratio * len(shuffled) + 0.5)
    holdout, training = shuffled[:holdout_size], shuffled[holdout_size:]

    torch.manual_seed(seed)
    module = SequenceClassifier(config, num_labels=len(labels))
    optimizer = torch.optim.AdamW(module.parameters(), lr=learning_rate)
    loss_fn = nn.CrossEntropyLoss()

    started = time.perf_counter()
    for epoch in range(epochs):
        module.train()
        epoch_order = list(training)
        rng.shuffle(epoch_order)
        for ids, mask, targets in _batches(epoch_order, label_index, config, batch_size):
            optimizer.zero_grad()
            loss = loss_fn(module(ids, mask), targets)
            loss.backward()
            optimizer.step()

    holdout_accuracy = _accuracy(module, holdout, label_index, config, batch_size)
    metadata = {
        "epochs": epochs,
        "seed": seed,
        "split_ratio": 1.0 - holdout_ratio,
        "examples": len(examples),
        "holdout_examples": len(holdout),
        "holdout_accuracy": holdout_accuracy,
        "train_seconds": round(time.perf_counter() - started, 3),
    }
    return TrainedModel(
        variable=variable, labels=labels, module=module, config=config, metadata=metadata
    )

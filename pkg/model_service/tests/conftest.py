from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from model_service.model import EncoderConfig

# Small-but-real encoder for CI; a production config would scale these up.
TEST_ENCODER = EncoderConfig(vocab_buckets=2048, dim=64, heads=4, layers=2,
                             ffn=128, max_len=64, dropout=0.1)

FILLER = ["apply", "today", "team", "benefits", "shift", "weekly", "duties",
          "office", "great", "support", "customers", "tools"]

KEYWORD_LABELS = {
    "salarygrade": '{"is_salaried":true}',
    "hourlygrade": '{"is_hourly":true}',
    "commissiongrade": '{"has_commission":true}',
}


def synthetic_examples(n: int, seed: int, keywords: dict[str, str] | None = None):
    """Keyword-separable examples: the planted keyword determines the label."""
    keywords = keywords or KEYWORD_LABELS
    rng = random.Random(seed)
    keys = sorted(keywords)
    examples = []
    for i in range(n):
        keyword = keys[i % len(keys)]
        words = rng.choices(FILLER, k=rng.randrange(5, 12))
        words.insert(rng.randrange(len(words) + 1), keyword)
        examples.append({"text": " ".join(words), "label": keywords[keyword]})
    rng.shuffle(examples)
    return examples


def write_training_file(path: Path, examples) -> Path:
    path.write_text("".join(json.dumps(e) + "\n" for e in examples))
    return path


@pytest.fixture
def synthetic_file(tmp_path: Path) -> Path:
    return write_training_file(tmp_path / "train.jsonl", synthetic_examples(200, seed=7))

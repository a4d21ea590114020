"""Hash-bucket tokenizer: vocabulary-free, deterministic across platforms.

Tokens are lowercased word runs hashed into a fixed bucket range. Bucket 0
is padding and bucket 1 marks empty input, so the embedding table needs no
vocabulary file and any text tokenizes the same way on every machine.
"""

from __future__ import annotations

import hashlib
import re

PAD_ID = 0
EMPTY_ID = 1
_RESERVED = 2

_WORD_RE = re.compile(r"\w+")


def encode(text: str, vocab_buckets: int, max_len: int) -> list[int]:
    ids = []
    for token in _WORD_RE.findall(text.lower())[:max_len]:
        digest = hashlib.md5(token.encode("utf-8")).digest()
        bucket = int.from_bytes(digest[:4], "little") % (vocab_buckets - _RESERVED)
        ids.append(_RESERVED + bucket)
    return ids or [EMPTY_ID]

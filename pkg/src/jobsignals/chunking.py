"""Token-bounded sliding-window chunking with fixed overlap.

Tokens are maximal runs of word characters, with punctuation split off as
separate tokens.  Chunks are cut on a fixed stride over the token sequence
and carry the original substring (spacing preserved), so retrieval output
can be re-assembled into readable context.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import EmptyText, InvalidOverlap

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


@dataclass(frozen=True)
class Chunk:
    posting_id: str
    index: int
    text: str
    token_span: tuple[int, int]  # half-open [start_token, end_token)


def tokenize_spans(text: str) -> list[tuple[int, int]]:
    """Character spans of each token, in order."""
    return [m.span() for m in _TOKEN_RE.finditer(text)]


def chunk_text(
    text: str, max_tokens: int, overlap: int, posting_id: str = ""
) -> list[Chunk]:
    """Split ``text`` into overlapping windows of at most ``max_tokens`` tokens.

    Window starts advance by ``max_tokens - overlap``; the final window ends
    at the last token.  Text of ``max_tokens`` or fewer tokens yields exactly
    one chunk equal to the full text.
    """
    if max_tokens < 1:
        raise InvalidOverlap(f"max_tokens must be >= 1, got {max_tokens}")
    if not 0 <= overlap < max_tokens:
        raise InvalidOverlap(f"need 0 <= overlap < max_tokens, got overlap={overlap}")
    spans = tokenize_spans(text)
    if not spans:
        raise EmptyText("no tokens in text")

    token_count = len(spans)
    if token_count <= max_tokens:
        return [Chunk(posting_id, 0, text, (0, token_count))]

    stride = max_tokens - overlap
    chunks: list[Chunk] = []
    start = 0
    index = 0
    while True:
        end = min(start + max_tokens, token_count)
        char_start = spans[start][0]
        char_end = spans[end - 1][1]
        chunks.append(Chunk(posting_id, index, text[char_start:char_end], (start, end)))
        if end >= token_count:
            break
        start += stride
        index += 1
    return chunks

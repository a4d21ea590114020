"""Embedding providers, an exact cosine-similarity index, and context retrieval.

Per-posting chunk counts are tiny (tens), so the index is a plain matrix
scanned exhaustively; approximate structures would add failure modes for no
measurable win.  The default provider is a deterministic feature-hashing
embedder, which keeps the whole pipeline runnable offline; remote providers
speak a small JSON-over-HTTP protocol.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
import urllib.request
from dataclasses import dataclass, field
from importlib import resources
from typing import Protocol, Sequence

import numpy as np

from .chunking import Chunk, chunk_text, tokenize_spans
from .errors import DimensionMismatch, ProviderFailure
from .ingest import CleanPosting
from .signals import Variable

_WORD_RE = re.compile(r"\w+")


class EmbeddingProvider(Protocol):
    """Deterministic text embedder: equal text must yield equal vectors."""

    name: str
    dimension: int

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]: ...


class HashingEmbedder:
    """Feature-hashing embedder over token unigrams and bigrams.

    Each n-gram is hashed (salted, stable across runs and platforms) into a
    bucket with a sign bit; the resulting count vector is what callers
    normalize.  Purely offline and deterministic.
    """

    def __init__(self, dimension: int = 256, name: str = "hashing") -> None:
        if dimension < 8:
            raise ValueError("dimension must be >= 8")
        self.name = name
        self.dimension = dimension

    def _features(self, text: str) -> list[str]:
        tokens = [t.lower() for t in _WORD_RE.findall(text)]
        return tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        vectors = []
        for text in texts:
            vec = np.zeros(self.dimension, dtype=np.float64)
            for feature in self._features(text):
                digest = hashlib.md5(feature.encode("utf-8")).digest()
                bucket = int.from_bytes(digest[:4], "little") % self.dimension
                sign = 1.0 if digest[4] % 2 == 0 else -1.0
                vec[bucket] += sign
            vectors.append(vec)
        return vectors


class RemoteEmbeddingProvider:
    """HTTP provider: POST {"texts": [...]}, response {"vectors": [[...], ...]}."""

    def __init__(self, endpoint: str, dimension: int, name: str = "remote",
                 timeout_s: float = 30.0) -> None:
        self.endpoint = endpoint
        self.dimension = dimension
        self.name = name
        self.timeout_s = timeout_s

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        payload = json.dumps({"texts": list(texts)}).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint, data=payload, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout_s) as response:
                body = json.loads(response.read().decode("utf-8"))
        except OSError as exc:
            raise ProviderFailure(f"embedding endpoint failed: {exc}") from exc
        vectors = body.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderFailure("embedding endpoint returned a malformed response")
        return [np.asarray(v, dtype=np.float64) for v in vectors]


@dataclass(frozen=True)
class ChunkIndex:
    """Immutable exact-search index over unit-normalized chunk vectors."""

    dimension: int
    chunks: tuple[Chunk, ...]
    matrix: np.ndarray  # shape (len(chunks), dimension), rows unit-normalized

    @property
    def entries(self) -> list[tuple[Chunk, np.ndarray]]:
        return [(chunk, self.matrix[i]) for i, chunk in enumerate(self.chunks)]

    def __len__(self) -> int:
        return len(self.chunks)


def _normalize(vector: np.ndarray, chunk_index: int | None = None) -> np.ndarray:
    norm = float(np.linalg.norm(vector))
    if norm == 0.0 or not np.isfinite(norm):
        raise ProviderFailure("provider returned an unnormalizable vector", chunk_index)
    return vector / norm


def embed_chunks(chunks: Sequence[Chunk], provider: EmbeddingProvider) -> ChunkIndex:
    """Embed chunks in order and build the index; vectors are unit-normalized."""
    if provider.dimension < 8:
        raise ValueError("provider dimension must be >= 8")
    try:
        raw = provider.embed([c.text for c in chunks])
    except ProviderFailure:
        raise
    except Exception as exc:
        raise ProviderFailure(f"provider {provider.name} failed: {exc}") from exc
    rows = []
    for i, vector in enumerate(raw):
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (provider.dimension,):
            raise ProviderFailure(
                f"provider returned dimension {vector.shape} != {provider.dimension}", i
            )
        rows.append(_normalize(vector, i))
    matrix = np.vstack(rows) if rows else np.zeros((0, provider.dimension))
    return ChunkIndex(dimension=provider.dimension, chunks=tuple(chunks), matrix=matrix)


def query_top_k(
    index: ChunkIndex, query_vector: np.ndarray, k: int
) -> list[tuple[Chunk, float]]:
    """Exact cosine top-k: descending score, ties broken by smaller chunk index.

    Per-row sums use correctly-rounded summation so identical stored vectors
    always score identically (a BLAS matmul can give bitwise-different sums
    for equal rows, which would make the tie-break nondeterministic).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    query = np.asarray(query_vector, dtype=np.float64)
    if query.shape != (index.dimension,):
        raise DimensionMismatch(f"query dimension {query.shape} != {index.dimension}")
    products = index.matrix * query
    scores = [math.fsum(row) for row in products.tolist()]
    order = sorted(range(len(index.chunks)), key=lambda i: (-scores[i], i))
    return [(index.chunks[i], scores[i]) for i in order[:k]]


def _load_queries() -> dict[str, str]:
    text = resources.files("jobsignals.data").joinpath("queries.json").read_text("utf-8")
    return json.loads(text)


_queries: dict[str, str] | None = None


def variable_query(variable: Variable) -> str:
    global _queries
    if _queries is None:
        _queries = _load_queries()
    return _queries[variable.value]


@dataclass(frozen=True)
class RetrievalConfig:
    provider: EmbeddingProvider = field(default_factory=HashingEmbedder)
    k: int = 4
    max_tokens: int = 256
    overlap: int = 32
    queries: dict[str, str] | None = None

    def query_for(self, variable: Variable) -> str:
        if self.queries and variable.value in self.queries:
            return self.queries[variable.value]
        return variable_query(variable)


def retrieve_context(
    posting: CleanPosting,
    variable: Variable,
    config: RetrievalConfig | None = None,
) -> str:
    """Most relevant posting text for one variable's annotation prompt.

    Chunks the posting, embeds it, queries with the variable's shipped query
    string, and joins the top-k chunks in original document order.  Postings
    yielding no more than k chunks are returned whole.
    """
    config = config or RetrievalConfig()
    chunks = chunk_text(
        posting.text, config.max_tokens, config.overlap, posting_id=posting.id
    )
    if len(chunks) <= config.k:
        return posting.text
    index = embed_chunks(chunks, config.provider)
    query_text = config.query_for(variable)
    query_vec = _normalize(
        np.asarray(config.provider.embed([query_text])[0], dtype=np.float64)
    )
    top = query_top_k(index, query_vec, config.k)
    selected = sorted((chunk for chunk, _ in top), key=lambda c: c.index)
    return "\n".join(chunk.text for chunk in selected)


def token_count(text: str) -> int:
    return len(tokenize_spans(text))

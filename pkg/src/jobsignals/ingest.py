"""Posting cleaning, filtering, statistics, and stratified sampling.

Cleaning is tag-level (no DOM build): script/style contents are dropped,
remaining tags stripped, entities decoded from a shipped table, literal
``\\n``/``\\t`` escape sequences and control whitespace collapsed to single
spaces.  Language detection is a stop-word ratio against a shipped English
word list; both data files are editable without touching code.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Iterable, Iterator, Sequence

from random import Random

from .errors import EmptyBatch, SampleTooLarge, TooShort, Unsalvageable

ENGLISH_SCORE_THRESHOLD = 0.08
MIN_TOKENS_FOR_DETECTION = 5
MIN_SALVAGEABLE_CHARS = 40
UNCLASSIFIED_STRATUM = "UNCLASSIFIED"

# Metadata keys carrying source-provided signal values; a record missing
# three or more of these is considered unusable for labeling.
SOURCE_SIGNAL_FIELDS = ("remote_type", "salary", "experience", "education")

_SCRIPT_STYLE_RE = re.compile(
    r"<\s*(script|style)\b[^>]*>.*?<\s*/\s*\1\s*>", re.IGNORECASE | re.DOTALL
)
_COMMENT_RE = re.compile(r"<!--.*?-->", re.DOTALL)
# Tags start with a letter, '/', or '!'; a lone '<' in prose is kept.
_TAG_RE = re.compile(r"<\s*/?[a-zA-Z!][^>]*>")
_ENTITY_RE = re.compile(r"&(#x?[0-9a-fA-F]+|[a-zA-Z][a-zA-Z0-9]*);")
_ESCAPE_SEQ_RE = re.compile(r"\\[nt]")
_WHITESPACE_RUN_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class RawPosting:
    id: str
    body: str
    metadata: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RawPosting":
        return cls(id=str(data["id"]), body=data.get("body", ""), metadata=data.get("metadata", {}))

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.id, "body": self.body, "metadata": self.metadata}


@dataclass(frozen=True)
class Provenance:
    had_html: bool
    original_length: int
    language_score: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "had_html": self.had_html,
            "original_length": self.original_length,
            "language_score": self.language_score,
        }


@dataclass(frozen=True)
class CleanPosting:
    id: str
    text: str
    provenance: Provenance
    metadata: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CleanPosting":
        prov = data.get("provenance", {})
        return cls(
            id=str(data["id"]),
            text=data["text"],
            provenance=Provenance(
                had_html=bool(prov.get("had_html", False)),
                original_length=int(prov.get("original_length", len(data["text"]))),
                language_score=float(prov.get("language_score", 0.0)),
            ),
            metadata=data.get("metadata", {}),
        )

    def to_dict(self) -> dict[str, Any]:
        record: dict[str, Any] = {
            "id": self.id,
            "text": self.text,
            "provenance": self.provenance.to_dict(),
        }
        if self.metadata:
            record["metadata"] = self.metadata
        return record


def _load_entity_table() -> dict[str, str]:
    text = resources.files("jobsignals.data").joinpath("html_entities.json").read_text("utf-8")
    return json.loads(text)


_entity_table: dict[str, str] | None = None


def _entities() -> dict[str, str]:
    global _entity_table
    if _entity_table is None:
        _entity_table = _load_entity_table()
    return _entity_table


def _decode_entity(match: re.Match) -> str:
    ref = match.group(1)
    if ref.startswith("#"):
        try:
            code = int(ref[2:], 16) if ref[1] in "xX" else int(ref[1:])
            return chr(code)
        except (ValueError, OverflowError):
            return match.group(0)
    return _entities().get(ref, match.group(0))


def decode_entities(text: str) -> str:
    """Decode named (shipped table) and numeric HTML character references."""
    return _ENTITY_RE.sub(_decode_entity, text)


def clean_text(body: str) -> tuple[str, bool]:
    """Reduce a posting body to collapsed plain text.

    Returns ``(text, had_html)``.  Raises :class:`Unsalvageable` when the
    body contained script content and stripping leaves fewer than
    40 characters of text.
    """
    if not body:
        raise ValueError("body must be non-empty")
    had_script = bool(_SCRIPT_STYLE_RE.search(body))
    stripped = _SCRIPT_STYLE_RE.sub(" ", body)
    stripped = _COMMENT_RE.sub(" ", stripped)
    stripped, tag_count = _TAG_RE.subn(" ", stripped)
    had_html = had_script or tag_count > 0
    text = decode_entities(stripped)
    text = _ESCAPE_SEQ_RE.sub(" ", text)
    text = _WHITESPACE_RUN_RE.sub(" ", text).strip()
    if had_script and len(text) < MIN_SALVAGEABLE_CHARS:
        raise Unsalvageable(f"script-heavy body reduced to {len(text)} chars")
    return text, had_html


def _load_stopwords() -> frozenset[str]:
    text = resources.files("jobsignals.data").joinpath("stopwords_en.txt").read_text("utf-8")
    words = {
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
    }
    return frozenset(words)


_stopwords: frozenset[str] | None = None


def stopwords() -> frozenset[str]:
    global _stopwords
    if _stopwords is None:
        _stopwords = _load_stopwords()
    return _stopwords


def detect_english(text: str) -> tuple[bool, float]:
    """Stop-word-ratio language check.

    Score is the fraction of lowercased tokens found in the shipped English
    word list; text passes at a ratio of 0.08.  Raises :class:`TooShort`
    below five tokens.
    """
    tokens = text.split()
    if len(tokens) < MIN_TOKENS_FOR_DETECTION:
        raise TooShort(f"need at least {MIN_TOKENS_FOR_DETECTION} tokens, got {len(tokens)}")
    words = stopwords()
    hits = sum(1 for token in tokens if token.lower().strip(".,;:!?()\"'") in words)
    score = hits / len(tokens)
    return score >= ENGLISH_SCORE_THRESHOLD, score


def dedup(batch: Sequence[CleanPosting]) -> list[CleanPosting]:
    """Keep the first occurrence of each distinct lowercased text, in order."""
    seen: set[str] = set()
    kept: list[CleanPosting] = []
    for posting in batch:
        key = posting.text.lower()
        if key in seen:
            continue
        seen.add(key)
        kept.append(posting)
    return kept


def _is_null(value: Any) -> bool:
    if value is None:
        return True
    if isinstance(value, str) and value.strip().lower() in ("", "null", "none"):
        return True
    return False


def filter_null_heavy(record: RawPosting) -> bool:
    """True to keep; drops records with three or more null source signals."""
    nulls = sum(1 for name in SOURCE_SIGNAL_FIELDS if _is_null(record.metadata.get(name)))
    return nulls < 3


@dataclass(frozen=True)
class CorpusStats:
    count: int
    mean_chars: float
    sd_chars: float
    min_chars: int
    max_chars: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "count": self.count,
            "mean_chars": self.mean_chars,
            "sd_chars": self.sd_chars,
            "min_chars": self.min_chars,
            "max_chars": self.max_chars,
        }


def corpus_stats(batch: Sequence[CleanPosting]) -> CorpusStats:
    """Character-length statistics; sample standard deviation (0 for n=1)."""
    if not batch:
        raise EmptyBatch("corpus_stats requires at least one posting")
    lengths = [len(p.text) for p in batch]
    n = len(lengths)
    mean = sum(lengths) / n
    if n == 1:
        sd = 0.0
    else:
        sd = math.sqrt(sum((x - mean) ** 2 for x in lengths) / (n - 1))
    return CorpusStats(
        count=n, mean_chars=mean, sd_chars=sd, min_chars=min(lengths), max_chars=max(lengths)
    )


def proportional_quotas(sizes: dict[str, int], n: int) -> dict[str, int]:
    """Largest-remainder allocation of ``n`` across strata, capped by size.

    Ties on remainder go to the larger stratum, then lexicographic name.
    Quotas exceeding a stratum's size are fixed at the size and the excess
    is re-allocated over the remaining strata.
    """
    total = sum(sizes.values())
    if n > total:
        raise SampleTooLarge(f"requested {n} from {total} records")
    quotas: dict[str, int] = {}
    open_strata = dict(sizes)
    remaining = n
    while True:
        pool = sum(open_strata.values())
        if remaining == 0 or not open_strata:
            break
        shares = {name: remaining * size / pool for name, size in open_strata.items()}
        floors = {name: int(share) for name, share in shares.items()}
        leftover = remaining - sum(floors.values())
        order = sorted(
            open_strata,
            key=lambda name: (-(shares[name] - floors[name]), -open_strata[name], name),
        )
        allocation = dict(floors)
        for name in order[:leftover]:
            allocation[name] += 1
        overfull = {name for name, q in allocation.items() if q > open_strata[name]}
        if not overfull:
            for name, q in allocation.items():
                quotas[name] = quotas.get(name, 0) + q
            break
        # Cap the overfull strata and re-allocate the rest from scratch.
        for name in overfull:
            quotas[name] = quotas.get(name, 0) + open_strata[name]
            remaining -= open_strata[name]
        open_strata = {name: s for name, s in open_strata.items() if name not in overfull}
    return quotas


def stratified_sample(
    batch: Sequence[RawPosting], stratum_key: str, n: int, seed: int
) -> list[RawPosting]:
    """Proportional stratified sample, deterministic in (batch, n, seed).

    Records missing the stratum key fall into an ``UNCLASSIFIED`` stratum.
    Per-stratum draws come from a generator seeded with the run seed and the
    stratum name, and candidates are ordered by id first, so shuffling the
    input does not change the sample.  Output is sorted by id.
    """
    if n > len(batch):
        raise SampleTooLarge(f"requested {n} from {len(batch)} records")
    strata: dict[str, list[RawPosting]] = {}
    for record in batch:
        value = record.metadata.get(stratum_key)
        name = str(value) if not _is_null(value) else UNCLASSIFIED_STRATUM
        strata.setdefault(name, []).append(record)
    quotas = proportional_quotas({name: len(group) for name, group in strata.items()}, n)
    chosen: list[RawPosting] = []
    for name, group in strata.items():
        quota = quotas.get(name, 0)
        if quota == 0:
            continue
        ordered = sorted(group, key=lambda r: r.id)
        rng = Random(f"{seed}|{name}")
        chosen.extend(rng.sample(ordered, quota))
    return sorted(chosen, key=lambda r: r.id)


def read_jsonl(path: str) -> Iterator[dict[str, Any]]:
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield json.loads(line)


def write_jsonl(path: str, records: Iterable[dict[str, Any]]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")
            count += 1
    return count

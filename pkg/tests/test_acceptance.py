"""Acceptance suite: the exit criteria for the pipeline, one test each.

Every test prints a PASS/FAIL line so a run of
``pytest tests/test_acceptance.py -v -s`` reads as a checklist.  Oracles
here are written independently of the implementation paths they check.
"""

from __future__ import annotations

import json
import math
import random
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from jobsignals.annotate import AnnotationConfig, annotate_batch, annotate_posting
from jobsignals.backends import MockBackend, RuleBackend
from jobsignals.canonical import canonicalize_label, default_map
from jobsignals.chunking import chunk_text, tokenize_spans
from jobsignals.evaluate import confusion_matrix, metrics_from_confusion
from jobsignals.ingest import (
    CleanPosting,
    Provenance,
    RawPosting,
    clean_text,
    detect_english,
    proportional_quotas,
    stratified_sample,
)
from jobsignals.retrieval import embed_chunks, query_top_k
from jobsignals.signals import JobSignals, Variable
from tests.conftest import random_signals

DATA_DIR = Path(__file__).parent / "data"

VALID_RESPONSES = {
    Variable.REMOTE_TYPE: '{"remote_type": "hybrid"}',
    Variable.REMUNERATION: ('{"is_salaried": true, "is_hourly": false, '
                            '"has_bonus": false, "has_commission": false}'),
    Variable.EXPERIENCE: '{"experience_required": true, "experience_minimum_years": 2}',
    Variable.EDUCATION: '{"requirement_level": "required", "education_level": "bachelor"}',
}


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE FAIL: {name}")
        raise
    print(f"ACCEPTANCE PASS: {name}")


# ---------------------------------------------------------------------------
# 1. Metrics oracle equivalence
# ---------------------------------------------------------------------------


def _oracle_confusion_metrics(truth, predicted):
    """Brute-force per-pair tallies and direct formula evaluation."""
    classes = sorted(set(truth) | set(predicted))
    n = len(truth)
    stats = {}
    for c in classes:
        tp = fp = fn = 0
        for t, p in zip(truth, predicted):
            if p == c and t == c:
                tp += 1
            elif p == c:
                fp += 1
            elif t == c:
                fn += 1
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        support = sum(1 for t in truth if t == c)
        stats[c] = (precision, recall, f1, support)

    correct = sum(1 for t, p in zip(truth, predicted) if t == p)
    pred_totals = [sum(1 for p in predicted if p == c) for c in classes]
    true_totals = [sum(1 for t in truth if t == c) for c in classes]
    numerator = correct * n - sum(p * t for p, t in zip(pred_totals, true_totals))
    denominator = math.sqrt(
        (n * n - sum(p * p for p in pred_totals)) * (n * n - sum(t * t for t in true_totals))
    )
    mcc = numerator / denominator if denominator else 0.0

    out = {"mcc": mcc}
    for mode in ("weighted", "macro"):
        for i, metric in enumerate(("precision", "recall", "f1")):
            if mode == "weighted":
                value = sum(stats[c][i] * stats[c][3] for c in classes) / n
            else:
                value = sum(stats[c][i] for c in classes) / len(classes)
            out[(mode, metric)] = value
    return out


def test_metrics_oracle_equivalence():
    with criterion("metrics match brute-force oracle on 100 random instances (1e-9)"):
        rng = random.Random(101)
        started = time.perf_counter()
        for _ in range(100):
            n = rng.randrange(2, 51)
            k = rng.randrange(1, 6)
            labels = [f"class{i}" for i in range(k)]
            truth = [rng.choice(labels) for _ in range(n)]
            predicted = [rng.choice(labels) for _ in range(n)]
            got = metrics_from_confusion(confusion_matrix(truth, predicted))
            want = _oracle_confusion_metrics(truth, predicted)
            assert abs(got["weighted"]["mcc"] - want["mcc"]) < 1e-9
            for mode in ("weighted", "macro"):
                for metric in ("precision", "recall", "f1"):
                    assert abs(got[mode][metric] - want[(mode, metric)]) < 1e-9
        elapsed = time.perf_counter() - started
        assert elapsed < 5.0, f"took {elapsed:.2f}s"


# ---------------------------------------------------------------------------
# 2. Perfect / degenerate identities
# ---------------------------------------------------------------------------


def test_metric_identities():
    with criterion("perfect predictions give 1.0; constant predictions give MCC 0.0"):
        rng = random.Random(5)
        labels = [f"c{i}" for i in range(4)]
        truth = [rng.choice(labels) for _ in range(60)]
        perfect = metrics_from_confusion(confusion_matrix(truth, list(truth)))
        for mode in ("weighted", "macro"):
            for metric in ("f1", "precision", "recall", "mcc"):
                assert perfect[mode][metric] == pytest.approx(1.0, abs=1e-12)
        assert len(set(truth)) > 1
        constant = metrics_from_confusion(confusion_matrix(truth, ["c0"] * len(truth)))
        assert constant["weighted"]["mcc"] == 0.0


# ---------------------------------------------------------------------------
# 3. Chunker properties
# ---------------------------------------------------------------------------


def test_chunker_properties_thousand_triples():
    with criterion("chunker coverage/stride/bounds hold on 1000 random triples"):
        rng = random.Random(303)
        started = time.perf_counter()
        for _ in range(1000):
            words = []
            for _ in range(rng.randrange(1, 150)):
                word = "".join(rng.choices("abcdefgh", k=rng.randrange(1, 9)))
                if rng.random() < 0.25:
                    word += rng.choice(".,!?;:")
                words.append(word)
            text = " ".join(words)
            max_tokens = rng.randrange(1, 48)
            overlap = rng.randrange(0, max_tokens)
            chunks = chunk_text(text, max_tokens, overlap)
            n = len(tokenize_spans(text))
            covered = set()
            for chunk in chunks:
                start, end = chunk.token_span
                assert 0 < end - start <= max_tokens
                covered.update(range(start, end))
            assert covered == set(range(n))
            assert chunks[-1].token_span[1] == n
            stride = max_tokens - overlap
            for a, b in zip(chunks, chunks[1:]):
                assert b.token_span[0] - a.token_span[0] == stride
            if n <= max_tokens:
                assert len(chunks) == 1 and chunks[0].text == text
        elapsed = time.perf_counter() - started
        assert elapsed < 5.0, f"took {elapsed:.2f}s"


# ---------------------------------------------------------------------------
# 4. Retrieval exactness
# ---------------------------------------------------------------------------


class _VectorProvider:
    name = "fixed"

    def __init__(self, vectors):
        self.dimension = len(vectors[0])
        self._vectors = list(vectors)
        self._i = 0

    def embed(self, texts):
        out = [self._vectors[self._i + j] for j in range(len(texts))]
        self._i += len(texts)
        return out


def test_retrieval_matches_exhaustive_oracle():
    with criterion("top-k matches exhaustive-scan oracle on 200 random indices"):
        rng = np.random.default_rng(404)
        py_rng = random.Random(404)
        started = time.perf_counter()
        for _ in range(200):
            n = int(rng.integers(1, 201))
            dim = 16
            vectors = [rng.normal(size=dim) for _ in range(n)]
            # duplicate some vectors to force score ties
            for _ in range(min(n // 4, 10)):
                i, j = py_rng.randrange(n), py_rng.randrange(n)
                vectors[i] = vectors[j].copy()
            from jobsignals.chunking import Chunk

            chunks = [Chunk("p", i, f"c{i}", (i, i + 1)) for i in range(n)]
            index = embed_chunks(chunks, _VectorProvider(vectors))
            query = rng.normal(size=dim)
            query /= np.linalg.norm(query)
            k = int(rng.integers(1, 12))

            got = [c.index for c, _ in query_top_k(index, query, k)]

            scored = []
            for i in range(n):
                s = 0.0
                for d in range(dim):
                    s += float(index.matrix[i][d]) * float(query[d])
                scored.append((i, s))
            scored.sort(key=lambda pair: (-pair[1], pair[0]))
            want = [i for i, _ in scored[:k]]
            assert got == want
        elapsed = time.perf_counter() - started
        assert elapsed < 10.0, f"took {elapsed:.2f}s"


# ---------------------------------------------------------------------------
# 5. Schema round-trip and canonicalization idempotence
# ---------------------------------------------------------------------------


def test_schema_round_trip_ten_thousand():
    with criterion("10,000 random documents round-trip; shipped map idempotent"):
        rng = random.Random(505)
        for _ in range(10_000):
            doc = random_signals(rng)
            assert JobSignals.from_json(doc.to_json()) == doc
        for variable in Variable:
            for entry in default_map().entries_for(variable):
                once = canonicalize_label(variable, entry.canonical)
                assert once == entry.canonical
                assert canonicalize_label(variable, once) == once


# ---------------------------------------------------------------------------
# 6. End-to-end smoke corpus
# ---------------------------------------------------------------------------


def _cleaned_smoke_postings() -> list[CleanPosting]:
    postings = []
    with open(DATA_DIR / "smoke_postings.jsonl", encoding="utf-8") as f:
        for line in f:
            raw = RawPosting.from_dict(json.loads(line))
            text, had_html = clean_text(raw.body)
            _, score = detect_english(text)
            postings.append(
                CleanPosting(raw.id, text, Provenance(had_html, len(raw.body), score))
            )
    return postings


def test_smoke_corpus_exact_match():
    with criterion("10-posting smoke corpus matches hand-audited expected signals"):
        backends = {v: RuleBackend() for v in Variable}
        config = AnnotationConfig(backoff_ms=0)
        expected = {}
        with open(DATA_DIR / "smoke_expected.jsonl", encoding="utf-8") as f:
            for line in f:
                record = json.loads(line)
                expected[record["id"]] = record["signals"]
        postings = _cleaned_smoke_postings()
        assert len(postings) == 10
        for posting in postings:
            record = annotate_posting(posting, backends, config)
            assert all(s.value == "ok" for s in record.status.values()), posting.id
            assert record.signals.to_dict() == expected[posting.id], posting.id


# ---------------------------------------------------------------------------
# 7. Batch orchestration
# ---------------------------------------------------------------------------


def _batch_postings(n: int) -> list[CleanPosting]:
    return [
        CleanPosting(f"b{i:03d}", f"Posting b{i:03d} offers a salary and a bonus",
                     Provenance(False, 40, 1.0))
        for i in range(1, n + 1)
    ]


def test_batch_orchestration():
    with criterion("100-posting batch: input order, concurrency <= 8, clean resume"):
        rng = random.Random(6)
        postings = _batch_postings(100)

        backends = {
            v: MockBackend(script=[VALID_RESPONSES[v]], delay_s=rng.uniform(0.001, 0.004))
            for v in Variable
        }
        config = AnnotationConfig(backoff_ms=0, max_inflight=8)
        records = list(annotate_batch(postings, backends, config))
        assert [r.posting_id for r in records] == [p.id for p in postings]
        for backend in backends.values():
            assert backend.peak_concurrency <= 8
        assert any(b.peak_concurrency > 1 for b in backends.values())

        # interrupt after 50 emitted records, then resume from the checkpoint
        import tempfile

        with tempfile.TemporaryDirectory() as tmp:
            checkpoint = f"{tmp}/checkpoint"
            backends1 = {v: MockBackend(script=[VALID_RESPONSES[v]]) for v in Variable}
            emitted = []
            stream = annotate_batch(postings, backends1, config, checkpoint)
            for record in stream:
                emitted.append(record.posting_id)
                if len(emitted) == 50:
                    stream.close()
                    break
            assert emitted == [p.id for p in postings[:50]]

            backends2 = {v: MockBackend(script=[VALID_RESPONSES[v]]) for v in Variable}
            resumed = list(annotate_batch(postings, backends2, config, checkpoint))
            assert [r.posting_id for r in resumed] == [p.id for p in postings[50:]]
            for backend in backends2.values():
                # no backend call for any already-emitted posting
                for request in backend.requests:
                    posting_number = int(request.context.split()[1][1:])
                    assert posting_number > 50
                called = {request.context.split()[1] for request in backend.requests}
                assert called == {p.id for p in postings[50:]}


# ---------------------------------------------------------------------------
# 8. Throughput sanity
# ---------------------------------------------------------------------------


def test_throughput_with_rule_backends():
    with criterion("per-posting latency with rule backends under 50 ms"):
        backends = {v: RuleBackend() for v in Variable}
        config = AnnotationConfig(backoff_ms=0)
        postings = _cleaned_smoke_postings()
        annotate_posting(postings[0], backends, config)  # warm caches
        started = time.perf_counter()
        for posting in postings:
            annotate_posting(posting, backends, config)
        per_posting_ms = (time.perf_counter() - started) * 1000.0 / len(postings)
        assert per_posting_ms < 50.0, f"{per_posting_ms:.2f} ms per posting"


# ---------------------------------------------------------------------------
# 9. Sampling quotas
# ---------------------------------------------------------------------------


def test_sampling_quotas_and_determinism():
    with criterion("quotas sum to n, match hand computations, permutation-stable"):
        # three fixture distributions, hand-computed largest remainder
        assert proportional_quotas({"A": 600, "B": 300, "C": 100}, 100) == {
            "A": 60, "B": 30, "C": 10,
        }
        assert proportional_quotas({"A": 2, "B": 1}, 2) == {"A": 1, "B": 1}
        # shares 2.692/2.692/1.615 -> floors 2/2/1, remainders tie A=B > C,
        # lexicographic tie-break gives A and B the two leftover slots
        assert proportional_quotas({"A": 5, "B": 5, "C": 3}, 7) == {"A": 3, "B": 3, "C": 1}

        rng = random.Random(909)
        for _ in range(100):
            sizes = {f"S{i}": rng.randrange(1, 60) for i in range(rng.randrange(1, 9))}
            n = rng.randrange(1, sum(sizes.values()) + 1)
            quotas = proportional_quotas(sizes, n)
            assert sum(quotas.values()) == n
            assert all(0 <= quotas[s] <= sizes[s] for s in quotas)

        batch = []
        for name, size in (("A", 37), ("B", 21), ("C", 8)):
            for i in range(size):
                batch.append(RawPosting(f"{name}{i:03d}", "x", {"onet_code": name}))
        baseline = [p.id for p in stratified_sample(batch, "onet_code", 30, seed=7)]
        for shuffle_seed in range(5):
            shuffled = list(batch)
            random.Random(shuffle_seed).shuffle(shuffled)
            sample = [p.id for p in stratified_sample(shuffled, "onet_code", 30, seed=7)]
            assert sample == baseline

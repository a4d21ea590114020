"""Per-variable annotation orchestration and resumable batch processing.

The flow for one variable is: retrieve context, render the prompt, call the
backend under a transport retry policy, parse and canonicalize the reply.
A malformed reply earns one corrective re-prompt before the variable falls
back to schema defaults; no exception escapes a variable's pipeline, so a
poisoned backend can never disturb the other three variables.

Batch runs bound in-flight postings, emit records in input order regardless
of completion order, and checkpoint the last emitted posting id so an
interrupted run resumes without re-sending work to backends.
"""

from __future__ import annotations

import json
import os
import random
import tempfile
import time
from collections import deque
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from threading import Lock
from typing import Any, Iterable, Iterator, Mapping

from .backends import AnnotationBackend, Completion, CompletionRequest
from .canonical import CanonicalizationMap, merge_fragments, parse_backend_response
from .errors import (
    CheckpointCorrupt,
    JobSignalsError,
    NoObjectFound,
    SchemaMismatch,
    TransportError,
    UnmappableLabel,
)
from .ingest import CleanPosting
from .prompts import CORRECTIVE_INSTRUCTION, build_prompt
from .retrieval import RetrievalConfig, retrieve_context
from .signals import DEFAULT_FRAGMENTS, JobSignals, Variable

_PARSE_FAILURES = (NoObjectFound, SchemaMismatch, UnmappableLabel)


class AnnotationStatus(str, Enum):
    OK = "ok"
    FALLBACK_UNKNOWN = "fallback_unknown"
    FAILED = "failed"


@dataclass
class AnnotationConfig:
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    retries: int = 3
    backoff_ms: float = 500.0
    backoff_multiplier: float = 2.0
    jitter: float = 0.2
    max_inflight: int = 1
    prompt_dir: str | None = None
    canonical_map: CanonicalizationMap | None = None

    def backoff_delay_s(self, attempt: int, rng: random.Random | None = None) -> float:
        base = (self.backoff_ms / 1000.0) * (self.backoff_multiplier**attempt)
        rng = rng or random
        return base * (1.0 + rng.uniform(-self.jitter, self.jitter))


@dataclass(frozen=True)
class AnnotationRecord:
    posting_id: str
    signals: JobSignals
    status: dict[Variable, AnnotationStatus]
    score: dict[Variable, float | None]
    latency_ms: dict[Variable, float]

    def to_dict(self) -> dict[str, Any]:
        return {
            "posting_id": self.posting_id,
            "signals": self.signals.to_dict(),
            "status": {v.value: s.value for v, s in self.status.items()},
            "score": {v.value: self.score[v] for v in self.score},
            "latency_ms": {v.value: self.latency_ms[v] for v in self.latency_ms},
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "AnnotationRecord":
        return cls(
            posting_id=data["posting_id"],
            signals=JobSignals.from_dict(data["signals"]),
            status={Variable(k): AnnotationStatus(v) for k, v in data["status"].items()},
            score={Variable(k): v for k, v in data["score"].items()},
            latency_ms={Variable(k): float(v) for k, v in data["latency_ms"].items()},
        )


def _complete_with_retries(
    backend: AnnotationBackend,
    request: CompletionRequest,
    config: AnnotationConfig,
    sleep=time.sleep,
) -> Completion:
    """Exactly ``retries + 1`` attempts on transport failure."""
    attempts = config.retries + 1
    for attempt in range(attempts):
        try:
            return backend.complete(request)
        except TransportError:
            if attempt == attempts - 1:
                raise
            sleep(config.backoff_delay_s(attempt))
    raise AssertionError("unreachable")


def _validate_fragment(variable: Variable, fragment: Any) -> None:
    if variable is Variable.EXPERIENCE:
        years = fragment.experience_minimum_years
        if not (0.0 <= years <= 60.0):
            raise SchemaMismatch(f"experience_minimum_years out of range: {years}")


def annotate_variable(
    posting: CleanPosting,
    variable: Variable,
    backend: AnnotationBackend,
    config: AnnotationConfig | None = None,
) -> tuple[Any, AnnotationStatus, float | None]:
    """Annotate one variable; failures are encoded in the status, never raised."""
    config = config or AnnotationConfig()
    default = DEFAULT_FRAGMENTS[variable]
    try:
        context = retrieve_context(posting, variable, config.retrieval)
        prompt = build_prompt(variable, context, config.prompt_dir)
    except JobSignalsError:
        return default, AnnotationStatus.FAILED, None

    request = CompletionRequest(variable=variable, prompt=prompt, context=context)
    try:
        completion = _complete_with_retries(backend, request, config)
    except TransportError:
        return default, AnnotationStatus.FAILED, None

    for corrective in (False, True):
        if corrective:
            retry_request = CompletionRequest(
                variable=variable, prompt=prompt + CORRECTIVE_INSTRUCTION, context=context
            )
            try:
                completion = _complete_with_retries(backend, retry_request, config)
            except TransportError:
                return default, AnnotationStatus.FAILED, None
        try:
            fragment = parse_backend_response(completion.text, variable, config.canonical_map)
            _validate_fragment(variable, fragment)
            return fragment, AnnotationStatus.OK, completion.score
        except _PARSE_FAILURES:
            continue
    return default, AnnotationStatus.FALLBACK_UNKNOWN, None


def annotate_posting(
    posting: CleanPosting,
    backends: Mapping[Variable, AnnotationBackend],
    config: AnnotationConfig | None = None,
) -> AnnotationRecord:
    """Run all four variable pipelines and merge fragments into one document."""
    config = config or AnnotationConfig()
    missing = [v.value for v in Variable if v not in backends]
    if missing:
        raise ValueError(f"backend map missing variables: {missing}")
    fragments: dict[Variable, Any] = {}
    status: dict[Variable, AnnotationStatus] = {}
    score: dict[Variable, float | None] = {}
    latency: dict[Variable, float] = {}
    for variable in Variable:
        started = time.perf_counter()
        fragment, var_status, var_score = annotate_variable(
            posting, variable, backends[variable], config
        )
        latency[variable] = (time.perf_counter() - started) * 1000.0
        fragments[variable] = fragment
        status[variable] = var_status
        score[variable] = var_score
    return AnnotationRecord(
        posting_id=posting.id,
        signals=merge_fragments(fragments),
        status=status,
        score=score,
        latency_ms=latency,
    )


class _LockedBackend(AnnotationBackend):
    """Mutual-exclusion gate honoring a backend's serial capability flag."""

    def __init__(self, inner: AnnotationBackend) -> None:
        self.name = inner.name
        self.kind = inner.kind
        self.serial = True
        self._inner = inner
        self._lock = Lock()

    def complete(self, request: CompletionRequest) -> Completion:
        with self._lock:
            return self._inner.complete(request)


def _gate_serial_backends(
    backends: Mapping[Variable, AnnotationBackend]
) -> dict[Variable, AnnotationBackend]:
    gated: dict[int, AnnotationBackend] = {}
    result: dict[Variable, AnnotationBackend] = {}
    for variable, backend in backends.items():
        if getattr(backend, "serial", False) and not isinstance(backend, _LockedBackend):
            if id(backend) not in gated:
                gated[id(backend)] = _LockedBackend(backend)
            result[variable] = gated[id(backend)]
        else:
            result[variable] = backend
    return result


def read_checkpoint(path: str) -> str | None:
    """Last emitted posting id, or None when no checkpoint exists."""
    if not os.path.exists(path):
        return None
    with open(path, encoding="utf-8") as f:
        content = f.read()
    lines = [line for line in content.splitlines() if line.strip()]
    if len(lines) != 1 or not lines[0].strip():
        raise CheckpointCorrupt(f"checkpoint {path!r} must hold exactly one posting id")
    return lines[0].strip()


def write_checkpoint(path: str, posting_id: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".checkpoint-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(posting_id + "\n")
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def annotate_batch(
    postings: Iterable[CleanPosting],
    backends: Mapping[Variable, AnnotationBackend],
    config: AnnotationConfig | None = None,
    checkpoint_path: str | None = None,
) -> Iterator[AnnotationRecord]:
    """Annotate a posting stream with bounded concurrency and resume support.

    At most ``config.max_inflight`` postings are annotated concurrently;
    records are yielded in input order.  With a checkpoint path, postings up
    to and including the checkpointed id are skipped without backend calls,
    and the checkpoint advances after each yielded record.
    """
    config = config or AnnotationConfig()
    if config.max_inflight < 1:
        raise ValueError("max_inflight must be >= 1")
    missing = [v.value for v in Variable if v not in backends]
    if missing:
        raise ValueError(f"backend map missing variables: {missing}")
    backends = _gate_serial_backends(backends)

    resume_after = read_checkpoint(checkpoint_path) if checkpoint_path else None
    skipping = resume_after is not None

    executor = ThreadPoolExecutor(max_workers=config.max_inflight)
    pending: deque[Future] = deque()

    def _emit(future: Future) -> AnnotationRecord:
        record = future.result()
        if checkpoint_path:
            write_checkpoint(checkpoint_path, record.posting_id)
        return record

    try:
        for posting in postings:
            if skipping:
                if posting.id == resume_after:
                    skipping = False
                continue
            while len(pending) >= config.max_inflight:
                yield _emit(pending.popleft())
            pending.append(executor.submit(annotate_posting, posting, backends, config))
        if skipping:
            raise CheckpointCorrupt(
                f"checkpointed id {resume_after!r} never appeared in the input"
            )
        while pending:
            yield _emit(pending.popleft())
    finally:
        executor.shutdown(wait=True, cancel_futures=True)


def record_to_jsonl(record: AnnotationRecord) -> str:
    return json.dumps(record.to_dict(), sort_keys=True, separators=(",", ":"))

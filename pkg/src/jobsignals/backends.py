"""Annotation backends: the pluggable completion side of the pipeline.

Each of the four variables gets its own backend instance, so one variable's
model can be swapped or poisoned without touching the others.  Backends
receive both the rendered prompt and the raw retrieved context; prompt-based
backends (HTTP model, mock) read the prompt, while the rule backend and the
classifier service work from the context text directly.
"""

from __future__ import annotations

import json
import os
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable

from .errors import TransportError
from .rules import RuleSet, default_rules, extract_signals
from .signals import Variable


class BackendKind(str, Enum):
    HTTP_LLM = "http_llm"
    MOCK = "mock"
    RULE = "rule"
    CLASSIFIER_SERVICE = "classifier_service"


@dataclass(frozen=True)
class CompletionRequest:
    variable: Variable
    prompt: str
    context: str


@dataclass(frozen=True)
class Completion:
    text: str
    # Probability-like confidence; None for backends without one (the
    # classifier service passes its score through, the rule backend is 1.0).
    score: float | None = None


class AnnotationBackend:
    """Base class; subclasses implement :meth:`complete`.

    ``serial=True`` declares the backend unsafe for concurrent calls; the
    batch orchestrator wraps such backends in a mutual-exclusion gate.
    """

    name: str = "backend"
    kind: BackendKind = BackendKind.MOCK
    serial: bool = False

    def complete(self, request: CompletionRequest) -> Completion:
        raise NotImplementedError


class MockBackend(AnnotationBackend):
    """Deterministic scripted backend for tests.

    ``script`` maps each call ordinal to a canned response; after the script
    is exhausted the last entry repeats.  Entries may be strings (returned
    as completions) or exceptions (raised).  Call counts and peak
    concurrency are tracked so tests can assert orchestration behavior.
    """

    kind = BackendKind.MOCK

    def __init__(
        self,
        script: Iterable[str | Exception] | None = None,
        respond: Callable[[CompletionRequest], str] | None = None,
        name: str = "mock",
        delay_s: float = 0.0,
    ) -> None:
        self.name = name
        self._script = list(script) if script is not None else []
        self._respond = respond
        self._delay_s = delay_s
        self._lock = threading.Lock()
        self.calls = 0
        self.requests: list[CompletionRequest] = []
        self._active = 0
        self.peak_concurrency = 0

    def complete(self, request: CompletionRequest) -> Completion:
        with self._lock:
            self.calls += 1
            self.requests.append(request)
            ordinal = self.calls - 1
            self._active += 1
            self.peak_concurrency = max(self.peak_concurrency, self._active)
        try:
            if self._delay_s:
                time.sleep(self._delay_s)
            if self._respond is not None:
                return Completion(self._respond(request))
            if not self._script:
                raise TransportError("mock backend has no scripted response")
            entry = self._script[min(ordinal, len(self._script) - 1)]
            if isinstance(entry, Exception):
                raise entry
            return Completion(entry)
        finally:
            with self._lock:
                self._active -= 1


class RuleBackend(AnnotationBackend):
    """Offline backend that answers from the keyword rule set.

    The response is the variable's schema fragment serialized as JSON, so it
    flows through the same parsing path as model output.  Score is 1.0: rule
    hits are exact by construction.
    """

    kind = BackendKind.RULE

    def __init__(self, rules: RuleSet | None = None, name: str = "rule") -> None:
        self.name = name
        self._rules = rules or default_rules()

    def complete(self, request: CompletionRequest) -> Completion:
        signals = extract_signals(request.context, self._rules)
        fragment = signals.fragment(request.variable)
        return Completion(json.dumps(fragment, sort_keys=True), score=1.0)


def _post_json(url: str, payload: dict, headers: dict[str, str], timeout_s: float) -> dict:
    request = urllib.request.Request(
        url,
        data=json.dumps(payload).encode("utf-8"),
        headers={"Content-Type": "application/json", **headers},
    )
    try:
        with urllib.request.urlopen(request, timeout=timeout_s) as response:
            return json.loads(response.read().decode("utf-8"))
    except urllib.error.HTTPError as exc:
        raise TransportError(f"POST {url} -> HTTP {exc.code}") from exc
    except (urllib.error.URLError, OSError, json.JSONDecodeError, ValueError) as exc:
        raise TransportError(f"POST {url} failed: {exc}") from exc


class HttpLlmBackend(AnnotationBackend):
    """Wire protocol: POST {"prompt": ...} -> {"completion": ...}.

    The bearer token comes from an environment variable named in the config
    (never from the config value itself).
    """

    kind = BackendKind.HTTP_LLM

    def __init__(
        self,
        endpoint: str,
        timeout_s: float = 30.0,
        auth_env: str | None = None,
        name: str = "http_llm",
        serial: bool = False,
    ) -> None:
        self.name = name
        self.endpoint = endpoint
        self.timeout_s = timeout_s
        self.auth_env = auth_env
        self.serial = serial

    def _headers(self) -> dict[str, str]:
        if self.auth_env and os.environ.get(self.auth_env):
            return {"Authorization": f"Bearer {os.environ[self.auth_env]}"}
        return {}

    def complete(self, request: CompletionRequest) -> Completion:
        body = _post_json(
            self.endpoint, {"prompt": request.prompt}, self._headers(), self.timeout_s
        )
        completion = body.get("completion")
        if not isinstance(completion, str):
            raise TransportError(f"{self.endpoint} returned no completion field")
        return Completion(completion)


class ClassifierServiceBackend:
    """Wire protocol: POST /classify {"variable", "text"} -> {"label", "score"}.

    The label is a composite-label JSON string, which parses through the
    same response path as any other completion; the service's probability
    passes through as the score.
    """

    kind = BackendKind.CLASSIFIER_SERVICE
    serial = False

    def __init__(self, endpoint: str, timeout_s: float = 30.0, name: str = "classifier") -> None:
        self.name = name
        self.endpoint = endpoint.rstrip("/")
        self.timeout_s = timeout_s

    def complete(self, request: CompletionRequest) -> Completion:
        body = _post_json(
            f"{self.endpoint}/classify",
            {"variable": request.variable.value, "text": request.context},
            {},
            self.timeout_s,
        )
        label = body.get("label")
        if not isinstance(label, str):
            raise TransportError(f"{self.endpoint} returned no label field")
        score = body.get("score")
        return Completion(label, score=float(score) if score is not None else None)

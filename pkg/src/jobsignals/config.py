"""Declarative pipeline configuration: loading, validation, and wiring.

The config is one JSON file; command-line flags override its values and
environment variables supply secrets (auth tokens) only.  Validation runs
before any input is read, so an invalid config never produces partial
output.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any

from .annotate import AnnotationConfig
from .backends import (
    AnnotationBackend,
    BackendKind,
    ClassifierServiceBackend,
    HttpLlmBackend,
    MockBackend,
    RuleBackend,
)
from .canonical import CanonicalizationMap
from .errors import ConfigError
from .retrieval import HashingEmbedder, RemoteEmbeddingProvider, RetrievalConfig
from .rules import RuleSet
from .signals import Variable

_ENDPOINT_KINDS = (BackendKind.HTTP_LLM, BackendKind.CLASSIFIER_SERVICE)


@dataclass
class PipelineConfig:
    paths: dict[str, str | None] = field(default_factory=dict)
    chunking: dict[str, int] = field(default_factory=dict)
    backends: dict[str, dict[str, Any]] = field(default_factory=dict)
    concurrency: dict[str, Any] = field(default_factory=dict)
    embedding: dict[str, Any] = field(default_factory=dict)
    sampling: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def load(cls, path: str) -> "PipelineConfig":
        try:
            with open(path, encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        config = cls(
            paths=data.get("paths", {}),
            chunking=data.get("chunking", {}),
            backends=data.get("backends", {}),
            concurrency=data.get("concurrency", {}),
            embedding=data.get("embedding", {}),
            sampling=data.get("sampling", {}),
        )
        config.validate()
        return config

    def validate(self) -> None:
        chunk = self.chunking
        max_tokens = int(chunk.get("max_tokens", 256))
        overlap = int(chunk.get("overlap", 32))
        k = int(chunk.get("k", 4))
        if max_tokens < 1:
            raise ConfigError(f"chunking.max_tokens must be >= 1, got {max_tokens}")
        if not 0 <= overlap < max_tokens:
            raise ConfigError(f"chunking.overlap must satisfy 0 <= overlap < max_tokens")
        if k < 1:
            raise ConfigError(f"chunking.k must be >= 1, got {k}")

        conc = self.concurrency
        if int(conc.get("max_inflight", 1)) < 1:
            raise ConfigError("concurrency.max_inflight must be >= 1")
        if int(conc.get("retries", 3)) < 0:
            raise ConfigError("concurrency.retries must be >= 0")
        if float(conc.get("backoff_ms", 500)) < 0:
            raise ConfigError("concurrency.backoff_ms must be >= 0")

        for name, spec in self.backends.items():
            try:
                Variable(name)
            except ValueError:
                raise ConfigError(f"backends.{name}: unknown variable") from None
            kind = spec.get("kind")
            try:
                kind = BackendKind(kind)
            except ValueError:
                raise ConfigError(f"backends.{name}.kind invalid: {kind!r}") from None
            if kind in _ENDPOINT_KINDS and not spec.get("endpoint"):
                raise ConfigError(f"backends.{name}: kind {kind.value} needs an endpoint")

        provider = self.embedding.get("provider", "hashing")
        if provider not in ("hashing", "remote"):
            raise ConfigError(f"embedding.provider must be hashing or remote, got {provider!r}")
        if provider == "remote" and not self.embedding.get("endpoint"):
            raise ConfigError("embedding.provider remote needs an endpoint")

        # Referenced input paths must exist up front; outputs are exempt.
        for key in ("rules", "canonical_map", "prompt_dir", "input"):
            value = self.paths.get(key)
            if value and not os.path.exists(value):
                raise ConfigError(f"paths.{key} does not exist: {value}")

    # ------------------------------------------------------------------
    # Wiring
    # ------------------------------------------------------------------

    def rule_set(self) -> RuleSet:
        path = self.paths.get("rules")
        return RuleSet.from_file(path) if path else RuleSet.default()

    def canonical_map(self) -> CanonicalizationMap:
        path = self.paths.get("canonical_map")
        return CanonicalizationMap.from_file(path) if path else CanonicalizationMap.default()

    def embedding_provider(self):
        if self.embedding.get("provider", "hashing") == "remote":
            return RemoteEmbeddingProvider(
                endpoint=self.embedding["endpoint"],
                dimension=int(self.embedding.get("dimension", 256)),
                timeout_s=float(self.embedding.get("timeout_ms", 30000)) / 1000.0,
            )
        return HashingEmbedder(dimension=int(self.embedding.get("dimension", 256)))

    def retrieval_config(self) -> RetrievalConfig:
        return RetrievalConfig(
            provider=self.embedding_provider(),
            k=int(self.chunking.get("k", 4)),
            max_tokens=int(self.chunking.get("max_tokens", 256)),
            overlap=int(self.chunking.get("overlap", 32)),
        )

    def annotation_config(self) -> AnnotationConfig:
        return AnnotationConfig(
            retrieval=self.retrieval_config(),
            retries=int(self.concurrency.get("retries", 3)),
            backoff_ms=float(self.concurrency.get("backoff_ms", 500)),
            max_inflight=int(self.concurrency.get("max_inflight", 1)),
            prompt_dir=self.paths.get("prompt_dir"),
            canonical_map=self.canonical_map(),
        )

    def build_backends(self) -> dict[Variable, AnnotationBackend]:
        rules = self.rule_set()
        built: dict[Variable, AnnotationBackend] = {}
        for variable in Variable:
            spec = self.backends.get(variable.value, {"kind": "rule"})
            built[variable] = _build_backend(variable, spec, rules)
        return built


def _build_backend(
    variable: Variable, spec: dict[str, Any], rules: RuleSet
) -> AnnotationBackend:
    kind = BackendKind(spec.get("kind", "rule"))
    timeout_s = float(spec.get("timeout_ms", 30000)) / 1000.0
    if kind is BackendKind.RULE:
        return RuleBackend(rules, name=f"rule:{variable.value}")
    if kind is BackendKind.HTTP_LLM:
        return HttpLlmBackend(
            endpoint=spec["endpoint"],
            timeout_s=timeout_s,
            auth_env=spec.get("auth_env"),
            name=f"http:{variable.value}",
            serial=bool(spec.get("serial", False)),
        )
    if kind is BackendKind.CLASSIFIER_SERVICE:
        return ClassifierServiceBackend(
            endpoint=spec["endpoint"], timeout_s=timeout_s, name=f"classifier:{variable.value}"
        )
    if kind is BackendKind.MOCK:
        responses = spec.get("responses") or [spec.get("response", "")]
        return MockBackend(script=responses, name=f"mock:{variable.value}")
    raise ConfigError(f"unsupported backend kind: {kind}")

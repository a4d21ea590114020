"""Label canonicalization and tolerant parsing of backend completions.

Annotation backends return free-ish text: the same concept arrives as
"on-site", "on_site", or "In Person" depending on the model and prompt.
This module maps those raw strings onto the closed label sets of the
schema, and extracts/validates the JSON object embedded in a completion.

Matching normalizes raw strings by lowercasing and deleting ``-``, ``_``
and spaces, then applies the map's regex patterns in file order; the first
match wins.  The default map ships as an editable data file.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import Any

from .errors import NoObjectFound, SchemaMismatch, UnmappableLabel
from .signals import (
    Education,
    EducationLevel,
    Experience,
    JobSignals,
    Remuneration,
    RemoteType,
    RequirementLevel,
    Variable,
)

_NORMALIZE_RE = re.compile(r"[-_ ]")
_CODE_FENCE_RE = re.compile(r"```[a-zA-Z0-9_-]*")

REQUIRED_KEYS: dict[Variable, tuple[str, ...]] = {
    Variable.REMOTE_TYPE: ("remote_type",),
    Variable.REMUNERATION: ("is_salaried", "is_hourly", "has_bonus", "has_commission"),
    Variable.EXPERIENCE: ("experience_required", "experience_minimum_years"),
    Variable.EDUCATION: ("requirement_level", "education_level"),
}

_BOOLEAN_VARIABLES = frozenset({Variable.REMUNERATION, Variable.EXPERIENCE})


@dataclass(frozen=True)
class CanonicalEntry:
    variable: Variable
    pattern: re.Pattern
    canonical: str


class CanonicalizationMap:
    """Ordered raw-pattern to canonical-label mapping, one list per variable."""

    def __init__(self, entries: list[CanonicalEntry]) -> None:
        self._by_variable: dict[Variable, list[CanonicalEntry]] = {v: [] for v in Variable}
        for entry in entries:
            self._by_variable[entry.variable].append(entry)

    @classmethod
    def from_records(cls, records: list[dict[str, str]]) -> "CanonicalizationMap":
        entries = [
            CanonicalEntry(
                variable=Variable(rec["variable"]),
                pattern=re.compile(rec["pattern"]),
                canonical=rec["canonical"],
            )
            for rec in records
        ]
        return cls(entries)

    @classmethod
    def from_file(cls, path: str) -> "CanonicalizationMap":
        with open(path, encoding="utf-8") as f:
            return cls.from_records(json.load(f))

    @classmethod
    def default(cls) -> "CanonicalizationMap":
        text = resources.files("jobsignals.data").joinpath("canonical_map.json").read_text("utf-8")
        return cls.from_records(json.loads(text))

    def entries_for(self, variable: Variable) -> list[CanonicalEntry]:
        return list(self._by_variable[variable])

    def lookup(self, variable: Variable, raw: str) -> str | None:
        normalized = _NORMALIZE_RE.sub("", raw.strip().lower())
        for entry in self._by_variable[variable]:
            if entry.pattern.search(normalized):
                return entry.canonical
        return None


_default_map: CanonicalizationMap | None = None


def default_map() -> CanonicalizationMap:
    global _default_map
    if _default_map is None:
        _default_map = CanonicalizationMap.default()
    return _default_map


def canonicalize_label(
    variable: Variable, raw: str, cmap: CanonicalizationMap | None = None
) -> str:
    """Map a raw output string onto the closed label set for ``variable``.

    Unmatched strings fall back to ``"unknown"`` for the enum variables;
    for the boolean variables an unmatched string raises
    :class:`UnmappableLabel` because there is no safe boolean default.
    """
    if not raw or not raw.strip():
        raise ValueError("raw label must be non-empty after trimming")
    cmap = cmap or default_map()
    canonical = cmap.lookup(variable, raw)
    if canonical is not None:
        return canonical
    if variable in _BOOLEAN_VARIABLES:
        raise UnmappableLabel(variable.value, raw)
    return "unknown"


def extract_json_object(text: str) -> dict[str, Any]:
    """Return the first balanced ``{...}`` object in ``text`` that parses as JSON.

    Code fences are stripped first; braces inside JSON strings do not count
    toward balance.  Scanning continues past brace spans that fail to parse,
    so stray braces in surrounding prose are tolerated.
    """
    cleaned = _CODE_FENCE_RE.sub("", text)
    for start in _brace_positions(cleaned):
        span = _balanced_span(cleaned, start)
        if span is None:
            continue
        try:
            obj = json.loads(cleaned[start:span])
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return obj
    raise NoObjectFound(f"no balanced JSON object in completion: {text[:120]!r}")


def _brace_positions(text: str):
    for i, ch in enumerate(text):
        if ch == "{":
            yield i


def _balanced_span(text: str, start: int) -> int | None:
    """End index (exclusive) of the balanced object starting at ``start``."""
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return i + 1
    return None


def _coerce_bool(variable: Variable, value: Any, cmap: CanonicalizationMap) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)) and value in (0, 1):
        return bool(value)
    if isinstance(value, str) and value.strip():
        canonical = canonicalize_label(variable, value, cmap)
        return canonical == "true"
    raise UnmappableLabel(variable.value, repr(value))


def _coerce_years(value: Any) -> float:
    if isinstance(value, bool):
        raise SchemaMismatch("experience_minimum_years must be numeric, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value.strip())
        except ValueError:
            raise SchemaMismatch(f"experience_minimum_years not numeric: {value!r}") from None
    raise SchemaMismatch(f"experience_minimum_years not numeric: {value!r}")


def _canonical_str(
    variable: Variable, value: Any, cmap: CanonicalizationMap
) -> str:
    if not isinstance(value, str) or not value.strip():
        raise SchemaMismatch(f"expected a non-empty string for {variable.value}, got {value!r}")
    return canonicalize_label(variable, value, cmap)


def parse_backend_response(
    text: str, variable: Variable, cmap: CanonicalizationMap | None = None
):
    """Parse a raw completion into the given variable's schema fragment.

    Extracts the first balanced JSON object, checks the variable's required
    keys, canonicalizes label fields, and parses numeric fields as decimals.

    Raises :class:`NoObjectFound`, :class:`SchemaMismatch`, or
    :class:`UnmappableLabel`.
    """
    cmap = cmap or default_map()
    obj = extract_json_object(text)
    missing = [k for k in REQUIRED_KEYS[variable] if k not in obj]
    if missing:
        raise SchemaMismatch(f"{variable.value} object missing keys: {missing}")

    if variable is Variable.REMOTE_TYPE:
        label = _canonical_str(variable, obj["remote_type"], cmap)
        return RemoteType(label)

    if variable is Variable.REMUNERATION:
        return Remuneration(
            is_salaried=_coerce_bool(variable, obj["is_salaried"], cmap),
            is_hourly=_coerce_bool(variable, obj["is_hourly"], cmap),
            has_bonus=_coerce_bool(variable, obj["has_bonus"], cmap),
            has_commission=_coerce_bool(variable, obj["has_commission"], cmap),
        )

    if variable is Variable.EXPERIENCE:
        return Experience(
            experience_required=_coerce_bool(variable, obj["experience_required"], cmap),
            experience_minimum_years=_coerce_years(obj["experience_minimum_years"]),
        )

    if variable is Variable.EDUCATION:
        req_label = _canonical_str(variable, obj["requirement_level"], cmap)
        edu_label = _canonical_str(variable, obj["education_level"], cmap)
        try:
            requirement = RequirementLevel(req_label)
        except ValueError:
            # The map hit an education_level target (e.g. the model swapped
            # the fields); treat as unusable rather than guessing.
            raise SchemaMismatch(
                f"requirement_level value {obj['requirement_level']!r} not usable"
            ) from None
        try:
            education = EducationLevel(edu_label)
        except ValueError:
            education = EducationLevel.UNKNOWN
        # A named degree with no usable requirement cue reads as required;
        # keeps the fragment consistent with the none => none invariant.
        if requirement is RequirementLevel.NONE and education is not EducationLevel.NONE:
            requirement = RequirementLevel.REQUIRED
        return Education(requirement_level=requirement, education_level=education)

    raise ValueError(f"unsupported variable: {variable}")


def merge_fragments(fragments: dict[Variable, Any]) -> JobSignals:
    """Assemble one document from four per-variable fragments."""
    return JobSignals(
        remote_type=fragments[Variable.REMOTE_TYPE],
        remuneration=fragments[Variable.REMUNERATION],
        experience=fragments[Variable.EXPERIENCE],
        education=fragments[Variable.EDUCATION],
    )

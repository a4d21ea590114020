"""Deterministic keyword extraction for all four signal variables.

This is the fully offline baseline: an ordered, case-insensitive pattern
set (shipped as an editable data file) plus negation fusing, which joins a
negating word to the word after it ("not required" becomes "not_required")
so negative patterns get a tokenizable handle and positive word-boundary
patterns stop matching through the negation.

It doubles as the independent oracle for pipeline tests, so it must stay
dependency-free and deterministic across platforms.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

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

NEGATORS = ("without", "doesn't", "don't", "not", "no")
MAX_YEARS = 60.0

_NEGATION_RE = re.compile(r"\b(without|doesn't|don't|not|no)\s+(\S+)", re.IGNORECASE)
_YEAR_NUM_RE = re.compile(
    r"\b(\d+(?:\.\d+)?)\s*(?:\+\s*)?(?:[-–]\s*\d+(?:\.\d+)?\s*|to\s+\d+(?:\.\d+)?\s*)?"
    r"(?:\+\s*)?(?:years?|yrs?)\b",
    re.IGNORECASE,
)
_WORD_NUMBERS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5, "six": 6, "seven": 7,
    "eight": 8, "nine": 9, "ten": 10, "eleven": 11, "twelve": 12, "thirteen": 13,
    "fourteen": 14, "fifteen": 15, "sixteen": 16, "seventeen": 17, "eighteen": 18,
    "nineteen": 19, "twenty": 20,
}
_YEAR_WORD_RE = re.compile(
    r"\b(" + "|".join(_WORD_NUMBERS) + r")\s+(?:\+\s*)?(?:years?|yrs?)\b", re.IGNORECASE
)
# Sentence boundaries: terminal punctuation and bullet markers; a period
# between digits (e.g. "2.5 years") does not end a sentence.
_SENTENCE_SPLIT_RE = re.compile(r"(?<!\d)\.(?!\d)|[!?;•●▪‣*]+")


def preprocess_negations(text: str) -> str:
    """Fuse each negating word with the word that follows it.

    "experience not required" becomes "experience not_required"; fused
    tokens are matched by dedicated negative rules, while the underscore
    stops word-boundary positive patterns from firing through the negation.
    Curly apostrophes are straightened so "don’t" negates like "don't".
    """
    text = text.replace("’", "'")
    return _NEGATION_RE.sub(lambda m: f"{m.group(1)}_{m.group(2)}", text)


@dataclass(frozen=True)
class Rule:
    variable: Variable
    priority: int
    field: str
    value: Any
    pattern: re.Pattern
    cues: tuple[str, ...] = ()


class RuleSet:
    """Ordered per-variable rules; evaluation order is priority, then file order."""

    def __init__(self, rules: list[Rule]) -> None:
        file_order = {id(rule): i for i, rule in enumerate(rules)}
        self._by_variable: dict[Variable, list[Rule]] = {v: [] for v in Variable}
        for rule in rules:
            self._by_variable[rule.variable].append(rule)
        for group in self._by_variable.values():
            group.sort(key=lambda r: (-r.priority, file_order[id(r)]))

    @classmethod
    def from_records(cls, records: list[dict[str, Any]]) -> "RuleSet":
        rules = [
            Rule(
                variable=Variable(rec["variable"]),
                priority=int(rec["priority"]),
                field=rec["effect"]["field"],
                value=rec["effect"]["value"],
                pattern=re.compile(rec["pattern"], re.IGNORECASE),
                cues=tuple(rec.get("cues", ())),
            )
            for rec in records
        ]
        return cls(rules)

    @classmethod
    def from_file(cls, path: str) -> "RuleSet":
        with open(path, encoding="utf-8") as f:
            return cls.from_records(json.load(f))

    @classmethod
    def default(cls) -> "RuleSet":
        text = resources.files("jobsignals.data").joinpath("rules.json").read_text("utf-8")
        return cls.from_records(json.loads(text))

    def rules_for(self, variable: Variable, field: str | None = None) -> list[Rule]:
        group = self._by_variable[variable]
        if field is None:
            return list(group)
        return [r for r in group if r.field == field]

    def first_match(self, variable: Variable, field: str, text: str) -> Rule | None:
        for rule in self._by_variable[variable]:
            if rule.field == field and rule.pattern.search(text):
                return rule
        return None


_default_rules: RuleSet | None = None


def default_rules() -> RuleSet:
    global _default_rules
    if _default_rules is None:
        _default_rules = RuleSet.default()
    return _default_rules


def split_sentences(text: str) -> list[str]:
    return [part.strip() for part in _SENTENCE_SPLIT_RE.split(text) if part.strip()]


def extract_remote(text: str, rules: RuleSet | None = None) -> RemoteType:
    """Work-location arrangement, with hybrid cues taking precedence."""
    rules = rules or default_rules()
    match = rules.first_match(Variable.REMOTE_TYPE, "remote_type", text)
    return RemoteType(match.value) if match else RemoteType.UNKNOWN


def extract_remuneration(text: str, rules: RuleSet | None = None) -> Remuneration:
    """Compensation-structure flags; negated cues suppress their flag."""
    rules = rules or default_rules()
    flags: dict[str, bool] = {}
    for name in ("is_salaried", "is_hourly", "has_bonus", "has_commission"):
        match = rules.first_match(Variable.REMUNERATION, name, text)
        flags[name] = bool(match.value) if match else False
    return Remuneration(**flags)


def _year_matches(text: str) -> list[tuple[int, float]]:
    """(position, years) for every year mention at or under the 60-year cap."""
    found: list[tuple[int, float]] = []
    for match in _YEAR_NUM_RE.finditer(text):
        value = float(match.group(1))
        if value <= MAX_YEARS:
            found.append((match.start(), value))
    for match in _YEAR_WORD_RE.finditer(text):
        found.append((match.start(), float(_WORD_NUMBERS[match.group(1).lower()])))
    found.sort()
    return found


def extract_experience(text: str, rules: RuleSet | None = None) -> Experience:
    """Experience requirement flag and minimum years.

    Required only when a year pattern or experience mention shares a
    sentence with a requirement cue; preference cues alone do not set it.
    A fused "no_experience" forces (False, 0).
    """
    rules = rules or default_rules()
    if rules.first_match(Variable.EXPERIENCE, "no_experience", text):
        return Experience(experience_required=False, experience_minimum_years=0.0)

    required = False
    required_years: float | None = None
    for sentence in split_sentences(text):
        years_here = _year_matches(sentence)
        mentions = bool(years_here) or bool(
            rules.first_match(Variable.EXPERIENCE, "mention", sentence)
        )
        if mentions and rules.first_match(Variable.EXPERIENCE, "requirement_cue", sentence):
            required = True
            if years_here and required_years is None:
                required_years = years_here[0][1]

    if required_years is not None:
        years = required_years
    else:
        all_years = _year_matches(text)
        years = all_years[0][1] if all_years else 0.0
    return Experience(experience_required=required, experience_minimum_years=years)


def extract_education(text: str, rules: RuleSet | None = None) -> Education:
    """Highest-priority degree mention plus required/preferred scoping.

    The sentence containing the winning degree keyword decides the
    requirement level: a preference cue wins, then a requirement cue, and a
    bare degree mention defaults to required.
    """
    rules = rules or default_rules()
    sentences = split_sentences(text)
    for rule in rules.rules_for(Variable.EDUCATION, "education_level"):
        for sentence in sentences:
            if not rule.pattern.search(sentence):
                continue
            if rules.first_match(Variable.EDUCATION, "preference_cue", sentence):
                level = RequirementLevel.PREFERRED
            else:
                level = RequirementLevel.REQUIRED
            return Education(
                requirement_level=level, education_level=EducationLevel(rule.value)
            )
    return Education(
        requirement_level=RequirementLevel.NONE, education_level=EducationLevel.NONE
    )


def extract_signals(text: str, rules: RuleSet | None = None) -> JobSignals:
    """Run negation preprocessing and all four extractors over cleaned text."""
    rules = rules or default_rules()
    prepared = preprocess_negations(text)
    return JobSignals(
        remote_type=extract_remote(prepared, rules),
        remuneration=extract_remuneration(prepared, rules),
        experience=extract_experience(prepared, rules),
        education=extract_education(prepared, rules),
    )

"""Canonical signal schema for extracted job-posting attributes.

A :class:`JobSignals` document holds the four extracted variables: work
location arrangement, remuneration structure, experience requirements, and
education requirements.  Every document always serializes with the full
nested key set; "don't know" is expressed by the ``unknown``/``none``
members, never by omitting a key, so downstream joins and evaluation can
rely on a fixed shape.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

MAX_EXPERIENCE_YEARS = 60.0


class Variable(str, Enum):
    """The four top-level signal variables."""

    REMOTE_TYPE = "remote_type"
    REMUNERATION = "remuneration"
    EXPERIENCE = "experience"
    EDUCATION = "education"


class RemoteType(str, Enum):
    IN_PERSON = "in_person"
    REMOTE = "remote"
    HYBRID = "hybrid"
    UNKNOWN = "unknown"


class RequirementLevel(str, Enum):
    REQUIRED = "required"
    PREFERRED = "preferred"
    NONE = "none"


class EducationLevel(str, Enum):
    NONE = "none"
    HIGH_SCHOOL = "high_school"
    ASSOCIATE = "associate"
    BACHELOR = "bachelor"
    MASTER = "master"
    DOCTORATE = "doctorate"
    PROFESSIONAL = "professional"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Remuneration:
    is_salaried: bool = False
    is_hourly: bool = False
    has_bonus: bool = False
    has_commission: bool = False

    def to_dict(self) -> dict[str, bool]:
        return {
            "is_salaried": self.is_salaried,
            "is_hourly": self.is_hourly,
            "has_bonus": self.has_bonus,
            "has_commission": self.has_commission,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Remuneration":
        return cls(
            is_salaried=bool(data["is_salaried"]),
            is_hourly=bool(data["is_hourly"]),
            has_bonus=bool(data["has_bonus"]),
            has_commission=bool(data["has_commission"]),
        )


@dataclass(frozen=True)
class Experience:
    experience_required: bool = False
    experience_minimum_years: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "experience_required": self.experience_required,
            "experience_minimum_years": float(self.experience_minimum_years),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Experience":
        return cls(
            experience_required=bool(data["experience_required"]),
            experience_minimum_years=float(data["experience_minimum_years"]),
        )


@dataclass(frozen=True)
class Education:
    requirement_level: RequirementLevel = RequirementLevel.NONE
    education_level: EducationLevel = EducationLevel.NONE

    def to_dict(self) -> dict[str, str]:
        return {
            "requirement_level": self.requirement_level.value,
            "education_level": self.education_level.value,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Education":
        return cls(
            requirement_level=RequirementLevel(data["requirement_level"]),
            education_level=EducationLevel(data["education_level"]),
        )


@dataclass(frozen=True)
class JobSignals:
    """One fully populated signal document for a posting."""

    remote_type: RemoteType = RemoteType.UNKNOWN
    remuneration: Remuneration = field(default_factory=Remuneration)
    experience: Experience = field(default_factory=Experience)
    education: Education = field(default_factory=Education)

    def to_dict(self) -> dict[str, Any]:
        return {
            "remote_type": self.remote_type.value,
            "remuneration": self.remuneration.to_dict(),
            "experience": self.experience.to_dict(),
            "education": self.education.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "JobSignals":
        return cls(
            remote_type=RemoteType(data["remote_type"]),
            remuneration=Remuneration.from_dict(data["remuneration"]),
            experience=Experience.from_dict(data["experience"]),
            education=Education.from_dict(data["education"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "JobSignals":
        return cls.from_dict(json.loads(text))

    def fragment(self, variable: Variable) -> dict[str, Any]:
        """Return the given variable's sub-document as a plain dict."""
        if variable is Variable.REMOTE_TYPE:
            return {"remote_type": self.remote_type.value}
        if variable is Variable.REMUNERATION:
            return self.remuneration.to_dict()
        if variable is Variable.EXPERIENCE:
            return self.experience.to_dict()
        if variable is Variable.EDUCATION:
            return self.education.to_dict()
        raise ValueError(f"unsupported variable: {variable}")

    def replace_fragment(self, variable: Variable, fragment: Any) -> "JobSignals":
        """Return a copy with one variable's sub-document replaced."""
        if variable is Variable.REMOTE_TYPE:
            return JobSignals(fragment, self.remuneration, self.experience, self.education)
        if variable is Variable.REMUNERATION:
            return JobSignals(self.remote_type, fragment, self.experience, self.education)
        if variable is Variable.EXPERIENCE:
            return JobSignals(self.remote_type, self.remuneration, fragment, self.education)
        if variable is Variable.EDUCATION:
            return JobSignals(self.remote_type, self.remuneration, self.experience, fragment)
        raise ValueError(f"unsupported variable: {variable}")


@dataclass(frozen=True)
class Violation:
    """One failed schema invariant, as data rather than an exception."""

    field: str
    reason: str


def validate_signals(candidate: JobSignals) -> list[Violation]:
    """Check all schema invariants; an empty list means the document is valid."""
    violations: list[Violation] = []
    if not isinstance(candidate.remote_type, RemoteType):
        violations.append(Violation("remote_type", "not a recognized work-location value"))
    years = candidate.experience.experience_minimum_years
    if not isinstance(years, (int, float)) or years != years:  # NaN check
        violations.append(Violation("experience.experience_minimum_years", "not a number"))
    elif years < 0:
        violations.append(
            Violation("experience.experience_minimum_years", f"negative value {years}")
        )
    elif years > MAX_EXPERIENCE_YEARS:
        violations.append(
            Violation(
                "experience.experience_minimum_years",
                f"{years} exceeds the {MAX_EXPERIENCE_YEARS:.0f}-year cap",
            )
        )
    edu = candidate.education
    if not isinstance(edu.requirement_level, RequirementLevel):
        violations.append(Violation("education.requirement_level", "not a recognized value"))
    if not isinstance(edu.education_level, EducationLevel):
        violations.append(Violation("education.education_level", "not a recognized value"))
    elif (
        isinstance(edu.requirement_level, RequirementLevel)
        and edu.requirement_level is RequirementLevel.NONE
        and edu.education_level is not EducationLevel.NONE
    ):
        violations.append(
            Violation(
                "education",
                "education_level must be none when requirement_level is none",
            )
        )
    return violations


# Fragments used when a variable's annotation falls back or fails outright.
DEFAULT_FRAGMENTS: dict[Variable, Any] = {
    Variable.REMOTE_TYPE: RemoteType.UNKNOWN,
    Variable.REMUNERATION: Remuneration(),
    Variable.EXPERIENCE: Experience(),
    Variable.EDUCATION: Education(),
}

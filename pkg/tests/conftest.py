from __future__ import annotations

import random

import pytest

from jobsignals.signals import (
    Education,
    EducationLevel,
    Experience,
    JobSignals,
    Remuneration,
    RemoteType,
    RequirementLevel,
)


def random_signals(rng: random.Random) -> JobSignals:
    """One random document satisfying every schema invariant."""
    requirement = rng.choice(list(RequirementLevel))
    if requirement is RequirementLevel.NONE:
        education_level = EducationLevel.NONE
    else:
        education_level = rng.choice(list(EducationLevel))
    return JobSignals(
        remote_type=rng.choice(list(RemoteType)),
        remuneration=Remuneration(
            is_salaried=rng.random() < 0.5,
            is_hourly=rng.random() < 0.5,
            has_bonus=rng.random() < 0.5,
            has_commission=rng.random() < 0.5,
        ),
        experience=Experience(
            experience_required=rng.random() < 0.5,
            experience_minimum_years=round(rng.uniform(0, 60), 1),
        ),
        education=Education(requirement_level=requirement, education_level=education_level),
    )


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20260808)

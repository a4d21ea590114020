"""Prompt construction from per-variable template files.

Each variable has its own template (an editable data file) with two
placeholders, ``{context}`` and ``{acceptable_values}``.  Substitution is
plain string replacement, so JSON braces in the templates need no escaping.
Rendering is deterministic: equal inputs yield byte-identical prompts.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .errors import UnknownVariable
from .signals import EducationLevel, RemoteType, RequirementLevel, Variable

CONTEXT_PLACEHOLDER = "{context}"
VALUES_PLACEHOLDER = "{acceptable_values}"

# Per-field acceptable values, rendered into every prompt.
ACCEPTABLE_VALUES: dict[Variable, dict[str, list[str]]] = {
    Variable.REMOTE_TYPE: {"remote_type": [m.value for m in RemoteType]},
    Variable.REMUNERATION: {
        "is_salaried": ["true", "false"],
        "is_hourly": ["true", "false"],
        "has_bonus": ["true", "false"],
        "has_commission": ["true", "false"],
    },
    Variable.EXPERIENCE: {
        "experience_required": ["true", "false"],
        "experience_minimum_years": ["a number of years >= 0, 0 if not stated"],
    },
    Variable.EDUCATION: {
        "requirement_level": [m.value for m in RequirementLevel],
        "education_level": [m.value for m in EducationLevel],
    },
}


def render_acceptable_values(variable: Variable) -> str:
    lines = [
        f"- {field}: {', '.join(values)}"
        for field, values in ACCEPTABLE_VALUES[variable].items()
    ]
    return "\n".join(lines)


class PromptTemplate:
    """One variable's instruction template with placeholder substitution."""

    def __init__(self, variable: Variable, template: str) -> None:
        if CONTEXT_PLACEHOLDER not in template or VALUES_PLACEHOLDER not in template:
            raise ValueError(
                f"template for {variable.value} must contain "
                f"{CONTEXT_PLACEHOLDER} and {VALUES_PLACEHOLDER}"
            )
        self.variable = variable
        self.template = template

    @classmethod
    def load(cls, variable: Variable, prompt_dir: str | None = None) -> "PromptTemplate":
        if prompt_dir is not None:
            text = Path(prompt_dir, f"{variable.value}.txt").read_text("utf-8")
        else:
            text = (
                resources.files("jobsignals.data")
                .joinpath(f"prompts/{variable.value}.txt")
                .read_text("utf-8")
            )
        return cls(variable, text)

    def render(self, context: str) -> str:
        values = render_acceptable_values(self.variable)
        return self.template.replace(CONTEXT_PLACEHOLDER, context).replace(
            VALUES_PLACEHOLDER, values
        )


_template_cache: dict[tuple[str, str | None], PromptTemplate] = {}


def build_prompt(variable: Variable, context: str, prompt_dir: str | None = None) -> str:
    """Render the variable's template around the retrieved context."""
    if not isinstance(variable, Variable):
        try:
            variable = Variable(variable)
        except ValueError:
            raise UnknownVariable(f"no prompt template for {variable!r}") from None
    if not context:
        raise ValueError("context must be non-empty")
    key = (variable.value, prompt_dir)
    template = _template_cache.get(key)
    if template is None:
        template = PromptTemplate.load(variable, prompt_dir)
        _template_cache[key] = template
    return template.render(context)


CORRECTIVE_INSTRUCTION = (
    "\n\nYour previous reply was not a single valid JSON object with the "
    "required keys and acceptable values. Reply again with exactly one JSON "
    "object in the requested shape and nothing else."
)

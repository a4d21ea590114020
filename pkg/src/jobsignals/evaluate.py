"""Composite-label metrics, per-sub-variable accuracy, splits, and reports.

Each variable's nested fragment is serialized canonically (sorted keys,
years at one decimal place) and treated as a single classification label,
so a prediction only counts as correct when every sub-field matches.  The
report carries both weighted and macro averages because either averaging
convention is defensible; sub-variable accuracies unnest the documents to
show where composite labels lose.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence, TypeVar

from .annotate import AnnotationRecord, AnnotationStatus
from .errors import InsufficientData, JoinFailure
from .ingest import CleanPosting
from .signals import JobSignals, Variable, validate_signals

T = TypeVar("T")

YEARS_TOLERANCE = 0.01

SUB_VARIABLES = (
    "remote_type",
    "is_salaried",
    "is_hourly",
    "has_commission",
    "has_bonus",
    "experience_required",
    "experience_minimum_years",
    "education_requirement_level",
    "education_level",
)


@dataclass(frozen=True)
class LabeledPair:
    posting_id: str
    truth: JobSignals
    predicted: JobSignals

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "LabeledPair":
        pair = cls(
            posting_id=str(data["id"]),
            truth=JobSignals.from_dict(data["truth"]),
            predicted=JobSignals.from_dict(data["predicted"]),
        )
        for name, doc in (("truth", pair.truth), ("predicted", pair.predicted)):
            violations = validate_signals(doc)
            if violations:
                raise ValueError(f"{name} document for {pair.posting_id} invalid: {violations}")
        return pair

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.posting_id,
            "truth": self.truth.to_dict(),
            "predicted": self.predicted.to_dict(),
        }


def composite_label(signals: JobSignals, variable: Variable) -> str:
    """Canonical string form of one variable's fragment.

    Sorted keys, compact separators, years rendered with one decimal place;
    semantically equal fragments always produce identical strings.
    """
    fragment = signals.fragment(variable)
    if variable is Variable.EXPERIENCE:
        fragment = dict(fragment)
        fragment["experience_minimum_years"] = float(
            f"{fragment['experience_minimum_years']:.1f}"
        )
    return json.dumps(fragment, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class ConfusionMatrix:
    classes: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]  # counts[i][j]: truth class i, predicted j

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)


def confusion_matrix(truth: Sequence[str], predicted: Sequence[str]) -> ConfusionMatrix:
    classes = tuple(sorted(set(truth) | set(predicted)))
    index = {label: i for i, label in enumerate(classes)}
    counts = [[0] * len(classes) for _ in classes]
    for t, p in zip(truth, predicted):
        counts[index[t]][index[p]] += 1
    return ConfusionMatrix(classes=classes, counts=tuple(tuple(row) for row in counts))


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def matthews_corrcoef(cm: ConfusionMatrix) -> float:
    """Multiclass MCC in correlation form; zero denominator defines MCC = 0."""
    k = len(cm.classes)
    s = cm.total
    correct = sum(cm.counts[i][i] for i in range(k))
    truth_counts = [sum(cm.counts[i]) for i in range(k)]
    pred_counts = [sum(cm.counts[i][j] for i in range(k)) for j in range(k)]
    numerator = correct * s - sum(p * t for p, t in zip(pred_counts, truth_counts))
    denominator = math.sqrt(
        (s * s - sum(p * p for p in pred_counts)) * (s * s - sum(t * t for t in truth_counts))
    )
    return _safe_div(numerator, denominator)


def metrics_from_confusion(cm: ConfusionMatrix) -> dict[str, dict[str, float]]:
    k = len(cm.classes)
    truth_counts = [sum(cm.counts[i]) for i in range(k)]
    pred_counts = [sum(cm.counts[i][j] for i in range(k)) for j in range(k)]
    precision = [_safe_div(cm.counts[i][i], pred_counts[i]) for i in range(k)]
    recall = [_safe_div(cm.counts[i][i], truth_counts[i]) for i in range(k)]
    f1 = [
        _safe_div(2 * precision[i] * recall[i], precision[i] + recall[i]) for i in range(k)
    ]
    total = cm.total
    mcc = matthews_corrcoef(cm)

    def _weighted(values: list[float]) -> float:
        return sum(v * t for v, t in zip(values, truth_counts)) / total

    def _macro(values: list[float]) -> float:
        return sum(values) / k

    return {
        "weighted": {
            "f1": _weighted(f1),
            "precision": _weighted(precision),
            "recall": _weighted(recall),
            "mcc": mcc,
        },
        "macro": {
            "f1": _macro(f1),
            "precision": _macro(precision),
            "recall": _macro(recall),
            "mcc": mcc,
        },
    }


def metrics(pairs: Sequence[LabeledPair], variable: Variable) -> dict[str, dict[str, float]]:
    """Composite-label precision/recall/F1/MCC under both averaging modes."""
    if len(pairs) < 2:
        raise InsufficientData(f"need at least 2 pairs, got {len(pairs)}")
    truth = [composite_label(p.truth, variable) for p in pairs]
    predicted = [composite_label(p.predicted, variable) for p in pairs]
    return metrics_from_confusion(confusion_matrix(truth, predicted))


def _unnest(signals: JobSignals) -> dict[str, Any]:
    return {
        "remote_type": signals.remote_type.value,
        "is_salaried": signals.remuneration.is_salaried,
        "is_hourly": signals.remuneration.is_hourly,
        "has_commission": signals.remuneration.has_commission,
        "has_bonus": signals.remuneration.has_bonus,
        "experience_required": signals.experience.experience_required,
        "experience_minimum_years": signals.experience.experience_minimum_years,
        "education_requirement_level": signals.education.requirement_level.value,
        "education_level": signals.education.education_level.value,
    }


def sub_variable_accuracy(pairs: Sequence[LabeledPair]) -> dict[str, float]:
    """Percent agreement per unnested field; years compared with 0.01 tolerance."""
    if not pairs:
        raise InsufficientData("need at least 1 pair")
    matches = {name: 0 for name in SUB_VARIABLES}
    for pair in pairs:
        truth = _unnest(pair.truth)
        predicted = _unnest(pair.predicted)
        for name in SUB_VARIABLES:
            if name == "experience_minimum_years":
                if abs(truth[name] - predicted[name]) <= YEARS_TOLERANCE:
                    matches[name] += 1
            elif truth[name] == predicted[name]:
                matches[name] += 1
    return {name: 100.0 * matches[name] / len(pairs) for name in SUB_VARIABLES}


def train_test_split(
    records: Sequence[T], ratio: float, seed: int
) -> tuple[list[T], list[T]]:
    """Seeded uniform split; |train| = round(ratio * n); disjoint and exhaustive."""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    n = len(records)
    train_size = int(ratio * n + 0.5)
    rng = random.Random(seed)
    train_indices = set(rng.sample(range(n), train_size))
    train = [records[i] for i in range(n) if i in train_indices]
    test = [records[i] for i in range(n) if i not in train_indices]
    return train, test


def export_training_data(
    annotated: Iterable[AnnotationRecord],
    postings: dict[str, CleanPosting],
    variable: Variable,
) -> tuple[list[dict[str, str]], int]:
    """Training examples {"text", "label"} for one variable.

    Records whose variable status is not ``ok`` are skipped; the skip count
    is returned for logging.  Dangling posting ids raise
    :class:`JoinFailure`.
    """
    examples: list[dict[str, str]] = []
    skipped = 0
    for record in annotated:
        if record.status.get(variable) is not AnnotationStatus.OK:
            skipped += 1
            continue
        posting = postings.get(record.posting_id)
        if posting is None:
            raise JoinFailure(f"annotation {record.posting_id!r} has no matching posting")
        examples.append(
            {"text": posting.text, "label": composite_label(record.signals, variable)}
        )
    return examples, skipped


@dataclass(frozen=True)
class EvalReport:
    per_variable: dict[str, dict[str, dict[str, float]]]
    sub_variable: dict[str, float]
    counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "per_variable": self.per_variable,
            "sub_variable": self.sub_variable,
            "counts": self.counts,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EvalReport":
        return cls(
            per_variable=data["per_variable"],
            sub_variable=data["sub_variable"],
            counts=data.get("counts", {}),
        )


def evaluate_pairs(pairs: Sequence[LabeledPair]) -> EvalReport:
    """Full report: composite metrics per variable plus sub-variable accuracy."""
    per_variable = {v.value: metrics(pairs, v) for v in Variable}
    return EvalReport(
        per_variable=per_variable,
        sub_variable=sub_variable_accuracy(pairs),
        counts={"pairs": len(pairs)},
    )


_METRIC_ROWS = ("f1", "precision", "recall", "mcc")
_SUB_VARIABLE_TITLES = {
    "remote_type": "Remote Type",
    "is_salaried": "Is Salaried",
    "is_hourly": "Is Hourly",
    "has_commission": "Has Commission",
    "has_bonus": "Has Bonus",
    "experience_required": "Experience Required",
    "experience_minimum_years": "Experience Level",
    "education_requirement_level": "Education Required",
    "education_level": "Education Level",
}


def render_report(report: EvalReport, averaging: str = "weighted") -> str:
    """Two aligned text tables: metrics per variable, accuracy per sub-variable."""
    variables = [v.value for v in Variable]
    header = ["Metric"] + [v for v in variables]
    widths = [max(len(header[0]), 9)] + [max(len(v), 6) for v in variables]
    lines = [f"Metrics per variable ({averaging} averaging)"]
    lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for metric_name in _METRIC_ROWS:
        cells = [metric_name.upper() if metric_name == "mcc" else metric_name.capitalize()]
        for variable in variables:
            cells.append(f"{report.per_variable[variable][averaging][metric_name]:.2f}")
        lines.append("  ".join(c.ljust(w) for c, w in zip(cells, widths)))
    lines.append("")
    lines.append("Accuracy per sub-variable")
    name_width = max(len(t) for t in _SUB_VARIABLE_TITLES.values())
    for name in SUB_VARIABLES:
        title = _SUB_VARIABLE_TITLES[name]
        lines.append(f"{title.ljust(name_width)}  {report.sub_variable[name]:.1f}")
    return "\n".join(lines)


def report_to_json(report: EvalReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2)


def report_from_json(text: str) -> EvalReport:
    return EvalReport.from_dict(json.loads(text))

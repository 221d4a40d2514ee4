"""Evaluation harness over annotator label files.

The labels encode human judgments explicitly: which labeled ground-truth
insights were matched by extracted ones (the containment decision is
manual, so the mapping is an input), and per-insight correct/incorrect
marks for evidence, data context, and topic assignment. The harness only
does the arithmetic, exactly, as rationals plus one-decimal percentages.

Labels file (JSON):
    {
      "labeled_insights": [
        {"label_id": "L1", "description": "...", "matched_insight": "i3" | null},
        ...
      ],
      "evidence_marks": {"i1": true, ...},
      "context_marks": {"i1": true, ...},
      "topic_marks": {"i1": false, ...}
    }
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional


class LabelsError(ValueError):
    pass


def percent_1dp(ratio: Fraction) -> str:
    """Exact round-half-up of ratio*100 to one decimal, as text."""
    tenths_scaled = ratio * 1000 + Fraction(1, 2)
    tenths = tenths_scaled.numerator // tenths_scaled.denominator
    return f"{tenths // 10}.{tenths % 10}"


def _metric(correct: int, total: int) -> dict:
    entry: dict = {"correct": correct, "total": total}
    entry["percent"] = percent_1dp(Fraction(correct, total)) if total else None
    return entry


def _check_marks(name: str, marks, known: Optional[set]) -> dict:
    if not isinstance(marks, Mapping):
        raise LabelsError(f"{name} must be an object of insight_id -> bool")
    for insight_id, value in marks.items():
        if not isinstance(value, bool):
            raise LabelsError(f"{name}[{insight_id!r}] must be true or false")
        if known is not None and insight_id not in known:
            raise LabelsError(f"{name} references unknown insight id {insight_id!r}")
    return dict(marks)


def evaluate_labels(labels: Mapping, known_insight_ids: Optional[set] = None) -> dict:
    """Compute the metrics report; raises LabelsError on malformed labels."""
    labeled = labels.get("labeled_insights", [])
    if not isinstance(labeled, list):
        raise LabelsError("labeled_insights must be a list")
    matched = 0
    for i, item in enumerate(labeled):
        if not isinstance(item, Mapping):
            raise LabelsError(f"labeled_insights[{i}] must be an object")
        target = item.get("matched_insight")
        if target is None:
            continue
        if not isinstance(target, str):
            raise LabelsError(f"labeled_insights[{i}].matched_insight must be an id or null")
        if known_insight_ids is not None and target not in known_insight_ids:
            raise LabelsError(
                f"labeled_insights[{i}] references unknown insight id {target!r}"
            )
        matched += 1

    report = {"coverage": _metric(matched, len(labeled))}
    for key, metric_name in (
        ("evidence_marks", "evidence_accuracy"),
        ("context_marks", "context_accuracy"),
        ("topic_marks", "topic_accuracy"),
    ):
        marks = _check_marks(key, labels.get(key, {}), known_insight_ids)
        report[metric_name] = _metric(sum(1 for v in marks.values() if v), len(marks))
    return report


def load_labels(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        labels = json.load(fh)
    if not isinstance(labels, dict):
        raise LabelsError("labels file must contain a JSON object")
    return labels


def snapshot_insight_ids(snapshot: Mapping) -> set:
    insights = snapshot.get("insights", [])
    return {i["insight_id"] for i in insights if isinstance(i, Mapping) and "insight_id" in i}


def render_report(report: Mapping) -> str:
    lines = []
    for name in ("coverage", "evidence_accuracy", "context_accuracy", "topic_accuracy"):
        entry = report[name]
        if entry["total"] == 0:
            lines.append(f"{name}: n/a (no labels)")
        else:
            lines.append(
                f"{name}: {entry['correct']}/{entry['total']} = {entry['percent']}%"
            )
    return "\n".join(lines)

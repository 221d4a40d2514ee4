"""Interestingness evaluation: semantic and statistical significance.

The semantic side asks the LLM for a 1-to-5 judgment with prior session
scores in the prompt for consistency. The statistical side maps each
insight category to a metric computed directly from the table, then turns
the metric value into a 1-to-5 score through half-open threshold ladders.
The two combine as s_final = round_half_up(s_sem*omega + s_stat*(1-omega)).

The ladder cutoffs are calibrated defaults, overridable via configuration;
they concretize heuristics the source system left unspecified.
"""

from __future__ import annotations

import logging
import re
import statistics
from dataclasses import dataclass
from datetime import date, datetime
from typing import Mapping, Optional, Sequence

from .dataset import DataTable, grouped_means
from .gateway import ChatMessage, ChatRequest, GatewayError
from .model import DataContext, DatasetProfile

logger = logging.getLogger(__name__)

METRICS = (
    "pearson_r",
    "linear_r2",
    "max_abs_z",
    "coeff_variation",
    "top_gap_ratio",
    "top_share",
    "relative_diff",
)

# (upper_bound, score) pairs scanned in order; the final bucket is open-ended.
DEFAULT_LADDERS: dict[str, tuple[tuple[float, int], ...]] = {
    "pearson_r": ((0.2, 1), (0.4, 2), (0.6, 3), (0.8, 4)),
    "linear_r2": ((0.2, 1), (0.4, 2), (0.6, 3), (0.8, 4)),
    "max_abs_z": ((1.5, 1), (2.0, 2), (2.5, 3), (3.0, 4)),
    "coeff_variation": ((0.1, 1), (0.25, 2), (0.5, 3), (1.0, 4)),
    "top_gap_ratio": ((0.05, 1), (0.15, 2), (0.3, 3), (0.5, 4)),
    "relative_diff": ((0.05, 1), (0.15, 2), (0.3, 3), (0.5, 4)),
    "top_share": ((0.3, 1), (0.45, 2), (0.6, 3), (0.8, 4)),
}

DEFAULT_STAT_SCORE = 3


@dataclass(frozen=True)
class MetricReading:
    metric: str
    value: float
    sample_size: int

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")


@dataclass(frozen=True)
class SemanticJudgment:
    value: int
    rationale: str
    clamped: bool = False
    defaulted: bool = False


def pearson_r(xs: Sequence[float], ys: Sequence[float]) -> Optional[float]:
    if len(xs) != len(ys) or len(xs) < 2:
        return None
    try:
        return statistics.correlation(xs, ys)
    except statistics.StatisticsError:
        return None  # constant input has no defined correlation


def linear_r2(xs: Sequence[float], ys: Sequence[float]) -> Optional[float]:
    # For a simple OLS fit, r-squared equals the squared correlation.
    r = pearson_r(xs, ys)
    return None if r is None else r * r


def max_abs_z(values: Sequence[float]) -> Optional[float]:
    if len(values) < 2:
        return None
    mean = statistics.fmean(values)
    sd = statistics.pstdev(values)
    if sd == 0:
        return None
    return max(abs(v - mean) for v in values) / sd


def coeff_variation(values: Sequence[float]) -> Optional[float]:
    if len(values) < 2:
        return None
    mean = statistics.fmean(values)
    if mean == 0:
        return None
    return statistics.pstdev(values) / abs(mean)


def top_gap_ratio(aggregates: Sequence[float]) -> Optional[float]:
    if len(aggregates) < 2:
        return None
    ordered = sorted(aggregates, reverse=True)
    if ordered[0] == 0:
        return None
    return (ordered[0] - ordered[1]) / abs(ordered[0])


def top_share(values: Sequence) -> Optional[float]:
    if not values:
        return None
    counts: dict = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return max(counts.values()) / len(values)


def relative_diff(a: float, b: float) -> Optional[float]:
    denom = max(abs(a), abs(b))
    if denom == 0:
        return None
    return abs(a - b) / denom


def _axis_float(value) -> float:
    if isinstance(value, datetime):
        return value.timestamp()
    if isinstance(value, date):
        return float(value.toordinal())
    return float(value)


def _paired(table: DataTable, a: str, b: str) -> tuple[list, list]:
    """Row-aligned non-null value pairs for two columns."""
    xs, ys = [], []
    for row in table.rows():
        if row[a] is None or row[b] is None:
            continue
        xs.append(row[a])
        ys.append(row[b])
    return xs, ys


def _single(table: DataTable, a: str) -> list:
    return [row[a] for row in table.rows() if row[a] is not None]


def _ordered_context(context: DataContext, profile: DatasetProfile) -> list[str]:
    # Schema order makes metric column selection deterministic even though
    # the context stores attributes as a set.
    return [name for name in profile.attribute_names() if name in context.attributes]


def _pick(names: Sequence[str], profile: DatasetProfile, kinds: tuple[str, ...]) -> list[str]:
    return [n for n in names if profile.kind_of(n) in kinds]


def statistical_metric(
    category: str,
    context: DataContext,
    table: DataTable,
    profile: DatasetProfile,
) -> tuple[Optional[MetricReading], str]:
    """Compute the category's metric; (None, reason) when not computable."""
    names = _ordered_context(context, profile)
    numeric = _pick(names, profile, ("numeric",))
    temporal = _pick(names, profile, ("temporal",))
    grouping = _pick(names, profile, ("categorical", "boolean"))

    if category == "correlation":
        if len(numeric) < 2:
            return None, "correlation needs two numeric attributes in context"
        xs, ys = _paired(table, numeric[0], numeric[1])
        value = pearson_r(xs, ys)
        if value is None:
            return None, f"correlation undefined over {numeric[0]}, {numeric[1]}"
        return (
            MetricReading("pearson_r", value, len(xs)),
            f"pearson_r over {numeric[0]}, {numeric[1]} (n={len(xs)})",
        )

    if category == "trend":
        if not numeric:
            return None, "trend needs a numeric attribute in context"
        if temporal:
            axis_name, value_name = temporal[0], numeric[0]
            raw_x, ys = _paired(table, axis_name, value_name)
            xs = [_axis_float(v) for v in raw_x]
        elif len(numeric) >= 2:
            axis_name, value_name = numeric[0], numeric[1]
            xs, ys = _paired(table, axis_name, value_name)
        else:
            axis_name, value_name = "row order", numeric[0]
            ys = _single(table, numeric[0])
            xs = list(range(len(ys)))
        value = linear_r2(xs, ys)
        if value is None:
            return None, f"trend fit undefined over {axis_name}, {value_name}"
        return (
            MetricReading("linear_r2", value, len(xs)),
            f"linear_r2 of {value_name} vs {axis_name} (n={len(xs)})",
        )

    if category == "outlier":
        if not numeric:
            return None, "outlier needs a numeric attribute in context"
        values = _single(table, numeric[0])
        value = max_abs_z(values)
        if value is None:
            return None, f"z-score undefined over {numeric[0]}"
        return (
            MetricReading("max_abs_z", value, len(values)),
            f"max_abs_z over {numeric[0]} (n={len(values)})",
        )

    if category == "distribution":
        if not numeric:
            return None, "distribution needs a numeric attribute in context"
        values = _single(table, numeric[0])
        value = coeff_variation(values)
        if value is None:
            return None, f"coefficient of variation undefined over {numeric[0]}"
        return (
            MetricReading("coeff_variation", value, len(values)),
            f"coeff_variation over {numeric[0]} (n={len(values)})",
        )

    if category == "extremum":
        if grouping and numeric:
            means = grouped_means(table, numeric[0], grouping[0])
            aggregates = list(means.values())
            value = top_gap_ratio(aggregates)
            if value is None:
                return None, f"top gap undefined over {numeric[0]} by {grouping[0]}"
            return (
                MetricReading("top_gap_ratio", value, len(aggregates)),
                f"top_gap_ratio of mean {numeric[0]} by {grouping[0]} ({len(aggregates)} groups)",
            )
        if numeric:
            values = _single(table, numeric[0])
            value = top_gap_ratio(values)
            if value is None:
                return None, f"top gap undefined over {numeric[0]}"
            return (
                MetricReading("top_gap_ratio", value, len(values)),
                f"top_gap_ratio over {numeric[0]} values (n={len(values)})",
            )
        return None, "extremum needs a numeric attribute in context"

    if category == "proportion":
        if not grouping:
            return None, "proportion needs a categorical attribute in context"
        values = _single(table, grouping[0])
        value = top_share(values)
        if value is None:
            return None, f"share undefined over {grouping[0]}"
        return (
            MetricReading("top_share", value, len(values)),
            f"top_share of {grouping[0]} (n={len(values)})",
        )

    if category == "difference":
        if grouping and numeric:
            means = grouped_means(table, numeric[0], grouping[0])
            if len(means) < 2:
                return None, f"difference needs two groups of {grouping[0]}"
            ordered = sorted(means.values())
            value = relative_diff(ordered[-1], ordered[0])
            if value is None:
                return None, f"relative difference undefined over {numeric[0]} by {grouping[0]}"
            return (
                MetricReading("relative_diff", value, len(means)),
                f"relative_diff of mean {numeric[0]} across {grouping[0]} groups",
            )
        if len(numeric) >= 2:
            a = _single(table, numeric[0])
            b = _single(table, numeric[1])
            if not a or not b:
                return None, "difference needs non-empty numeric columns"
            value = relative_diff(statistics.fmean(a), statistics.fmean(b))
            if value is None:
                return None, f"relative difference undefined over {numeric[0]}, {numeric[1]}"
            return (
                MetricReading("relative_diff", value, 2),
                f"relative_diff of mean {numeric[0]} vs mean {numeric[1]}",
            )
        return None, "difference needs compared aggregates in context"

    return None, f"no metric defined for category {category!r}"


def statistical_score(
    reading: Optional[MetricReading],
    ladders: Optional[Mapping[str, Sequence[tuple[float, int]]]] = None,
) -> int:
    if reading is None:
        return DEFAULT_STAT_SCORE
    table = (ladders or DEFAULT_LADDERS)[reading.metric]
    value = abs(reading.value) if reading.metric == "pearson_r" else reading.value
    for upper, score in table:
        if value < upper:
            return score
    return 5


_LEADING_INT = re.compile(r"-?\d+")


def parse_semantic_reply(reply: str) -> Optional[tuple[int, str, bool]]:
    """(score, rationale, clamped) from a judgment reply, or None."""
    match = _LEADING_INT.search(reply)
    if match is None:
        return None
    raw = int(match.group())
    clamped = raw < 1 or raw > 5
    score = max(1, min(5, raw))
    rationale = reply[match.end():].strip().lstrip("-:,. ").strip()
    return score, rationale, clamped


def semantic_score(
    provider,
    prompt: str,
    repair_prompt: str = "Reply with a single integer score from 1 to 5, optionally followed by a short rationale.",
) -> SemanticJudgment:
    """Ask the LLM for s_sem; one repair re-prompt, then default 3."""
    messages = [ChatMessage(role="user", content=prompt)]
    for attempt in range(2):
        try:
            response = provider.complete(
                ChatRequest(channel="semantic_score", messages=tuple(messages))
            )
        except GatewayError as exc:
            logger.warning("semantic score provider failure: %s", exc)
            return SemanticJudgment(value=3, rationale="defaulted", defaulted=True)
        parsed = parse_semantic_reply(response.content)
        if parsed is not None:
            score, rationale, clamped = parsed
            return SemanticJudgment(value=score, rationale=rationale, clamped=clamped)
        if attempt == 0:
            messages.append(ChatMessage(role="assistant", content=response.content))
            messages.append(ChatMessage(role="user", content=repair_prompt))
    return SemanticJudgment(value=3, rationale="defaulted", defaulted=True)

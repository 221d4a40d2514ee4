"""CSV ingestion, attribute kind inference, and dataset description.

Inference thresholds: a column is numeric/temporal when at least 95% of its
non-null cells parse, boolean when every non-null cell is in
{true, false, 0, 1}, categorical when the distinct count stays under
max(20, 5% of rows), otherwise text. Kind depends on the value multiset
only, never on row order.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass
from datetime import date, datetime
from typing import Callable, Iterable, Optional

from .model import Attribute, DatasetProfile

NULL_TOKENS = {"", "na", "n/a", "null", "none", "nan"}
PARSE_RATE_THRESHOLD = 0.95
BOOL_TOKENS = {"true", "false", "0", "1"}
CATEGORICAL_BASE_LIMIT = 20
CATEGORICAL_ROW_SHARE = 0.05
PREVIEW_ROWS = 5


class IngestError(ValueError):
    """Raised when an upload cannot be parsed into a table."""


@dataclass(frozen=True)
class ColumnStats:
    attribute: str
    count: int
    nulls: int
    min: Optional[float] = None
    max: Optional[float] = None
    mean: Optional[float] = None
    stddev: Optional[float] = None
    distinct_count: Optional[int] = None
    top_value: Optional[str] = None
    top_share: Optional[float] = None


class DataTable:
    """Read-only parsed table: raw text cells plus typed per-column values.

    Typed values are floats for numeric columns, dates for temporal, bools
    for boolean, and the raw strings otherwise; unparseable or null cells
    are None.
    """

    def __init__(self, name: str, columns: list[str], raw_rows: list[list[str]]):
        self.name = name
        self.columns = list(columns)
        self.raw_rows = raw_rows
        self.kinds: dict[str, str] = {}
        self.values: dict[str, list] = {}
        self._infer()

    @property
    def row_count(self) -> int:
        return len(self.raw_rows)

    def _infer(self) -> None:
        for idx, col in enumerate(self.columns):
            cells = [row[idx] for row in self.raw_rows]
            kind = infer_kind(cells)
            self.kinds[col] = kind
            self.values[col] = [parse_cell(c, kind) for c in cells]

    def rows(self) -> Iterable[dict]:
        for i in range(self.row_count):
            yield {col: self.values[col][i] for col in self.columns}

    def column_values(self, attribute: str) -> list:
        if attribute not in self.values:
            raise KeyError(f"unknown attribute {attribute!r}")
        return self.values[attribute]


def _is_null(cell: str) -> bool:
    return cell.strip().lower() in NULL_TOKENS


def _parse_number(cell: str) -> Optional[float]:
    try:
        value = float(cell.strip())
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def _parse_date(cell: str) -> Optional[date]:
    text = cell.strip()
    try:
        return date.fromisoformat(text)
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(text).date()
    except ValueError:
        return None


def infer_kind(cells: list[str]) -> str:
    """Classify a column from its raw cells. Order-insensitive."""
    present = [c for c in cells if not _is_null(c)]
    if not present:
        return "text"
    lowered = {c.strip().lower() for c in present}
    if lowered <= BOOL_TOKENS:
        return "boolean"
    n = len(present)
    numeric_ok = sum(1 for c in present if _parse_number(c) is not None)
    if numeric_ok / n >= PARSE_RATE_THRESHOLD:
        return "numeric"
    temporal_ok = sum(1 for c in present if _parse_date(c) is not None)
    if temporal_ok / n >= PARSE_RATE_THRESHOLD:
        return "temporal"
    distinct = len(set(present))
    if distinct <= max(CATEGORICAL_BASE_LIMIT, CATEGORICAL_ROW_SHARE * len(cells)):
        return "categorical"
    return "text"


def parse_cell(cell: str, kind: str):
    if _is_null(cell):
        return None
    if kind == "numeric":
        return _parse_number(cell)
    if kind == "temporal":
        return _parse_date(cell)
    if kind == "boolean":
        return cell.strip().lower() in {"true", "1"}
    return cell


def column_stats(table: DataTable, attribute: str) -> ColumnStats:
    kind = table.kinds[attribute]
    raw = [row[table.columns.index(attribute)] for row in table.raw_rows]
    nulls = sum(1 for c in raw if _is_null(c))
    count = len(raw)
    if kind == "numeric":
        nums = [v for v in table.column_values(attribute) if v is not None]
        if not nums:
            return ColumnStats(attribute=attribute, count=count, nulls=nulls)
        mean = sum(nums) / len(nums)
        variance = sum((v - mean) ** 2 for v in nums) / len(nums)
        return ColumnStats(
            attribute=attribute,
            count=count,
            nulls=nulls,
            min=min(nums),
            max=max(nums),
            mean=mean,
            stddev=math.sqrt(variance),
        )
    present = [c.strip() for c in raw if not _is_null(c)]
    if not present:
        return ColumnStats(attribute=attribute, count=count, nulls=nulls)
    counts = Counter(present)
    # Ties broken by lexicographic order so stats are shuffle-insensitive.
    best = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ColumnStats(
        attribute=attribute,
        count=count,
        nulls=nulls,
        distinct_count=len(counts),
        top_value=best[0],
        top_share=best[1] / len(present),
    )


def _fmt(x: float) -> str:
    return format(x, ".6g")


def _describe_column(table: DataTable, attribute: str) -> str:
    kind = table.kinds[attribute]
    stats = column_stats(table, attribute)
    if kind == "numeric" and stats.min is not None:
        return (
            f"{attribute} (numeric, range {_fmt(stats.min)} to {_fmt(stats.max)}, "
            f"mean {_fmt(stats.mean)})"
        )
    if kind == "temporal":
        dates = [v for v in table.column_values(attribute) if v is not None]
        if dates:
            return f"{attribute} (temporal, {min(dates).isoformat()} to {max(dates).isoformat()})"
        return f"{attribute} (temporal)"
    if kind == "categorical" and stats.distinct_count is not None:
        share = f"{stats.top_share * 100:.1f}%"
        return (
            f"{attribute} (categorical, {stats.distinct_count} distinct, "
            f'most common "{stats.top_value}" at {share})'
        )
    if kind == "boolean":
        return f"{attribute} (boolean)"
    return f"{attribute} (text)"


def build_description(name: str, table: DataTable) -> str:
    """Deterministic templated description of the dataset for agent prompts."""
    cols = "; ".join(_describe_column(table, c) for c in table.columns)
    return (
        f'Dataset "{name}" contains {table.row_count} rows and '
        f"{len(table.columns)} columns. Columns: {cols}."
    )


def ingest_csv(data: bytes, name: str) -> tuple[DatasetProfile, DataTable]:
    """Parse an uploaded CSV into a profile and a table handle.

    The header row is required, attribute names must be unique, and every
    data row must have exactly as many cells as the header (tolerance 0).
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise IngestError(f"upload is not valid UTF-8: {exc}") from exc
    try:
        rows = list(csv.reader(io.StringIO(text)))
    except csv.Error as exc:
        raise IngestError(f"malformed CSV: {exc}") from exc
    rows = [r for r in rows if r]  # csv yields [] for blank trailing lines
    if not rows:
        raise IngestError("empty file")
    header = [h.strip() for h in rows[0]]
    if any(not h for h in header):
        raise IngestError("header contains an empty attribute name")
    if len(set(header)) != len(header):
        raise IngestError("duplicate attribute names in header")
    body = rows[1:]
    if not body:
        raise IngestError("no data rows after header")
    for line_no, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise IngestError(
                f"row {line_no} has {len(row)} cells, expected {len(header)}"
            )

    table = DataTable(name=name, columns=header, raw_rows=body)
    attributes = tuple(
        Attribute(
            name=col,
            kind=table.kinds[col],
            null_count=sum(1 for row in body if _is_null(row[i])),
        )
        for i, col in enumerate(header)
    )
    preview = tuple(tuple(cell for cell in row) for row in body[:PREVIEW_ROWS])
    profile = DatasetProfile(
        name=name,
        attributes=attributes,
        row_count=len(body),
        preview_rows=preview,
        nl_description=build_description(name, table),
    )
    return profile, table


@dataclass(frozen=True)
class DatasetBrief:
    """What the agents see: description, first rows, attribute list."""

    nl_description: str
    preview_rows: tuple[tuple[str, ...], ...]
    attributes: tuple[str, ...]

    def render(self) -> str:
        lines = [self.nl_description, "", "First rows:"]
        lines.append(", ".join(self.attributes))
        for row in self.preview_rows:
            lines.append(", ".join(row))
        return "\n".join(lines)


def describe_dataset(profile: DatasetProfile, table: DataTable) -> DatasetBrief:
    return DatasetBrief(
        nl_description=profile.nl_description,
        preview_rows=profile.preview_rows,
        attributes=profile.attribute_names(),
    )


def column_vector(
    table: DataTable,
    attribute: str,
    where: Optional[Callable[[dict], bool]] = None,
) -> list:
    """Non-null values of a column in row order, optionally filtered.

    The predicate receives a dict of typed values for the whole row.
    """
    if attribute not in table.columns:
        raise KeyError(f"unknown attribute {attribute!r}")
    out = []
    for row in table.rows():
        if where is not None and not where(row):
            continue
        value = row[attribute]
        if value is not None:
            out.append(value)
    return out


def numeric_vector(
    table: DataTable,
    attribute: str,
    where: Optional[Callable[[dict], bool]] = None,
) -> list[float]:
    if table.kinds.get(attribute) != "numeric":
        raise TypeError(f"attribute {attribute!r} is not numeric")
    return column_vector(table, attribute, where)


def grouped_means(
    table: DataTable, value_attr: str, group_attr: str
) -> dict[str, float]:
    """Mean of value_attr per group_attr value, over rows where both present."""
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for row in table.rows():
        g, v = row.get(group_attr), row.get(value_attr)
        if g is None or v is None:
            continue
        key = str(g)
        sums[key] = sums.get(key, 0.0) + v
        counts[key] = counts.get(key, 0) + 1
    return {k: sums[k] / counts[k] for k in sums}

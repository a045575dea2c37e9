"""Schemas, records, labeled pairs, and CSV ingestion.

Tables are read from RFC-4180 style CSV with a mandatory header row.
A NULL convention distinguishes missing values from empty text: an empty
unquoted cell is an absent value (``None``), a quoted empty string ``""``
is the empty text.  The stdlib ``csv`` module collapses both cases to
``''``, so the reader/writer here are hand-rolled to keep per-field
quoting information.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ContractError, FormatError, IntegrityError

MATCH = "match"
NON_MATCH = "non-match"


@dataclass(frozen=True)
class Schema:
    """Ordered attribute names of a table, one of which is the id column."""

    attributes: tuple[str, ...]
    id_attribute: str

    def __post_init__(self):
        if len(set(self.attributes)) != len(self.attributes):
            raise ContractError("attribute names must be unique")
        if any(not a for a in self.attributes):
            raise ContractError("attribute names must be non-empty")
        if self.id_attribute not in self.attributes:
            raise ContractError(
                f"id attribute {self.id_attribute!r} not among {self.attributes}"
            )

    @property
    def value_attributes(self) -> tuple[str, ...]:
        """Attribute names excluding the id column, in schema order."""
        return tuple(a for a in self.attributes if a != self.id_attribute)

    @property
    def arity(self) -> int:
        """Number of non-id attributes."""
        return len(self.attributes) - 1


@dataclass(frozen=True)
class Record:
    """One tuple: an opaque id plus one optional text value per non-id attribute."""

    id: str
    values: tuple[str | None, ...]


@dataclass
class Table:
    schema: Schema
    records: list[Record] = field(default_factory=list)

    def __post_init__(self):
        arity = self.schema.arity
        by_id: dict[str, Record] = {}
        for rec in self.records:
            if len(rec.values) != arity:
                raise ContractError(
                    f"record {rec.id!r} has {len(rec.values)} values, schema expects {arity}"
                )
            if rec.id in by_id:
                raise IntegrityError(f"duplicate record id {rec.id!r}")
            by_id[rec.id] = rec
        self._by_id = by_id

    def __len__(self) -> int:
        return len(self.records)

    def record(self, record_id: str) -> Record:
        return self._by_id[record_id]

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self.records]


@dataclass(frozen=True)
class LabeledPair:
    left_id: str
    right_id: str
    label: str = MATCH

    def __post_init__(self):
        if self.label not in (MATCH, NON_MATCH):
            raise ContractError(f"label must be {MATCH!r} or {NON_MATCH!r}")

    @property
    def is_match(self) -> bool:
        return self.label == MATCH

    def key(self) -> tuple[str, str]:
        return (self.left_id, self.right_id)


# ---------------------------------------------------------------------------
# RFC-4180 reading/writing with quotedness preserved
# ---------------------------------------------------------------------------


def _parse_csv(text: str):
    """Yield (line_number, [(field_text, was_quoted), ...]) per CSV record.

    line_number is the 1-based physical line on which the record starts.
    Handles quoted fields containing commas, doubled quotes, and newlines.
    """
    fields: list[tuple[str, bool]] = []
    buf: list[str] = []
    quoted = False
    in_quotes = False
    line = 1
    start_line = 1
    has_any = False
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if in_quotes:
            if ch == '"':
                if i + 1 < n and text[i + 1] == '"':
                    buf.append('"')
                    i += 2
                    continue
                in_quotes = False
            else:
                if ch == "\n":
                    line += 1
                buf.append(ch)
            i += 1
            continue
        if ch == '"' and not buf:
            in_quotes = True
            quoted = True
            has_any = True
            i += 1
            continue
        if ch == ",":
            fields.append(("".join(buf), quoted))
            buf, quoted = [], False
            has_any = True
            i += 1
            continue
        if ch == "\n" or (ch == "\r" and i + 1 < n and text[i + 1] == "\n"):
            if fields or buf or has_any:
                fields.append(("".join(buf), quoted))
                yield start_line, fields
            fields, buf, quoted, has_any = [], [], False, False
            i += 2 if ch == "\r" else 1
            line += 1
            start_line = line
            continue
        buf.append(ch)
        has_any = True
        i += 1
    if in_quotes:
        raise FormatError(f"unterminated quoted field starting near line {start_line}")
    if buf or fields or has_any:
        fields.append(("".join(buf), quoted))
        yield start_line, fields


def _format_field(value: str | None) -> str:
    if value is None:
        return ""
    if value == "":
        return '""'
    if any(c in value for c in ',"\r\n'):
        return '"' + value.replace('"', '""') + '"'
    return value


def _cell_to_value(text: str, was_quoted: bool) -> str | None:
    # unquoted empty cell encodes NULL; quoted empty string is empty text
    if text == "" and not was_quoted:
        return None
    return text


def load_table(path: str, id_column: str = "id") -> Table:
    """Load a CSV file with a header row into a Table.

    Raises FormatError for a missing/invalid header or malformed row,
    IntegrityError for duplicate ids.
    """
    with open(path, "r", encoding="utf-8", newline="") as f:
        text = f.read()
    rows = list(_parse_csv(text))
    if not rows:
        raise FormatError(f"{path}: missing header row")
    _, header_fields = rows[0]
    header = [t for t, _ in header_fields]
    if id_column not in header:
        raise FormatError(f"{path}: id column {id_column!r} not in header {header}")
    schema = Schema(attributes=tuple(header), id_attribute=id_column)
    id_pos = header.index(id_column)
    records = []
    seen: set[str] = set()
    for lineno, cells in rows[1:]:
        if len(cells) != len(header):
            raise FormatError(
                f"{path}:{lineno}: row has {len(cells)} fields, header has {len(header)}"
            )
        rec_id = cells[id_pos][0]
        if rec_id in seen:
            raise IntegrityError(f"{path}:{lineno}: duplicate id {rec_id!r}")
        seen.add(rec_id)
        values = tuple(
            _cell_to_value(t, q) for i, (t, q) in enumerate(cells) if i != id_pos
        )
        records.append(Record(id=rec_id, values=values))
    return Table(schema=schema, records=records)


def write_table(table: Table, path: str) -> None:
    """Write a Table back to CSV; round-trips load_table exactly."""
    lines = [",".join(_format_field(a) for a in table.schema.attributes)]
    id_pos = table.schema.attributes.index(table.schema.id_attribute)
    for rec in table.records:
        cells = list(rec.values)
        cells.insert(id_pos, rec.id)
        lines.append(",".join(_format_field(c) for c in cells))
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("\n".join(lines) + "\n")


def load_matches(path: str) -> list[LabeledPair]:
    """Load a two-column (left_id, right_id) match file; every row is a match."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        text = f.read()
    rows = list(_parse_csv(text))
    if not rows:
        raise FormatError(f"{path}: missing header row")
    _, header = rows[0]
    if len(header) != 2:
        raise FormatError(f"{path}: match file must have exactly 2 columns")
    pairs = []
    for lineno, cells in rows[1:]:
        if len(cells) != 2:
            raise FormatError(f"{path}:{lineno}: expected 2 fields, got {len(cells)}")
        pairs.append(LabeledPair(left_id=cells[0][0], right_id=cells[1][0]))
    return pairs


def write_matches(pairs: list[LabeledPair], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("left_id,right_id\n")
        for p in pairs:
            f.write(f"{_format_field(p.left_id)},{_format_field(p.right_id)}\n")


def validate_matches(
    pairs: list[LabeledPair], left: Table, right: Table
) -> None:
    """Check that every pair references existing ids in both tables."""
    left_ids = set(left.ids)
    right_ids = set(right.ids)
    for p in pairs:
        if p.left_id not in left_ids or p.right_id not in right_ids:
            raise IntegrityError(
                f"match pair ({p.left_id!r}, {p.right_id!r}) references an unknown id"
            )


def align_schemas(left: Table, right: Table) -> list[tuple[str, str]]:
    """Positional correspondence of non-id attributes; names may differ."""
    la, ra = left.schema.value_attributes, right.schema.value_attributes
    if len(la) != len(ra):
        raise ContractError(
            f"cannot align schemas: {len(la)} vs {len(ra)} non-id attributes"
        )
    return list(zip(la, ra))

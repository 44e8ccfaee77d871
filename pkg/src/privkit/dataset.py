"""Role-annotated tabular records with CSV ingestion and serialization.

Cells are plain Python values for raw data (str for text, int for integers)
plus three generalized forms produced by anonymization transforms:

* ``Interval(lo, hi)`` -- an integer replaced by the bin it falls into,
  serialized as ``lo-hi``;
* ``MaskedText(prefix)`` -- a text value reduced to a prefix, serialized as
  ``prefix*``;
* ``SUPPRESSED`` -- a fully removed value, serialized as ``*``.

The textual encodings are reversible given the schema, so generalized
datasets round-trip through CSV. Raw text that itself ends in ``*`` is
indistinguishable from a mask and is parsed as one; such values are outside
the supported input domain.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import re
from dataclasses import dataclass
from typing import IO, Iterable, Sequence, Union

from .errors import ArityError, HeaderMismatch, KindMismatch, ParseError, UnknownAttribute


class AttributeRole(enum.Enum):
    """Privacy role of one attribute."""

    EXPLICIT_IDENTIFIER = "explicit_identifier"
    QUASI_IDENTIFIER = "quasi_identifier"
    SENSITIVE = "sensitive"
    NON_SENSITIVE = "non_sensitive"


class Kind(enum.Enum):
    """Underlying value kind of one attribute."""

    TEXT = "text"
    INTEGER = "integer"


@dataclass(frozen=True)
class Interval:
    """Closed integer range replacing a generalized numeric value."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"interval lo {self.lo} > hi {self.hi}")

    def __str__(self):
        return f"{self.lo}-{self.hi}"


@dataclass(frozen=True)
class MaskedText:
    """Text value reduced to a prefix; renders as ``prefix*``."""

    prefix: str

    def __str__(self):
        return f"{self.prefix}*"


@dataclass(frozen=True)
class Suppressed:
    """Fully suppressed value; renders as ``*``."""

    def __str__(self):
        return "*"


SUPPRESSED = Suppressed()

Cell = Union[str, int, Interval, MaskedText, Suppressed]

_INT_RE = re.compile(r"^[+-]?\d+$")
_INTERVAL_RE = re.compile(r"^(-?\d+)-(-?\d+)$")


def render_cell(cell: Cell) -> str:
    """Serialize one cell to its CSV text form."""
    if isinstance(cell, bool):
        raise KindMismatch("bool is not a valid cell value")
    if isinstance(cell, (Interval, MaskedText, Suppressed)):
        return str(cell)
    if isinstance(cell, int):
        return str(cell)
    if isinstance(cell, str):
        return cell
    raise KindMismatch(f"unsupported cell value {cell!r}")


def parse_cell(text: str, kind: Kind) -> Cell:
    """Parse one CSV cell under the given kind, accepting generalized forms."""
    if text == "*":
        return SUPPRESSED
    if kind is Kind.INTEGER:
        if _INT_RE.match(text):
            return int(text)
        m = _INTERVAL_RE.match(text)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            if lo > hi:
                raise ParseError(f"interval {text!r} has lo > hi")
            return Interval(lo, hi)
        raise ParseError(f"not an integer: {text!r}")
    if text.endswith("*"):
        return MaskedText(text[:-1])
    return text


@dataclass(frozen=True)
class Attribute:
    name: str
    role: AttributeRole
    kind: Kind


@dataclass(frozen=True)
class Schema:
    """Ordered attribute list; names are unique."""

    attributes: tuple[Attribute, ...]

    def __post_init__(self):
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate attribute names in schema: {names}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def index(self, name: str) -> int:
        for i, a in enumerate(self.attributes):
            if a.name == name:
                return i
        raise UnknownAttribute(f"no attribute named {name!r}")

    def attribute(self, name: str) -> Attribute:
        return self.attributes[self.index(name)]

    def to_json(self) -> str:
        return json.dumps(
            [
                {"name": a.name, "role": a.role.value, "kind": a.kind.value}
                for a in self.attributes
            ],
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "Schema":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"schema is not valid JSON: {exc}") from exc
        if not isinstance(raw, list):
            raise ParseError("schema JSON must be a list of attribute objects")
        attrs = []
        for i, entry in enumerate(raw):
            try:
                attrs.append(
                    Attribute(
                        name=entry["name"],
                        role=AttributeRole(entry["role"]),
                        kind=Kind(entry["kind"]),
                    )
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise ParseError(f"bad schema entry at index {i}: {exc}") from exc
        return cls(tuple(attrs))


@dataclass(frozen=True)
class Dataset:
    """Immutable ordered records under a schema.

    Transforms never mutate; they return new datasets. Instances are safe to
    share across threads.
    """

    schema: Schema
    records: tuple[tuple[Cell, ...], ...]

    def __post_init__(self):
        width = len(self.schema.attributes)
        for i, rec in enumerate(self.records):
            if len(rec) != width:
                raise ArityError(
                    f"record {i} has {len(rec)} values, schema has {width}"
                )

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> tuple[Cell, ...]:
        idx = self.schema.index(name)
        return tuple(rec[idx] for rec in self.records)

    def replace_column(self, name: str, cells: Sequence[Cell]) -> "Dataset":
        idx = self.schema.index(name)
        if len(cells) != len(self.records):
            raise ArityError(
                f"column has {len(cells)} values for {len(self.records)} records"
            )
        records = tuple(
            rec[:idx] + (cell,) + rec[idx + 1 :]
            for rec, cell in zip(self.records, cells)
        )
        return Dataset(self.schema, records)


def load_csv(source: Union[bytes, IO[bytes]], schema: Schema) -> Dataset:
    """Parse UTF-8 CSV whose header matches the schema names in order.

    Rejects the whole file on the first malformed row; no partial dataset is
    ever returned.
    """
    if isinstance(source, bytes):
        data = source
    else:
        data = source.read()
    reader = csv.reader(io.StringIO(data.decode("utf-8")))
    rows = list(reader)
    if not rows:
        raise HeaderMismatch("empty input, expected a header row")
    header = tuple(rows[0])
    if header != schema.names:
        raise HeaderMismatch(f"header {header} does not match schema {schema.names}")
    records = []
    for rownum, row in enumerate(rows[1:], start=1):
        if len(row) != len(schema.attributes):
            raise ArityError(
                f"row {rownum} has {len(row)} cells, schema has "
                f"{len(schema.attributes)}"
            )
        cells = []
        for attr, text in zip(schema.attributes, row):
            try:
                cells.append(parse_cell(text, attr.kind))
            except ParseError as exc:
                raise ParseError(
                    f"row {rownum}, column {attr.name!r}: {exc}"
                ) from exc
        records.append(tuple(cells))
    return Dataset(schema, tuple(records))


def write_csv(dataset: Dataset) -> bytes:
    """Serialize to UTF-8 CSV: header line, then one row per record."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(dataset.schema.names)
    for rec in dataset.records:
        writer.writerow([render_cell(c) for c in rec])
    return buf.getvalue().encode("utf-8")


_FIXTURE_SCHEMA = Schema(
    (
        Attribute("Name", AttributeRole.EXPLICIT_IDENTIFIER, Kind.TEXT),
        Attribute("Age", AttributeRole.QUASI_IDENTIFIER, Kind.INTEGER),
        Attribute("Gender", AttributeRole.QUASI_IDENTIFIER, Kind.TEXT),
        Attribute("ZIP", AttributeRole.QUASI_IDENTIFIER, Kind.TEXT),
        Attribute("Diagnosis", AttributeRole.SENSITIVE, Kind.TEXT),
    )
)

_FIXTURE_ROWS = (
    ("Jane Doe", 44, "Female", "12345", "Cancer"),
    ("John Smith", 22, "Male", "12333", "Migraine"),
    ("William Wonker", 39, "Male", "12344", "Incontinence"),
    ("Harrison Seat", 35, "Male", "12355", "Incontinence"),
    ("Bettina Wonker", 42, "Female", "12344", "No illness"),
    ("Thomas Müller", 22, "Male", "12222", "Diabetes"),
    ("Sharon Carter", 47, "Female", "12544", "Cancer"),
    ("Maria Granger", 27, "Female", "12345", "Cancer"),
    ("Christian Cloud", 26, "Male", "12333", "No illness"),
    ("Kim Schmidt", 21, "Female", "12222", "Diabetes"),
)


def fixture_table1() -> Dataset:
    """Ten-row fictional medical record extract used throughout the tests.

    Name is an explicit identifier, Age/Gender/ZIP are quasi-identifiers and
    Diagnosis is the sensitive attribute.
    """
    return Dataset(_FIXTURE_SCHEMA, _FIXTURE_ROWS)


def column_values(dataset: Dataset, names: Iterable[str]) -> list[tuple[Cell, ...]]:
    """Per-record tuples of the named columns, in record order."""
    idxs = [dataset.schema.index(n) for n in names]
    return [tuple(rec[i] for i in idxs) for rec in dataset.records]

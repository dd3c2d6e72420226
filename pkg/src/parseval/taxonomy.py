"""Seven-category error model and the string-matching classifier for external parsers.

The built-in parser attaches a category to every error it raises, so it never
goes through string matching. External parsers only report free-text error
strings; a :class:`ClassificationTable` maps those onto categories, with
``UNCATEGORIZED`` as the fall-through for anything unlisted.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

TABLE_FORMAT_MAGIC = "parseval-table"
TABLE_FORMAT_VERSION = "1"


class ErrorCategory(enum.Enum):
    """Closed set of error categories. Serialized names are frozen."""

    ASN1_PARSE_ERROR = "ASN1_PARSE_ERROR"
    CRYPTO_UNSUPPORTED = "CRYPTO_UNSUPPORTED"
    CRYPTO_VALUE_ERROR = "CRYPTO_VALUE_ERROR"
    UNCATEGORIZED = "UNCATEGORIZED"
    X509_PARSE_ERROR = "X509_PARSE_ERROR"
    X509_UNSUPPORTED = "X509_UNSUPPORTED"
    X509_VALUE_ERROR = "X509_VALUE_ERROR"

    def __str__(self) -> str:
        return self.value


class CategorizedError(Exception):
    """An error with an assigned category.

    Raised by the built-in parser (``check_id`` set) and used as a value when
    classifying external parser output (``check_id`` absent). When the
    category is ``UNCATEGORIZED`` the message is the verbatim string from the
    external parser, preserved for audit.
    """

    def __init__(
        self,
        category: ErrorCategory,
        message: str,
        check_id: Optional[str] = None,
        offset: Optional[int] = None,
    ):
        super().__init__(message)
        self.category = category
        self.message = message
        self.check_id = check_id
        self.offset = offset

    def __str__(self) -> str:
        return self.message

    @property
    def error_string(self) -> str:
        """The message as stored in an outcome row (check id up front)."""
        if self.check_id:
            return f"{self.check_id}: {self.message}"
        return self.message


class TableFormatError(ValueError):
    """Raised when a classification table file cannot be parsed."""

    def __init__(self, message: str, line_no: Optional[int] = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


@dataclass(frozen=True)
class Rule:
    """One classification rule.

    ``pattern`` matches as a case-sensitive literal prefix of the error
    string. A single trailing ``*`` is permitted and equivalent (it makes the
    open end explicit); it is stripped at load time.
    """

    parser_id: str
    pattern: str
    category: ErrorCategory

    def matches(self, error_string: str) -> bool:
        return error_string.startswith(self.pattern)


@dataclass(frozen=True)
class ClassificationTable:
    rules: tuple[Rule, ...] = ()
    version: str = TABLE_FORMAT_VERSION

    def rules_for(self, parser_id: str) -> list[Rule]:
        return [r for r in self.rules if r.parser_id == parser_id]


def classify(parser_id: str, error_string: str, table: ClassificationTable) -> ErrorCategory:
    """Map an external parser's error string onto a category.

    Total and deterministic: the first matching rule for ``parser_id`` wins,
    anything else is ``UNCATEGORIZED``.
    """
    for rule in table.rules:
        if rule.parser_id == parser_id and error_string.startswith(rule.pattern):
            return rule.category
    return ErrorCategory.UNCATEGORIZED


def _normalize_pattern(pattern: str) -> str:
    if pattern.endswith("*"):
        return pattern[:-1]
    return pattern


def parse_table(text: str, source: str = "<string>") -> ClassificationTable:
    """Parse the line-oriented table format.

    First line is ``parseval-table 1``; each rule line is
    ``parser_id<TAB>pattern<TAB>category``. ``#`` starts a comment, blank
    lines are ignored.
    """
    lines = text.splitlines()
    if not lines:
        raise TableFormatError("empty table file", line_no=1)
    header = lines[0].strip().split()
    if len(header) != 2 or header[0] != TABLE_FORMAT_MAGIC:
        raise TableFormatError(
            f"expected header '{TABLE_FORMAT_MAGIC} {TABLE_FORMAT_VERSION}'", line_no=1
        )
    if header[1] != TABLE_FORMAT_VERSION:
        raise TableFormatError(f"unsupported table version {header[1]!r}", line_no=1)

    rules: list[Rule] = []
    for i, raw in enumerate(lines[1:], start=2):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise TableFormatError(
                f"expected 3 tab-separated fields, got {len(parts)}", line_no=i
            )
        parser_id, pattern, category_name = parts
        if not parser_id or not pattern:
            raise TableFormatError("parser_id and pattern must be non-empty", line_no=i)
        try:
            category = ErrorCategory(category_name)
        except ValueError:
            raise TableFormatError(f"unknown category {category_name!r}", line_no=i) from None
        if category is ErrorCategory.UNCATEGORIZED:
            raise TableFormatError(
                "UNCATEGORIZED is the fall-through, not a rule category", line_no=i
            )
        rules.append(Rule(parser_id, _normalize_pattern(pattern), category))
    return ClassificationTable(rules=tuple(rules), version=header[1])


def load_table(path: Union[str, Path]) -> ClassificationTable:
    path = Path(path)
    return parse_table(path.read_text(encoding="utf-8"), source=str(path))


def dump_table(table: ClassificationTable) -> str:
    """Serialize a table back to its file format."""
    out = [f"{TABLE_FORMAT_MAGIC} {table.version}"]
    for r in table.rules:
        out.append(f"{r.parser_id}\t{r.pattern}\t{r.category.value}")
    return "\n".join(out) + "\n"


def validate_table(table: ClassificationTable) -> list[str]:
    """Report unreachable (shadowed) rules and duplicate (parser_id, pattern) pairs."""
    warnings: list[str] = []
    seen: set[tuple[str, str]] = set()
    by_parser: dict[str, list[Rule]] = {}
    for rule in table.rules:
        key = (rule.parser_id, rule.pattern)
        if key in seen:
            warnings.append(
                f"duplicate rule for parser {rule.parser_id!r} pattern {rule.pattern!r}"
            )
        seen.add(key)
        for earlier in by_parser.get(rule.parser_id, ()):
            if rule.pattern.startswith(earlier.pattern):
                warnings.append(
                    f"rule ({rule.parser_id!r}, {rule.pattern!r}) is unreachable: "
                    f"shadowed by earlier pattern {earlier.pattern!r}"
                )
                break
        by_parser.setdefault(rule.parser_id, []).append(rule)
    return warnings


def default_table_path() -> Path:
    """Path of the classification table shipped with the package."""
    return Path(str(resources.files("parseval").joinpath("data/default.table")))


def load_default_table() -> ClassificationTable:
    return parse_table(
        resources.files("parseval").joinpath("data/default.table").read_text(encoding="utf-8"),
        source="default.table",
    )

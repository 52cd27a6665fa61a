"""Shared file helpers: record-level error reports, TSV escaping, digests."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RecordError:
    line_no: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line_no}: {self.message}"


@dataclass
class ParseReport:
    """Accumulates per-record errors so one bad line never kills a stream."""

    source: str = ""
    n_ok: int = 0
    errors: list[RecordError] = field(default_factory=list)

    def add_error(self, line_no: int, message: str) -> None:
        self.errors.append(RecordError(line_no, message))
        log.warning("%s: line %d: %s", self.source or "<input>", line_no, message)

    @property
    def ok(self) -> bool:
        return not self.errors

    def summary(self) -> str:
        return f"{self.source or '<input>'}: {self.n_ok} record(s) ok, {len(self.errors)} error(s)"


def escape_tsv_field(value: str) -> str:
    """Escape backslash, tab, newline, and carriage return for one TSV cell."""
    return (
        value.replace("\\", "\\\\")
        .replace("\t", "\\t")
        .replace("\n", "\\n")
        .replace("\r", "\\r")
    )


def unescape_tsv_field(value: str) -> str:
    out: list[str] = []
    i = 0
    n = len(value)
    while i < n:
        ch = value[i]
        if ch == "\\" and i + 1 < n:
            nxt = value[i + 1]
            mapped = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}.get(nxt)
            if mapped is not None:
                out.append(mapped)
                i += 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def load_tsv_map(path: str | Path) -> dict[str, str]:
    """Read a two-column ``alias<TAB>canonical`` mapping; # lines are comments."""
    mapping: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}: line {line_no}: expected 2 tab-separated fields")
            mapping[parts[0]] = parts[1]
    return mapping

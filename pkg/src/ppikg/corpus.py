"""Abstract corpora: parsing, sentence segmentation, tokenization, species filter.

Everything here is deliberately rule-based and deterministic so that every
downstream artifact (mentions, candidates, extracted edges) is reproducible
byte-for-byte from the input files.
"""

from __future__ import annotations

import json
import re
import string
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .ioutils import ParseReport, unescape_tsv_field


@dataclass(frozen=True)
class Abstract:
    """One document: id, title, and optional body (title-only records allowed)."""

    doc_id: str
    title: str
    body: str = ""

    @property
    def text(self) -> str:
        """Title and body joined with a newline; all spans index into this."""
        return self.title + "\n" + self.body


@dataclass(frozen=True)
class Sentence:
    doc_id: str
    index: int
    char_span: tuple[int, int]  # [start, end) into Abstract.text

    def text_of(self, abstract: Abstract) -> str:
        start, end = self.char_span
        return abstract.text[start:end]


@dataclass(frozen=True)
class Token:
    text: str
    char_span: tuple[int, int]  # [start, end) within the sentence text
    is_alpha: bool
    is_digit: bool
    is_punct: bool


_PUNCT = frozenset(string.punctuation)

# Trailing strings that suppress a sentence boundary after a period.
DEFAULT_ABBREVIATIONS = frozenset(
    {
        "fig.",
        "figs.",
        "et al.",
        "e.g.",
        "i.e.",
        "vs.",
        "cf.",
        "ca.",
        "approx.",
        "no.",
        "ref.",
        "refs.",
        "resp.",
        "spp.",
        "sp.",
        "dr.",
        "inc.",
    }
)

# Species terms marking a document as relevant to human or mouse biology.
DEFAULT_SPECIES_TERMS = frozenset(
    {"human", "homo sapiens", "mouse", "mice", "murine", "mus musculus"}
)

_TERMINALS = ".!?"
_CLOSERS = "\"')]"


def parse_corpus(
    path: str | Path,
    fmt: str = "jsonl",
    report: ParseReport | None = None,
) -> Iterator[Abstract]:
    """Lazily yield abstracts from a JSONL or 3-column TSV corpus file.

    Malformed records are appended to ``report`` (and logged) with their line
    numbers; the stream continues. Duplicate doc_ids are reported and skipped
    so that a yielded corpus always satisfies the uniqueness invariant. An
    unreadable file raises immediately.
    """
    if fmt not in ("jsonl", "tsv"):
        raise ValueError(f"unknown corpus format: {fmt!r} (expected 'jsonl' or 'tsv')")
    if report is None:
        report = ParseReport(source=str(path))

    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if fmt == "jsonl":
                abstract = _parse_jsonl_record(line, line_no, report)
            else:
                abstract = _parse_tsv_record(line, line_no, report)
            if abstract is None:
                continue
            if abstract.doc_id in seen:
                report.add_error(line_no, f"duplicate doc_id {abstract.doc_id!r}")
                continue
            seen.add(abstract.doc_id)
            report.n_ok += 1
            yield abstract


def _parse_jsonl_record(line: str, line_no: int, report: ParseReport) -> Abstract | None:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        report.add_error(line_no, f"invalid JSON: {exc.msg}")
        return None
    if not isinstance(obj, dict):
        report.add_error(line_no, "record is not a JSON object")
        return None
    doc_id = obj.get("doc_id")
    title = obj.get("title")
    body = obj.get("body", "")
    if not isinstance(doc_id, str) or not doc_id:
        report.add_error(line_no, "missing or empty doc_id")
        return None
    if not isinstance(title, str):
        report.add_error(line_no, "missing title")
        return None
    if not isinstance(body, str):
        report.add_error(line_no, "body is not a string")
        return None
    return Abstract(doc_id, title, body)


def _parse_tsv_record(line: str, line_no: int, report: ParseReport) -> Abstract | None:
    parts = line.split("\t")
    if len(parts) not in (2, 3):
        report.add_error(line_no, f"expected 2 or 3 tab-separated fields, got {len(parts)}")
        return None
    doc_id = unescape_tsv_field(parts[0])
    title = unescape_tsv_field(parts[1])
    body = unescape_tsv_field(parts[2]) if len(parts) == 3 else ""
    if not doc_id:
        report.add_error(line_no, "missing or empty doc_id")
        return None
    return Abstract(doc_id, title, body)


def _is_abbreviation(text: str, period_idx: int, abbreviations: frozenset[str]) -> bool:
    """True when the period at ``period_idx`` ends a known abbreviation."""
    head = text[: period_idx + 1].lower()
    for abbr in abbreviations:
        if head.endswith(abbr):
            before = period_idx - len(abbr)
            if before < 0 or not (text[before].isalnum() or text[before] == "."):
                return True
    return False


def split_spans(text: str, abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS) -> list[tuple[int, int]]:
    """Sentence spans of ``text``: newline is a hard break, terminal punctuation
    ([.!?] runs plus closing quotes/brackets) is a soft break unless suppressed
    by the abbreviation list or a lowercase continuation."""
    cuts = [0]
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            cuts.append(i + 1)
            i += 1
            continue
        if ch in _TERMINALS:
            j = i + 1
            while j < n and text[j] in _TERMINALS + _CLOSERS:
                j += 1
            if j >= n:
                break
            if text[j] not in " \t":
                i += 1
                continue
            k = j
            while k < n and text[k] in " \t":
                k += 1
            if k >= n:
                break
            nxt = text[k]
            starts_sentence = nxt.isupper() or nxt.isdigit() or nxt in "([\"'"
            if starts_sentence and not (ch == "." and _is_abbreviation(text, i, abbreviations)):
                cuts.append(j)
            i = j
            continue
        i += 1
    cuts.append(n)

    spans: list[tuple[int, int]] = []
    for a, b in zip(cuts, cuts[1:]):
        while a < b and text[a].isspace():
            a += 1
        while b > a and text[b - 1].isspace():
            b -= 1
        if b > a:
            spans.append((a, b))
    return spans


def sentence_split(
    abstract: Abstract,
    abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS,
) -> list[Sentence]:
    """Segment an abstract (title + body) into ordered, disjoint sentences."""
    return [
        Sentence(abstract.doc_id, idx, span)
        for idx, span in enumerate(split_spans(abstract.text, abbreviations))
    ]


def _make_token(text: str, start: int, end: int) -> Token:
    surface = text[start:end]
    return Token(
        text=surface,
        char_span=(start, end),
        is_alpha=surface.isalpha(),
        is_digit=surface.isdigit(),
        is_punct=all(c in _PUNCT for c in surface),
    )


def tokenize(text: str) -> list[Token]:
    """Whitespace tokenization with leading/trailing punctuation peeled off.

    Internal punctuation survives, so hyphenated and slashed biomedical names
    ("ARF6-GTP", "IL-2/IL-2R") stay single tokens.
    """
    tokens: list[Token] = []
    for match in re.finditer(r"\S+", text):
        start, end = match.span()
        while start < end and text[start] in _PUNCT and end - start > 1:
            tokens.append(_make_token(text, start, start + 1))
            start += 1
        trailing: list[Token] = []
        while end > start and text[end - 1] in _PUNCT and end - start > 1:
            trailing.append(_make_token(text, end - 1, end))
            end -= 1
        tokens.append(_make_token(text, start, end))
        tokens.extend(reversed(trailing))
    return tokens


_GAZETTEER_CACHE: dict[frozenset[str], re.Pattern[str]] = {}


def compile_gazetteer(terms: Iterable[str]) -> re.Pattern[str]:
    """Compile a case-insensitive word-boundary matcher for the given terms."""
    key = frozenset(t.lower() for t in terms)
    if not key:
        raise ValueError("gazetteer must be non-empty")
    pattern = _GAZETTEER_CACHE.get(key)
    if pattern is None:
        alternation = "|".join(re.escape(t) for t in sorted(key, key=len, reverse=True))
        pattern = re.compile(r"\b(?:" + alternation + r")\b", re.IGNORECASE)
        _GAZETTEER_CACHE[key] = pattern
    return pattern


def species_filter(abstract: Abstract, gazetteer: Iterable[str] = DEFAULT_SPECIES_TERMS) -> bool:
    """True iff any gazetteer term occurs as a whole word in title or body."""
    pattern = compile_gazetteer(gazetteer)
    return bool(pattern.search(abstract.title) or pattern.search(abstract.body))


def load_gazetteer(path: str | Path) -> frozenset[str]:
    """One lowercase term per line; blank lines and # comments ignored."""
    terms = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            term = line.strip()
            if term and not term.startswith("#"):
                terms.add(term.lower())
    return frozenset(terms)

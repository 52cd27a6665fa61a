"""Typed edge lists: loading, merging, splitting, overlap stats, and extraction.

Graphs are deduplicated sets of triples with per-triple provenance tags and an
optional confidence score (max over all sightings). Protein interaction edges
are undirected and stored with head <= tail; gene-disease edges are directed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

from . import corpus as corpus_mod
from . import ner as ner_mod
from . import relex as relex_mod
from .ioutils import ParseReport

PPI = "ppi"
GENE_DISEASE = "gene_disease"
RELATIONS = frozenset({PPI, GENE_DISEASE})

GENE_NS = "gene:"
DISEASE_NS = "disease:"


@dataclass(frozen=True, order=True)
class Triple:
    head: str
    relation: str
    tail: str


def make_triple(head: str, relation: str, tail: str) -> Triple:
    """Canonical triple: ppi edges stored with head <= tail; self-loops rejected."""
    if relation not in RELATIONS:
        raise ValueError(f"unknown relation {relation!r} (expected one of {sorted(RELATIONS)})")
    if head == tail:
        raise ValueError(f"self-loop not allowed: ({head!r}, {relation}, {tail!r})")
    if relation == PPI and tail < head:
        head, tail = tail, head
    return Triple(head, relation, tail)


class KnowledgeGraph:
    """Immutable-by-convention triple store with provenance and confidence."""

    def __init__(
        self,
        provenance: dict[Triple, frozenset[str]] | None = None,
        confidence: dict[Triple, float] | None = None,
    ):
        self.provenance: dict[Triple, frozenset[str]] = dict(provenance or {})
        self.confidence: dict[Triple, float] = dict(confidence or {})
        for triple, tags in self.provenance.items():
            if not tags:
                raise ValueError(f"triple {triple} has no provenance tag")

    @classmethod
    def from_triples(
        cls,
        triples: Iterable[Triple],
        source: str,
        confidences: dict[Triple, float] | None = None,
    ) -> "KnowledgeGraph":
        tag = frozenset({source})
        provenance = {t: tag for t in triples}
        confidence = dict(confidences or {})
        return cls(provenance, {t: c for t, c in confidence.items() if t in provenance})

    @property
    def triples(self) -> set[Triple]:
        return set(self.provenance)

    def entities(self) -> set[str]:
        out = set()
        for t in self.provenance:
            out.add(t.head)
            out.add(t.tail)
        return out

    def relations(self) -> set[str]:
        return {t.relation for t in self.provenance}

    def by_relation(self, relation: str) -> set[Triple]:
        return {t for t in self.provenance if t.relation == relation}

    def subgraph(self, triples: Iterable[Triple]) -> "KnowledgeGraph":
        keep = set(triples)
        return KnowledgeGraph(
            {t: tags for t, tags in self.provenance.items() if t in keep},
            {t: c for t, c in self.confidence.items() if t in keep},
        )

    def __len__(self) -> int:
        return len(self.provenance)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.provenance)

    def __contains__(self, triple: Triple) -> bool:
        return triple in self.provenance

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeGraph):
            return NotImplemented
        return self.provenance == other.provenance and self.confidence == other.confidence

    def __repr__(self) -> str:
        return f"KnowledgeGraph({len(self.provenance)} triples)"


SCHEMAS = ("string_ppi", "disgenet_gd", "ie_tsv", "graph_tsv")

_SCHEMA_SOURCES = {"string_ppi": "string", "disgenet_gd": "disgenet", "ie_tsv": "ie"}


def _apply_alias(raw: str, alias: dict[str, str] | None) -> str:
    return alias.get(raw, raw) if alias else raw


def load_edges(
    path: str | Path,
    schema: str,
    min_score: float | None = None,
    source: str | None = None,
    alias: dict[str, str] | None = None,
    report: ParseReport | None = None,
) -> KnowledgeGraph:
    """Load a TSV edge file under a named schema into a canonicalized graph.

    Schemas:
      string_ppi  — protein_a, protein_b, combined_score in [0, 1000]
      disgenet_gd — gene_id, disease_id, score in [0, 1]
      ie_tsv      — entity_a, entity_b, probability, doc_id, sentence_index
      graph_tsv   — this package's own graph serialization (see save_graph)

    ``min_score`` is on the schema's raw scale; confidence is stored
    normalized to [0, 1] (string_ppi scores are divided by 1000). Malformed
    rows go to the report; an unknown schema is fatal.
    """
    if schema not in SCHEMAS:
        raise ValueError(f"unknown schema {schema!r} (expected one of {SCHEMAS})")
    if schema == "graph_tsv":
        return load_graph(path, report=report)
    if report is None:
        report = ParseReport(source=str(path))
    src = source or _SCHEMA_SOURCES[schema]

    provenance: dict[Triple, frozenset[str]] = {}
    confidence: dict[Triple, float] = {}
    tag = frozenset({src})
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            try:
                triple, conf = _parse_edge_row(parts, schema, alias, min_score)
            except ValueError as exc:
                report.add_error(line_no, str(exc))
                continue
            if triple is None:
                continue  # filtered by min_score
            provenance[triple] = tag
            prev = confidence.get(triple)
            if conf is not None and (prev is None or conf > prev):
                confidence[triple] = conf
            report.n_ok += 1
    return KnowledgeGraph(provenance, confidence)


def _parse_edge_row(
    parts: list[str],
    schema: str,
    alias: dict[str, str] | None,
    min_score: float | None,
) -> tuple[Triple | None, float | None]:
    if schema == "string_ppi":
        if len(parts) < 3:
            raise ValueError(f"expected 3 fields, got {len(parts)}")
        a = _apply_alias(parts[0], alias)
        b = _apply_alias(parts[1], alias)
        score = float(parts[2])
        if not 0 <= score <= 1000:
            raise ValueError(f"combined_score {score} outside [0, 1000]")
        if min_score is not None and score < min_score:
            return None, None
        return make_triple(GENE_NS + a, PPI, GENE_NS + b), score / 1000.0
    if schema == "disgenet_gd":
        if len(parts) < 3:
            raise ValueError(f"expected 3 fields, got {len(parts)}")
        gene = _apply_alias(parts[0], alias)
        disease = _apply_alias(parts[1], alias)
        score = float(parts[2])
        if not 0 <= score <= 1:
            raise ValueError(f"score {score} outside [0, 1]")
        if min_score is not None and score < min_score:
            return None, None
        return make_triple(GENE_NS + gene, GENE_DISEASE, DISEASE_NS + disease), score
    # ie_tsv
    if len(parts) < 3:
        raise ValueError(f"expected at least 3 fields, got {len(parts)}")
    a = _apply_alias(parts[0], alias)
    b = _apply_alias(parts[1], alias)
    prob = float(parts[2])
    if not 0 <= prob <= 1:
        raise ValueError(f"probability {prob} outside [0, 1]")
    if min_score is not None and prob < min_score:
        return None, None
    return make_triple(GENE_NS + a, PPI, GENE_NS + b), prob


def merge(graphs: Iterable[KnowledgeGraph]) -> KnowledgeGraph:
    """Set union of triples; provenance tags unioned, confidence maxed."""
    provenance: dict[Triple, frozenset[str]] = {}
    confidence: dict[Triple, float] = {}
    for g in graphs:
        for triple, tags in g.provenance.items():
            provenance[triple] = provenance.get(triple, frozenset()) | tags
        for triple, conf in g.confidence.items():
            prev = confidence.get(triple)
            if prev is None or conf > prev:
                confidence[triple] = conf
    return KnowledgeGraph(provenance, confidence)


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.8
    valid: float = 0.1
    test: float = 0.1
    seed: int = 0

    def validate(self) -> None:
        for name, value in (("train", self.train), ("valid", self.valid), ("test", self.test)):
            if value < 0:
                raise ValueError(f"{name} ratio must be >= 0, got {value}")
        if abs(self.train + self.valid + self.test - 1.0) > 1e-9:
            raise ValueError(
                f"split ratios must sum to 1, got {self.train + self.valid + self.test}"
            )


class Split(NamedTuple):
    train: KnowledgeGraph
    valid: KnowledgeGraph
    test: KnowledgeGraph
    n_reassigned: int


def split(graph: KnowledgeGraph, spec: SplitSpec, relation: str = GENE_DISEASE) -> Split:
    """Random partition of one relation's triples; everything else goes to train.

    Valid/test triples whose head or tail has no other appearance in the train
    partition are reassigned to train (and counted), so every evaluated entity
    has a trainable embedding. Deterministic under the spec's seed regardless
    of input ordering.
    """
    spec.validate()
    filtered = sorted(graph.by_relation(relation))
    rest = [t for t in graph if t.relation != relation]

    rng = random.Random(spec.seed)
    rng.shuffle(filtered)
    n = len(filtered)
    n_valid = int(round(spec.valid * n))
    n_test = int(round(spec.test * n))
    n_train = max(n - n_valid - n_test, 0)
    train_triples = filtered[:n_train]
    valid_triples = filtered[n_train : n_train + n_valid]
    test_triples = filtered[n_train + n_valid :]

    train_entities: set[str] = set()
    for t in train_triples + rest:
        train_entities.add(t.head)
        train_entities.add(t.tail)

    n_reassigned = 0

    def admit(pool: list[Triple]) -> list[Triple]:
        nonlocal n_reassigned
        kept = []
        for t in pool:
            if t.head in train_entities and t.tail in train_entities:
                kept.append(t)
            else:
                train_triples.append(t)
                train_entities.add(t.head)
                train_entities.add(t.tail)
                n_reassigned += 1
        return kept

    valid_kept = admit(valid_triples)
    test_kept = admit(test_triples)

    return Split(
        graph.subgraph(train_triples + rest),
        graph.subgraph(valid_kept),
        graph.subgraph(test_kept),
        n_reassigned,
    )


@dataclass(frozen=True)
class OverlapReport:
    n_extracted: int
    n_reference: int
    n_shared: int

    @property
    def pct_extracted_in_reference(self) -> float:
        if self.n_extracted == 0:
            return 0.0
        return 100.0 * self.n_shared / self.n_extracted

    def to_dict(self) -> dict:
        return {
            "n_extracted": self.n_extracted,
            "n_reference": self.n_reference,
            "n_shared": self.n_shared,
            "pct_extracted_in_reference": self.pct_extracted_in_reference,
        }


def overlap_stats(extracted: KnowledgeGraph, reference: KnowledgeGraph) -> OverlapReport:
    """How many extracted interaction edges already exist in a reference graph."""
    ext = extracted.by_relation(PPI)
    ref = reference.by_relation(PPI)
    return OverlapReport(n_extracted=len(ext), n_reference=len(ref), n_shared=len(ext & ref))


@dataclass(frozen=True)
class Extraction:
    """One predicted interaction row, as written to the extraction TSV."""

    entity_a: str  # canonical pair ordered lexicographically
    entity_b: str
    probability: float
    doc_id: str
    sentence_index: int


def iter_extractions(
    corpus_path: str | Path,
    ner_model: ner_mod.NerModel,
    re_model: relex_mod.ReModel,
    threshold: float,
    fmt: str = "jsonl",
    gazetteer: Iterable[str] | None = None,
    filter_species: bool = True,
    alias_map: dict[str, str] | None = None,
    report: ParseReport | None = None,
) -> Iterator[Extraction]:
    """Run the full text pipeline and yield interactions above the threshold.

    Stages per abstract: species filter, sentence split, tokenize, tag
    proteins, generate candidate pairs, classify, keep p >= threshold.
    """
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    terms = frozenset(gazetteer) if gazetteer else corpus_mod.DEFAULT_SPECIES_TERMS
    for abstract in corpus_mod.parse_corpus(corpus_path, fmt=fmt, report=report):
        if filter_species and not corpus_mod.species_filter(abstract, terms):
            continue
        text = abstract.text
        for sentence in corpus_mod.sentence_split(abstract):
            start, end = sentence.char_span
            tokens = corpus_mod.tokenize(text[start:end])
            if len(tokens) < 2:
                continue
            mentions = ner_mod.tag(
                ner_model,
                tokens,
                alias_map=alias_map,
                doc_id=abstract.doc_id,
                sentence_index=sentence.index,
            )
            if len(mentions) < 2:
                continue
            candidates = relex_mod.generate_candidates(
                tokens, mentions, doc_id=abstract.doc_id, sentence_index=sentence.index
            )
            if not candidates:
                continue
            probs = relex_mod.predict_batch(re_model, candidates)
            for cand, prob in zip(candidates, probs):
                if prob >= threshold:
                    a, b = sorted((cand.mention_a.entity_id, cand.mention_b.entity_id))
                    yield Extraction(
                        entity_a=a,
                        entity_b=b,
                        probability=float(prob),
                        doc_id=abstract.doc_id,
                        sentence_index=sentence.index,
                    )


def graph_from_extractions(rows: Iterable[Extraction], source: str = "ie") -> KnowledgeGraph:
    """Aggregate extraction rows into a graph; confidence = max probability."""
    provenance: dict[Triple, frozenset[str]] = {}
    confidence: dict[Triple, float] = {}
    tag = frozenset({source})
    for row in rows:
        triple = make_triple(GENE_NS + row.entity_a, PPI, GENE_NS + row.entity_b)
        provenance[triple] = tag
        prev = confidence.get(triple)
        if prev is None or row.probability > prev:
            confidence[triple] = row.probability
    return KnowledgeGraph(provenance, confidence)


def extract_ppi(
    corpus_path: str | Path,
    ner_model: ner_mod.NerModel,
    re_model: relex_mod.ReModel,
    threshold: float,
    fmt: str = "jsonl",
    gazetteer: Iterable[str] | None = None,
    filter_species: bool = True,
    alias_map: dict[str, str] | None = None,
    source: str = "ie",
    report: ParseReport | None = None,
) -> KnowledgeGraph:
    """Extracted interaction graph with confidence = max probability per pair."""
    return graph_from_extractions(
        iter_extractions(
            corpus_path,
            ner_model,
            re_model,
            threshold,
            fmt=fmt,
            gazetteer=gazetteer,
            filter_species=filter_species,
            alias_map=alias_map,
            report=report,
        ),
        source=source,
    )


def write_extraction_tsv(rows: Iterable[Extraction], path: str | Path) -> int:
    """entity_a, entity_b, probability (4 decimals), doc_id, sentence_index."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(
                f"{row.entity_a}\t{row.entity_b}\t{row.probability:.4f}"
                f"\t{row.doc_id}\t{row.sentence_index}\n"
            )
            count += 1
    return count


def save_graph(graph: KnowledgeGraph, path: str | Path) -> None:
    """Diff-stable TSV: head, relation, tail, sources (comma-joined), confidence."""
    with open(path, "w", encoding="utf-8") as fh:
        for triple in sorted(graph.provenance):
            sources = ",".join(sorted(graph.provenance[triple]))
            conf = graph.confidence.get(triple)
            conf_str = "" if conf is None else repr(conf)
            fh.write(f"{triple.head}\t{triple.relation}\t{triple.tail}\t{sources}\t{conf_str}\n")


def load_graph(path: str | Path, report: ParseReport | None = None) -> KnowledgeGraph:
    """Inverse of save_graph."""
    if report is None:
        report = ParseReport(source=str(path))
    provenance: dict[Triple, frozenset[str]] = {}
    confidence: dict[Triple, float] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 5:
                report.add_error(line_no, f"expected 5 fields, got {len(parts)}")
                continue
            head, relation, tail, sources, conf_str = parts
            try:
                triple = make_triple(head, relation, tail)
                tags = frozenset(s for s in sources.split(",") if s)
                if not tags:
                    raise ValueError("no provenance tags")
                if conf_str:
                    confidence[triple] = float(conf_str)
            except ValueError as exc:
                report.add_error(line_no, str(exc))
                continue
            provenance[triple] = provenance.get(triple, frozenset()) | tags
            report.n_ok += 1
    return KnowledgeGraph(provenance, confidence)

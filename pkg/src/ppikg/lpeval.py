"""Filtered link-prediction evaluation: rank candidate genes per disease.

Each test triple (gene, relation, disease) becomes one query: every candidate
gene is scored against the disease, known-true candidates other than the
queried gene are filtered out of the pool, and the queried gene's rank uses
the average-tie convention (rounded up). Reports aggregate mean rank, mean
percentile, and hit@k.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .embed import EmbeddingModel, score_ids
from .kg import GENE_DISEASE, Triple, make_triple


@dataclass(frozen=True)
class RankedQuery:
    disease: str
    gene: str
    pool: int  # candidate pool size after filtering (queried gene included)
    rank: int  # 1 <= rank <= pool

    def __post_init__(self):
        if self.pool < 1:
            raise ValueError(f"pool must be >= 1, got {self.pool}")
        if not 1 <= self.rank <= self.pool:
            raise ValueError(f"rank {self.rank} outside [1, {self.pool}]")


@dataclass(frozen=True)
class EvalReport:
    mr: float
    mp: float
    hit30: float
    hit3: float
    hit1: float
    n_queries: int

    def to_dict(self) -> dict:
        return {
            "mr": self.mr,
            "mp": self.mp,
            "hit30": self.hit30,
            "hit3": self.hit3,
            "hit1": self.hit1,
            "n_queries": self.n_queries,
        }


def rank_genes(
    model: EmbeddingModel,
    disease: str,
    true_gene: str,
    all_genes: Sequence[str],
    known: set[Triple],
    relation: str = GENE_DISEASE,
    filtered: bool = True,
) -> RankedQuery:
    """Rank ``true_gene`` against all candidates for one disease query.

    Candidates whose (candidate, relation, disease) triple is already known
    are removed from the pool (except the queried gene itself) when
    ``filtered`` is on. rank = 1 + #strictly-higher + ceil(#ties / 2).
    """
    if true_gene not in set(all_genes):
        raise ValueError(f"true gene {true_gene!r} not in the candidate pool")
    t_id = model.entity_index(disease)
    r_id = model.relation_index(relation)
    gene_ids = np.array([model.entity_index(g) for g in all_genes])
    scores = score_ids(model, gene_ids, np.full_like(gene_ids, r_id), np.full_like(gene_ids, t_id))

    true_score: float | None = None
    kept_scores: list[float] = []
    for g, s in zip(all_genes, scores):
        if g == true_gene:
            true_score = float(s)
            kept_scores.append(float(s))
            continue
        if g == disease:
            continue  # a self-loop can never be a true triple
        if filtered and make_triple(g, relation, disease) in known:
            continue
        kept_scores.append(float(s))
    assert true_score is not None

    higher = sum(1 for s in kept_scores if s > true_score)
    ties = sum(1 for s in kept_scores if s == true_score) - 1
    rank = 1 + higher + math.ceil(ties / 2)
    return RankedQuery(disease=disease, gene=true_gene, pool=len(kept_scores), rank=rank)


def rank_queries(
    model: EmbeddingModel,
    test: Iterable[Triple],
    all_genes: Sequence[str],
    known: set[Triple],
    relation: str | None = None,
    filtered: bool = True,
) -> list[RankedQuery]:
    """One RankedQuery per test triple, in input order."""
    out = []
    for triple in test:
        out.append(
            rank_genes(
                model,
                disease=triple.tail,
                true_gene=triple.head,
                all_genes=all_genes,
                known=known,
                relation=relation or triple.relation,
                filtered=filtered,
            )
        )
    return out


def hit_at(queries: Sequence[RankedQuery], k: int) -> float:
    """Percentage of queries ranked in the top k."""
    if not queries:
        raise ValueError("no queries")
    return 100.0 * sum(1 for q in queries if q.rank <= k) / len(queries)


def summarize(queries: Sequence[RankedQuery]) -> EvalReport:
    if not queries:
        raise ValueError("no queries to summarize")
    n = len(queries)
    return EvalReport(
        mr=sum(q.rank for q in queries) / n,
        mp=sum(100.0 * (1.0 - (q.rank - 1) / q.pool) for q in queries) / n,
        hit30=hit_at(queries, 30),
        hit3=hit_at(queries, 3),
        hit1=hit_at(queries, 1),
        n_queries=n,
    )


def evaluate(
    model: EmbeddingModel,
    test: Iterable[Triple],
    all_genes: Sequence[str],
    known: set[Triple],
    relation: str | None = None,
    filtered: bool = True,
) -> EvalReport:
    """Filtered ranking metrics over a test triple set."""
    return summarize(rank_queries(model, test, all_genes, known, relation=relation, filtered=filtered))


@dataclass(frozen=True)
class RelativeChange:
    """Percentage changes between two runs: reduction for MR (lower is better),
    lift for MP and hit@k (higher is better). None marks an undefined change
    (baseline metric was 0)."""

    mr_reduction: float | None
    mp_lift: float | None
    hit30_lift: float | None
    hit3_lift: float | None
    hit1_lift: float | None

    def to_dict(self) -> dict:
        return {
            "mr_reduction": self.mr_reduction,
            "mp_lift": self.mp_lift,
            "hit30_lift": self.hit30_lift,
            "hit3_lift": self.hit3_lift,
            "hit1_lift": self.hit1_lift,
        }


def _lift(base: float, treat: float) -> float | None:
    if base == 0:
        return None
    return 100.0 * (treat - base) / base


def relative_change(baseline: EvalReport, treatment: EvalReport) -> RelativeChange:
    """Per-metric relative change of ``treatment`` against ``baseline``."""
    if baseline.n_queries == 0 or treatment.n_queries == 0:
        raise ValueError("reports must cover at least one query")
    mr_reduction = None
    if baseline.mr != 0:
        mr_reduction = 100.0 * (baseline.mr - treatment.mr) / baseline.mr
    return RelativeChange(
        mr_reduction=mr_reduction,
        mp_lift=_lift(baseline.mp, treatment.mp),
        hit30_lift=_lift(baseline.hit30, treatment.hit30),
        hit3_lift=_lift(baseline.hit3, treatment.hit3),
        hit1_lift=_lift(baseline.hit1, treatment.hit1),
    )


def write_report_json(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")


def write_ranks_tsv(queries: Sequence[RankedQuery], path: str | Path) -> None:
    """Per-query audit trail: disease, gene, rank, pool."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("disease\tgene\trank\tpool\n")
        for q in queries:
            fh.write(f"{q.disease}\t{q.gene}\t{q.rank}\t{q.pool}\n")

"""Deterministic synthetic data: gazetteer NER corpora, separable relation
sets, planted-embedding graphs, and the bundled toy dataset builder.

The planted-graph generator samples a ground-truth embedding model and keeps
the lowest-distance triples as the graph, so a correct trainer must be able
to recover the held-out edges by rank. Everything is seeded; the same seed
always produces byte-identical files.
"""

from __future__ import annotations

import json
import random
import string
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embed import EmbeddingModel, wrap_phase
from .kg import DISEASE_NS, GENE_DISEASE, GENE_NS, PPI, KnowledgeGraph, Triple, make_triple
from .ner import AnnotatedSentence, EntityMention, save_annotations
from .relex import LabeledCandidate, RelationCandidate, save_labeled_candidates

FILLER_WORDS = (
    "the",
    "a",
    "in",
    "of",
    "we",
    "show",
    "that",
    "expression",
    "signaling",
    "pathway",
    "cells",
    "levels",
    "during",
    "response",
    "analysis",
    "observed",
    "role",
    "function",
    "under",
    "conditions",
    "treatment",
    "increased",
    "reduced",
    "measured",
    "samples",
)

POSITIVE_CONNECTORS = ("binds", "interacts", "activates", "phosphorylates", "inhibits")
NEGATIVE_CONNECTORS = ("near", "alongside", "upstream", "precedes", "follows")


def make_protein_names(n: int, seed: int, two_token_fraction: float = 0.2) -> list[str]:
    """Unique protein-looking names; a fraction are two-token ("MTRX A2")."""
    rng = random.Random(seed)
    names: list[str] = []
    seen: set[str] = set()
    n_two = int(n * two_token_fraction)
    while len(names) < n:
        if len(names) < n - n_two:
            name = "".join(rng.choices(string.ascii_uppercase, k=rng.randint(3, 4)))
            name += str(rng.randint(1, 9))
        else:
            first = "".join(rng.choices(string.ascii_uppercase, k=rng.randint(4, 6)))
            second = rng.choice(string.ascii_uppercase) + str(rng.randint(1, 9))
            name = first + " " + second
        if name not in seen:
            seen.add(name)
            names.append(name)
    return names


def _entity_sentence(
    rng: random.Random, names: list[str], min_entities: int = 1, max_entities: int = 3
) -> AnnotatedSentence:
    n_fill = rng.randint(5, 10)
    tokens: list[str] = [rng.choice(FILLER_WORDS) for _ in range(n_fill)]
    n_entities = rng.randint(min_entities, max_entities)
    spans: list[tuple[int, int]] = []
    positions = sorted(rng.sample(range(n_fill + 1), k=min(n_entities, n_fill + 1)), reverse=True)
    for pos in positions:
        name_tokens = rng.choice(names).split(" ")
        tokens[pos:pos] = name_tokens
    # Recover spans by scanning: entity tokens are the only uppercase ones.
    spans = []
    i = 0
    while i < len(tokens):
        if tokens[i][0].isupper():
            j = i + 1
            while j < len(tokens) and tokens[j][0].isupper():
                j += 1
            spans.append((i, j))
            i = j
        else:
            i += 1
    tokens.append(".")
    return AnnotatedSentence(tokens=tuple(tokens), spans=tuple(spans))


def make_ner_dataset(
    n_train: int,
    n_test: int,
    seed: int,
    n_names: int = 50,
    names: list[str] | None = None,
) -> tuple[list[AnnotatedSentence], list[AnnotatedSentence], list[str]]:
    """Synthetic tagging corpus whose entities come from one shared gazetteer.

    Adjacent entity insertions merge into one gold span (the scanner cannot
    tell them apart), so the annotation is always consistent with the text.
    """
    rng = random.Random(seed)
    if names is None:
        names = make_protein_names(n_names, seed=seed + 1)
    train = [_entity_sentence(rng, names) for _ in range(n_train)]
    test = [_entity_sentence(rng, names) for _ in range(n_test)]
    return train, test, names


def _mention(tokens: list[str], start: int, end: int) -> EntityMention:
    surface = " ".join(tokens[start:end])
    return EntityMention(token_span=(start, end), surface=surface, entity_id=surface.upper())


def make_re_dataset(
    n: int,
    seed: int,
    names: list[str] | None = None,
    bystander_rate: float = 0.2,
) -> list[LabeledCandidate]:
    """Linearly separable labeled candidates: the connector decides the label."""
    rng = random.Random(seed)
    if names is None:
        names = [nm for nm in make_protein_names(30, seed=seed + 1) if " " not in nm]
    singles = [nm for nm in names if " " not in nm]
    out: list[LabeledCandidate] = []
    for _ in range(n):
        label = rng.random() < 0.5
        connector = rng.choice(POSITIVE_CONNECTORS if label else NEGATIVE_CONNECTORS)
        a_name, b_name = rng.sample(singles, 2)
        lead = [rng.choice(FILLER_WORDS) for _ in range(rng.randint(0, 3))]
        mid_left = [rng.choice(FILLER_WORDS) for _ in range(rng.randint(0, 2))]
        mid_right = [rng.choice(FILLER_WORDS) for _ in range(rng.randint(0, 2))]
        tail = [rng.choice(FILLER_WORDS) for _ in range(rng.randint(0, 3))]
        tokens = lead + [a_name] + mid_left + [connector] + mid_right + [b_name] + tail
        bystanders: list[EntityMention] = []
        if rng.random() < bystander_rate:
            c_name = rng.choice([nm for nm in singles if nm not in (a_name, b_name)])
            tokens.append(c_name)
            bystanders.append(_mention(tokens, len(tokens) - 1, len(tokens)))
        tokens.append(".")
        a_start = len(lead)
        b_start = len(lead) + 1 + len(mid_left) + 1 + len(mid_right)
        cand = RelationCandidate(
            doc_id="synthetic",
            sentence_index=0,
            tokens=tuple(tokens),
            mention_a=_mention(tokens, a_start, a_start + 1),
            mention_b=_mention(tokens, b_start, b_start + 1),
            bystanders=tuple(bystanders),
        )
        out.append(LabeledCandidate(candidate=cand, label=label))
    return out


def make_toy_vectors(words: list[str], seed: int, dim: int = 10) -> list[str]:
    """Vector file lines. Uppercase (entity-like) words get a positive first
    component, other words a negative one, so sign features carry signal."""
    rng = random.Random(seed)
    lines = []
    for word in sorted(set(words)):
        first = rng.uniform(0.5, 1.5) if word[0].isupper() else rng.uniform(-1.5, -0.5)
        rest = [rng.uniform(-1.0, 1.0) for _ in range(dim - 1)]
        values = " ".join(f"{v:.4f}" for v in [first] + rest)
        lines.append(f"{word} {values}")
    return lines


def planted_embedding_model(
    entities: list[str],
    relations: list[str],
    dim: int,
    seed: int,
    gamma: float = 12.0,
    scale: float = 1.0,
    n_clusters: int | None = None,
    cluster_noise: float = 0.1,
) -> EmbeddingModel:
    """Ground-truth model with uniform entities, or clustered ones when
    ``n_clusters`` is set (entity = cluster center + small noise), which gives
    the induced graph a much sharper learnable structure."""
    rng = np.random.default_rng(seed)
    n_e, n_r = len(entities), len(relations)
    if n_clusters:
        centers_re = rng.uniform(-scale, scale, (n_clusters, dim))
        centers_im = rng.uniform(-scale, scale, (n_clusters, dim))
        assign = np.array([i % n_clusters for i in range(n_e)])
        entity_re = centers_re[assign] + rng.uniform(-cluster_noise, cluster_noise, (n_e, dim))
        entity_im = centers_im[assign] + rng.uniform(-cluster_noise, cluster_noise, (n_e, dim))
    else:
        entity_re = rng.uniform(-scale, scale, (n_e, dim))
        entity_im = rng.uniform(-scale, scale, (n_e, dim))
    return EmbeddingModel(
        entity_re=entity_re,
        entity_im=entity_im,
        relation_phase=wrap_phase(rng.uniform(0.0, 2.0 * np.pi, (n_r, dim))),
        gamma=gamma,
        entities=tuple(entities),
        relations=tuple(relations),
    )


def _all_candidate_triples(entities: list[str]) -> list[Triple]:
    out = []
    for i, h in enumerate(entities):
        for j, t in enumerate(entities):
            if i == j:
                continue
            out.append(make_triple(h, GENE_DISEASE, t))
            if i < j:
                out.append(make_triple(h, PPI, t))
    return out


def _distances(truth: EmbeddingModel, triples: list[Triple]) -> np.ndarray:
    from .embed import _distance_ids

    h = np.array([truth.ent2id[t.head] for t in triples])
    r = np.array([truth.rel2id[t.relation] for t in triples])
    t_ = np.array([truth.ent2id[t.tail] for t in triples])
    return _distance_ids(truth, h, r, t_)


@dataclass
class PlantedGraph:
    train: KnowledgeGraph
    heldout: list[Triple]
    truth: EmbeddingModel
    entities: list[str]


def planted_graph(
    n_entities: int = 40,
    dim: int = 8,
    seed: int = 0,
    n_train: int = 300,
    n_heldout: int = 30,
    n_clusters: int | None = None,
) -> PlantedGraph:
    """Graph of the ``n_train + n_heldout`` lowest-distance triples under a
    sampled ground-truth model, split into train and held-out sets."""
    entities = [f"e{i:02d}" for i in range(n_entities)]
    truth = planted_embedding_model(
        entities, [GENE_DISEASE, PPI], dim=dim, seed=seed, n_clusters=n_clusters
    )
    candidates = _all_candidate_triples(entities)
    dists = _distances(truth, candidates)
    ranked = sorted(zip(dists, candidates), key=lambda pair: (pair[0], pair[1]))
    keep = [triple for _, triple in ranked[: n_train + n_heldout]]
    rng = random.Random(seed + 1)
    rng.shuffle(keep)
    train_triples = keep[:n_train]
    heldout = keep[n_train:]
    return PlantedGraph(
        train=KnowledgeGraph.from_triples(train_triples, source="planted"),
        heldout=heldout,
        truth=truth,
        entities=entities,
    )


# ---------------------------------------------------------------------------
# Bundled toy dataset
# ---------------------------------------------------------------------------


def _score_from_distance(dists: np.ndarray, low: float, high: float) -> np.ndarray:
    """Map distances onto [low, high], lowest distance -> highest score."""
    dmin, dmax = float(dists.min()), float(dists.max())
    span = dmax - dmin if dmax > dmin else 1.0
    return high - (high - low) * (dists - dmin) / span


def build_toy_data(out_dir: str | Path, seed: int = 7) -> dict[str, Path]:
    """Write the bundled desk-scale dataset used by the demos and smoke tests.

    Contents: a 50-abstract corpus, species gazetteer, toy word vectors,
    tagging and relation annotations, and planted-model edge files
    (disgenet.tsv, string.tsv, ie_v1/2/3.tsv) constructed so that augmenting
    the gene-disease graph with the interaction sources genuinely helps link
    prediction.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    paths: dict[str, Path] = {}

    gene_names = [nm for nm in make_protein_names(40, seed=seed + 10) if " " not in nm][:30]
    assert len(gene_names) == 30
    diseases = [f"D{i:02d}" for i in range(1, 11)]
    gene_nodes = [GENE_NS + g for g in gene_names]
    disease_nodes = [DISEASE_NS + d for d in diseases]
    entities = gene_nodes + disease_nodes

    truth = planted_embedding_model(
        entities, [GENE_DISEASE, PPI], dim=2, seed=seed, n_clusters=8
    )

    gd_triples = [make_triple(g, GENE_DISEASE, d) for g in gene_nodes for d in disease_nodes]
    gd_dists = _distances(truth, gd_triples)
    gd_order = sorted(zip(gd_dists, gd_triples), key=lambda p: (p[0], p[1]))

    ppi_triples = [
        make_triple(gene_nodes[i], PPI, gene_nodes[j])
        for i in range(len(gene_nodes))
        for j in range(i + 1, len(gene_nodes))
    ]
    ppi_dists = _distances(truth, ppi_triples)
    ppi_order = sorted(zip(ppi_dists, ppi_triples), key=lambda p: (p[0], p[1]))

    # Gene-disease edge file (140 strongest planted associations).
    n_gd = 140
    gd_sel = gd_order[:n_gd]
    gd_scores = _score_from_distance(np.array([d for d, _ in gd_sel]), 0.15, 0.95)
    disgenet = out / "disgenet.tsv"
    with open(disgenet, "w", encoding="utf-8") as fh:
        for (dist, triple), score_val in zip(gd_sel, gd_scores):
            gene = triple.head.removeprefix(GENE_NS)
            disease = triple.tail.removeprefix(DISEASE_NS)
            fh.write(f"{gene}\t{disease}\t{score_val:.3f}\n")
    paths["disgenet"] = disgenet

    # Structured interaction file (170 strongest planted pairs).
    n_string = 170
    string_sel = ppi_order[:n_string]
    string_scores = _score_from_distance(np.array([d for d, _ in string_sel]), 150, 999)
    string_path = out / "string.tsv"
    with open(string_path, "w", encoding="utf-8") as fh:
        for (dist, triple), score_val in zip(string_sel, string_scores):
            a = triple.head.removeprefix(GENE_NS)
            b = triple.tail.removeprefix(GENE_NS)
            fh.write(f"{a}\t{b}\t{int(round(score_val))}\n")
    paths["string"] = string_path

    # Text-mined interaction files: each re-finds part of the structured set,
    # adds new planted pairs beyond it, and (for the high-recall versions)
    # some random noise pairs. Sizes grow v1 < v2 < v3.
    beyond = [t for _, t in ppi_order[n_string:]]
    noise_pool = [t for _, t in ppi_order[-60:]]  # weakest planted pairs = junk edges

    def write_ie(name: str, variant: int, n_refound: int, n_new: int, n_noise: int) -> Path:
        refound = [t for _, t in string_sel[:n_refound]]
        new = beyond[:n_new]
        noise_rng = random.Random(seed + 100 + variant)
        noise = noise_rng.sample([t for t in noise_pool if t not in set(new)], n_noise)
        rows = []
        for i, triple in enumerate(refound + new):
            prob = 0.97 - 0.4 * i / max(len(refound) + len(new), 1)
            rows.append((triple, prob))
        for triple in noise:
            rows.append((triple, noise_rng.uniform(0.5, 0.7)))
        path = out / f"{name}.tsv"
        with open(path, "w", encoding="utf-8") as fh:
            for j, (triple, prob) in enumerate(rows):
                a = triple.head.removeprefix(GENE_NS)
                b = triple.tail.removeprefix(GENE_NS)
                fh.write(f"{a}\t{b}\t{prob:.4f}\td{j % 50 + 1:03d}\t{j % 4}\n")
        return path

    paths["ie_v1"] = write_ie("ie_v1", 1, n_refound=12, n_new=40, n_noise=0)
    paths["ie_v2"] = write_ie("ie_v2", 2, n_refound=20, n_new=80, n_noise=10)
    paths["ie_v3"] = write_ie("ie_v3", 3, n_refound=30, n_new=120, n_noise=30)

    # Tagging corpus + annotations sharing the corpus gene names.
    ner_train, ner_test, _ = make_ner_dataset(120, 30, seed=seed + 20, names=gene_names)

    paths["ner_train"] = out / "ner_train.jsonl"
    paths["ner_test"] = out / "ner_test.jsonl"
    save_annotations(ner_train, paths["ner_train"])
    save_annotations(ner_test, paths["ner_test"])

    # Relation annotations (candidate level).
    re_train = make_re_dataset(240, seed=seed + 30, names=gene_names)
    re_valid = make_re_dataset(60, seed=seed + 31, names=gene_names)
    paths["re_train"] = out / "re_train.jsonl"
    paths["re_valid"] = out / "re_valid.jsonl"
    save_labeled_candidates(re_train, paths["re_train"])
    save_labeled_candidates(re_valid, paths["re_valid"])

    # Abstract corpus: interaction statements over the planted pairs, species
    # terms in most documents, a few off-species documents for the filter.
    corpus_path = out / "corpus.jsonl"
    strongest_pairs = [t for _, t in ppi_order[:60]]
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for i in range(50):
            doc_id = f"d{i + 1:03d}"
            off_species = i % 10 == 9
            species = "yeast cultures" if off_species else rng.choice(
                ["human cells", "mouse models", "murine tissue", "human samples"]
            )
            pair = strongest_pairs[i % len(strongest_pairs)]
            a = pair.head.removeprefix(GENE_NS)
            b = pair.tail.removeprefix(GENE_NS)
            connector = rng.choice(POSITIVE_CONNECTORS)
            other_a, other_b = rng.sample(gene_names, 2)
            neg_connector = rng.choice(NEGATIVE_CONNECTORS)
            title = f"Regulation of {a} in {species}"
            body = (
                f"We show that {a} {connector} {b} in {species}. "
                f"In contrast, {other_a} was detected {neg_connector} {other_b} without interaction. "
                f"See Fig. 1 for details."
            )
            fh.write(json.dumps({"doc_id": doc_id, "title": title, "body": body}) + "\n")
    paths["corpus"] = corpus_path

    gazetteer_path = out / "gazetteer.txt"
    gazetteer_path.write_text(
        "# species relevance terms\nhuman\nhomo sapiens\nmouse\nmice\nmurine\nmus musculus\n",
        encoding="utf-8",
    )
    paths["gazetteer"] = gazetteer_path

    vocab = list(FILLER_WORDS) + list(POSITIVE_CONNECTORS) + list(NEGATIVE_CONNECTORS)
    vocab += gene_names + ["regulation", "contrast", "detected", "without", "interaction", "details"]
    for sent in ner_train + ner_test:
        vocab.extend(tok for tok in sent.tokens if tok != ".")
    vectors_path = out / "vectors.txt"
    vectors_path.write_text("\n".join(make_toy_vectors(vocab, seed=seed + 40)) + "\n", encoding="utf-8")
    paths["vectors"] = vectors_path

    aliases_path = out / "aliases.tsv"
    with open(aliases_path, "w", encoding="utf-8") as fh:
        fh.write(f"{gene_names[0].lower()}\t{gene_names[0]}\n")
        fh.write(f"{gene_names[1]}-ALPHA\t{gene_names[1]}\n")
    paths["aliases"] = aliases_path

    config_path = out / "experiment.toml"
    config_path.write_text(
        "\n".join(
            [
                "# embedding training knobs for the bundled five-arm comparison",
                "dim = 16",
                "gamma = 6.0",
                "learning_rate = 0.1",
                "batch_size = 64",
                "negatives = 8",
                "adversarial_temperature = 1.0",
                "epochs = 150",
                "seed = 7",
                "",
            ]
        ),
        encoding="utf-8",
    )
    paths["experiment_config"] = config_path
    return paths

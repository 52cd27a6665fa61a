import json
import random

import numpy as np
import pytest

from ppikg.ioutils import ParseReport
from ppikg.kg import (
    GENE_DISEASE,
    PPI,
    KnowledgeGraph,
    SplitSpec,
    Triple,
    extract_ppi,
    graph_from_extractions,
    iter_extractions,
    load_edges,
    load_graph,
    make_triple,
    merge,
    overlap_stats,
    save_graph,
    split,
    write_extraction_tsv,
)


def ppi_graph(pairs, source="test"):
    return KnowledgeGraph.from_triples(
        [make_triple(f"gene:{a}", PPI, f"gene:{b}") for a, b in pairs], source=source
    )


def random_graph(rng, source, n_max=12):
    triples = set()
    for _ in range(rng.randint(0, n_max)):
        a, b = rng.sample(range(8), 2)
        if rng.random() < 0.5:
            triples.add(make_triple(f"gene:g{a}", PPI, f"gene:g{b}"))
        else:
            triples.add(make_triple(f"gene:g{a}", GENE_DISEASE, f"disease:d{b}"))
    return KnowledgeGraph.from_triples(triples, source=source)


class TestTriples:
    def test_ppi_canonical_order(self):
        t = make_triple("gene:B", PPI, "gene:A")
        assert (t.head, t.tail) == ("gene:A", "gene:B")

    def test_gene_disease_direction_preserved(self):
        t = make_triple("gene:Z", GENE_DISEASE, "disease:A")
        assert t.head == "gene:Z"

    def test_self_loop_rejected(self):
        with pytest.raises(ValueError, match="self-loop"):
            make_triple("gene:A", PPI, "gene:A")

    def test_unknown_relation_rejected(self):
        with pytest.raises(ValueError, match="relation"):
            make_triple("a", "causes", "b")


class TestLoadEdges:
    def test_undirected_dedup(self, tmp_path):
        path = tmp_path / "s.tsv"
        path.write_text("A\tB\t900\nB\tA\t900\n", encoding="utf-8")
        graph = load_edges(path, "string_ppi")
        assert len(graph) == 1
        (t,) = graph.triples
        assert (t.head, t.tail) == ("gene:A", "gene:B")
        assert graph.confidence[t] == 0.9

    def test_min_score_threshold(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("G1\tD1\t0.3\nG2\tD2\t0.7\n", encoding="utf-8")
        graph = load_edges(path, "disgenet_gd", min_score=0.5)
        assert {t.head for t in graph} == {"gene:G2"}

    def test_dedup_count_oracle(self, tmp_path):
        rows = [
            ("A", "B", 500), ("B", "A", 700), ("C", "D", 400), ("A", "C", 300),
            ("D", "K", 400), ("E", "F", 900), ("F", "E", 100), ("G", "H", 800),
            ("H", "I", 600), ("I", "J", 500),
        ]
        path = tmp_path / "s.tsv"
        path.write_text("".join(f"{a}\t{b}\t{s}\n" for a, b, s in rows), encoding="utf-8")
        graph = load_edges(path, "string_ppi")
        # set-based oracle over canonicalized pairs
        expected = {tuple(sorted((a, b))) for a, b, _ in rows}
        assert len(graph) == len(expected) == 8
        # confidence keeps the max over duplicate sightings
        ef = make_triple("gene:E", PPI, "gene:F")
        assert graph.confidence[ef] == 0.9

    def test_malformed_row_reported(self, tmp_path):
        path = tmp_path / "s.tsv"
        path.write_text("A\tB\t900\nA\tB\n1\t2\tnot_a_number\nA\tA\t500\n", encoding="utf-8")
        report = ParseReport()
        graph = load_edges(path, "string_ppi", report=report)
        assert len(graph) == 1
        assert len(report.errors) == 3  # short row, bad score, self-loop

    def test_unknown_schema_fatal(self, tmp_path):
        path = tmp_path / "x.tsv"
        path.write_text("A\tB\t1\n", encoding="utf-8")
        with pytest.raises(ValueError, match="schema"):
            load_edges(path, "mystery")

    def test_ie_schema_and_source_tag(self, tmp_path):
        path = tmp_path / "ie.tsv"
        path.write_text("A\tB\t0.9123\td1\t0\nB\tA\t0.5\td2\t1\n", encoding="utf-8")
        graph = load_edges(path, "ie_tsv", source="ie_v3")
        (t,) = graph.triples
        assert graph.provenance[t] == frozenset({"ie_v3"})
        assert graph.confidence[t] == 0.9123

    def test_alias_applied_before_namespacing(self, tmp_path):
        path = tmp_path / "s.tsv"
        path.write_text("P53\tMDM2\t800\n", encoding="utf-8")
        graph = load_edges(path, "string_ppi", alias={"P53": "TP53"})
        assert {t.head for t in graph} | {t.tail for t in graph} == {"gene:TP53", "gene:MDM2"}


class TestMerge:
    def test_idempotence(self):
        g = ppi_graph([("A", "B"), ("C", "D")])
        assert merge([g, g]) == g

    def test_identity(self):
        g = ppi_graph([("A", "B")])
        assert merge([g, KnowledgeGraph()]) == g

    def test_inclusion_exclusion_on_random_graphs(self):
        rng = random.Random(17)
        for _ in range(200):
            a = random_graph(rng, "a")
            b = random_graph(rng, "b")
            merged = merge([a, b])
            assert len(merged) == len(a) + len(b) - len(a.triples & b.triples)

    def test_associative_commutative(self):
        rng = random.Random(23)
        for _ in range(50):
            a, b, c = (random_graph(rng, s) for s in "abc")
            assert merge([a, b]) == merge([b, a])
            assert merge([merge([a, b]), c]) == merge([a, merge([b, c])])

    def test_provenance_union_confidence_max(self):
        t = make_triple("gene:A", PPI, "gene:B")
        g1 = KnowledgeGraph({t: frozenset({"string"})}, {t: 0.4})
        g2 = KnowledgeGraph({t: frozenset({"ie_v1"})}, {t: 0.9})
        merged = merge([g1, g2])
        assert merged.provenance[t] == frozenset({"string", "ie_v1"})
        assert merged.confidence[t] == 0.9


class TestSplit:
    def build(self, n):
        triples = [make_triple(f"gene:g{i}", GENE_DISEASE, f"disease:d{i % 3}") for i in range(n)]
        return KnowledgeGraph.from_triples(triples, source="disgenet")

    def test_exact_ratios_on_ten(self):
        # every entity appears in train through the shared diseases, except
        # possibly isolated genes; build so genes repeat
        triples = [make_triple(f"gene:g{i % 5}", GENE_DISEASE, f"disease:d{i}") for i in range(10)]
        graph = KnowledgeGraph.from_triples(triples, source="x")
        result = split(graph, SplitSpec(0.8, 0.1, 0.1, seed=3), GENE_DISEASE)
        sizes = (len(result.train), len(result.valid), len(result.test))
        assert sum(sizes) == 10
        assert sizes[0] >= 8 and sizes[1] <= 1 and sizes[2] <= 1

    def test_same_seed_identical(self):
        graph = self.build(40)
        r1 = split(graph, SplitSpec(seed=7), GENE_DISEASE)
        r2 = split(graph, SplitSpec(seed=7), GENE_DISEASE)
        assert r1.train == r2.train and r1.valid == r2.valid and r1.test == r2.test

    def test_partition_disjoint_exhaustive(self):
        graph = self.build(37)
        result = split(graph, SplitSpec(seed=1), GENE_DISEASE)
        parts = [result.train.triples, result.valid.triples, result.test.triples]
        assert parts[0] | parts[1] | parts[2] == graph.triples
        assert not (parts[0] & parts[1]) and not (parts[0] & parts[2]) and not (parts[1] & parts[2])

    def test_ratio_accuracy_within_one(self):
        rng = random.Random(5)
        for _ in range(20):
            n = rng.randint(5, 60)
            graph = self.build(n)
            result = split(graph, SplitSpec(seed=rng.randint(0, 99)), GENE_DISEASE)
            # reassignment only moves triples into train, so check valid/test
            assert abs(len(result.valid) - 0.1 * n) <= 1 + result.n_reassigned
            assert abs(len(result.test) - 0.1 * n) <= 1 + result.n_reassigned

    def test_other_relations_all_go_to_train(self):
        graph = merge([self.build(10), ppi_graph([("A", "B"), ("C", "D")])])
        result = split(graph, SplitSpec(seed=2), GENE_DISEASE)
        assert result.train.by_relation(PPI) == graph.by_relation(PPI)
        assert not result.valid.by_relation(PPI) and not result.test.by_relation(PPI)

    def test_cold_entity_reassigned_to_train(self):
        # three triples, ratios putting one in valid and one in test; the
        # isolated gene of any held-out triple forces reassignment
        triples = [
            make_triple("gene:a", GENE_DISEASE, "disease:x"),
            make_triple("gene:b", GENE_DISEASE, "disease:x"),
            make_triple("gene:c", GENE_DISEASE, "disease:x"),
        ]
        graph = KnowledgeGraph.from_triples(triples, source="t")
        result = split(graph, SplitSpec(train=0.34, valid=0.33, test=0.33, seed=0), GENE_DISEASE)
        # genes appear once each: both held-out triples must come back
        assert result.n_reassigned == 2
        assert len(result.train) == 3

    def test_entities_of_heldout_always_in_train(self):
        rng = random.Random(11)
        for seed in range(10):
            graph = self.build(rng.randint(10, 50))
            result = split(graph, SplitSpec(seed=seed), GENE_DISEASE)
            train_entities = result.train.entities()
            for part in (result.valid, result.test):
                for t in part:
                    assert t.head in train_entities and t.tail in train_entities

    def test_bad_ratios_rejected(self):
        with pytest.raises(ValueError, match="sum"):
            split(self.build(10), SplitSpec(0.8, 0.1, 0.2, seed=0), GENE_DISEASE)
        with pytest.raises(ValueError, match=">= 0"):
            split(self.build(10), SplitSpec(1.2, -0.1, -0.1, seed=0), GENE_DISEASE)


class TestOverlap:
    def test_self_overlap_100(self):
        g = ppi_graph([("A", "B"), ("C", "D")])
        assert overlap_stats(g, g).pct_extracted_in_reference == 100.0

    def test_disjoint_zero(self):
        a = ppi_graph([("A", "B")])
        b = ppi_graph([("C", "D")])
        assert overlap_stats(a, b).pct_extracted_in_reference == 0.0

    def test_toy_scale_reconstruction(self):
        # 9 shared out of 37 extracted reproduces the published share
        shared = [(f"s{i}", f"t{i}") for i in range(9)]
        only_extracted = [(f"x{i}", f"y{i}") for i in range(28)]
        only_reference = [(f"p{i}", f"q{i}") for i in range(5)]
        extracted = ppi_graph(shared + only_extracted, source="ie")
        reference = ppi_graph(shared + only_reference, source="string")
        report = overlap_stats(extracted, reference)
        assert report.n_extracted == 37 and report.n_shared == 9
        assert report.pct_extracted_in_reference == pytest.approx(24.32, abs=0.01)

    def test_symmetric_shared_count(self):
        rng = random.Random(2)
        for _ in range(20):
            a, b = random_graph(rng, "a"), random_graph(rng, "b")
            assert overlap_stats(a, b).n_shared == overlap_stats(b, a).n_shared

    def test_empty_extracted(self):
        report = overlap_stats(KnowledgeGraph(), ppi_graph([("A", "B")]))
        assert report.pct_extracted_in_reference == 0.0


def rigged_models(vocab_names):
    """A gazetteer-perfect tagger and an always-positive classifier."""
    from ppikg.ner import NerModel
    from ppikg.relex import FeatureConfig, ReModel

    weights = {}
    for name in vocab_names:
        weights[f"w={name.lower()}"] = [100.0, -100.0, -100.0]
    weights["bias"] = [-10.0, -50.0, 10.0]
    ner_model = NerModel(weights=weights)
    re_model = ReModel(
        weights=np.zeros(64), bias=50.0, config=FeatureConfig(n_buckets=64, dim=0)
    )
    return ner_model, re_model


class TestExtract:
    def _write_corpus(self, tmp_path, docs):
        path = tmp_path / "corpus.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            for i, body in enumerate(docs):
                fh.write(json.dumps({"doc_id": f"d{i}", "title": "human study", "body": body}) + "\n")
        return path

    def test_no_multi_mention_sentences_empty_graph(self, tmp_path):
        ner_model, re_model = rigged_models(["AAA1"])
        path = self._write_corpus(tmp_path, ["AAA1 works alone.", "nothing here."])
        graph = extract_ppi(path, ner_model, re_model, threshold=0.5)
        assert len(graph) == 0

    def test_threshold_monotonicity(self, tmp_path):
        ner_model, re_model = rigged_models(["AAA1", "BBB2", "CCC3"])
        # vary the classifier so probabilities differ per pair
        re_model.bias = 0.1
        path = self._write_corpus(
            tmp_path,
            ["AAA1 binds BBB2.", "BBB2 binds CCC3 and AAA1.", "CCC3 interacts AAA1."],
        )
        low = extract_ppi(path, ner_model, re_model, threshold=0.05)
        high = extract_ppi(path, ner_model, re_model, threshold=0.51)
        assert high.triples <= low.triples

    def test_hand_annotated_fixture(self, tmp_path):
        # 20 abstracts; expected pairs enumerated by hand from the bodies
        names = [f"GEN{i}X" for i in range(10)]
        docs = []
        expected = set()
        for i in range(20):
            a, b = names[i % 10], names[(i + 3) % 10]
            docs.append(f"{a} binds {b} in human cells.")
            expected.add(make_triple(f"gene:{a.upper()}", PPI, f"gene:{b.upper()}"))
        ner_model, re_model = rigged_models(names)
        path = self._write_corpus(tmp_path, docs)
        graph = extract_ppi(path, ner_model, re_model, threshold=0.5)
        assert graph.triples == expected

    def test_species_filter_applied(self, tmp_path):
        ner_model, re_model = rigged_models(["AAA1", "BBB2"])
        path = tmp_path / "c.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"doc_id": "1", "title": "yeast only", "body": "AAA1 binds BBB2."}) + "\n")
        assert len(extract_ppi(path, ner_model, re_model, threshold=0.5)) == 0
        assert len(extract_ppi(path, ner_model, re_model, threshold=0.5, filter_species=False)) == 1

    def test_extraction_rows_and_graph_agree(self, tmp_path):
        ner_model, re_model = rigged_models(["AAA1", "BBB2"])
        path = self._write_corpus(tmp_path, ["AAA1 binds BBB2.", "BBB2 binds AAA1."])
        rows = list(iter_extractions(path, ner_model, re_model, threshold=0.5))
        assert len(rows) == 2
        assert all(row.entity_a <= row.entity_b for row in rows)
        graph = graph_from_extractions(rows, source="ie_v1")
        assert len(graph) == 1

    def test_write_extraction_tsv_format(self, tmp_path):
        from ppikg.kg import Extraction

        rows = [Extraction("A", "B", 0.98765, "d1", 2)]
        path = tmp_path / "out.tsv"
        write_extraction_tsv(rows, path)
        assert path.read_text(encoding="utf-8") == "A\tB\t0.9877\td1\t2\n"

    def test_bad_threshold_rejected(self, tmp_path):
        ner_model, re_model = rigged_models(["AAA1"])
        path = self._write_corpus(tmp_path, ["AAA1."])
        with pytest.raises(ValueError, match="threshold"):
            list(iter_extractions(path, ner_model, re_model, threshold=1.5))


class TestGraphSerialization:
    def test_round_trip(self, tmp_path):
        rng = random.Random(31)
        graph = merge([random_graph(rng, "string"), random_graph(rng, "ie_v2")])
        path = tmp_path / "g.tsv"
        save_graph(graph, path)
        assert load_graph(path) == graph

    def test_loading_twice_yields_equal_graphs(self, tmp_path):
        graph = ppi_graph([("A", "B"), ("C", "D")])
        path = tmp_path / "g.tsv"
        save_graph(graph, path)
        assert load_graph(path) == load_graph(path)

    def test_rows_sorted_for_diff_stability(self, tmp_path):
        graph = ppi_graph([("Z", "Y"), ("A", "B"), ("M", "N")])
        path = tmp_path / "g.tsv"
        save_graph(graph, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines == sorted(lines)

    def test_canonical_head_tail_invariant(self, tmp_path):
        rng = random.Random(13)
        graph = random_graph(rng, "x")
        for t in graph:
            if t.relation == PPI:
                assert t.head <= t.tail

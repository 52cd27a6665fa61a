import numpy as np
import pytest

from ppikg.ner import EntityMention
from ppikg.relex import (
    FeatureConfig,
    LabeledCandidate,
    MASK_A,
    MASK_B,
    MASK_OTHER,
    RelationCandidate,
    ReModel,
    ReTrainConfig,
    candidate_features,
    eval_re,
    featurize_matrix,
    generate_candidates,
    load_labeled_candidates,
    load_re_model,
    logistic_loss_grad,
    mask_entities,
    predict,
    predict_batch,
    save_labeled_candidates,
    save_re_model,
    train_re,
    tune_threshold,
)
from ppikg.synthetic import make_re_dataset, make_toy_vectors
from ppikg.vectors import WordVectors


def mention(tokens, start, end, entity_id=None):
    surface = " ".join(tokens[start:end])
    return EntityMention(
        token_span=(start, end), surface=surface, entity_id=entity_id or surface.upper()
    )


def candidate(tokens, a, b, bystanders=(), doc_id="d1"):
    return RelationCandidate(
        doc_id=doc_id,
        sentence_index=0,
        tokens=tuple(tokens),
        mention_a=a,
        mention_b=b,
        bystanders=tuple(bystanders),
    )


@pytest.fixture(scope="module")
def re_data():
    return make_re_dataset(300, seed=3)


@pytest.fixture(scope="module")
def re_vectors(tmp_path_factory, re_data):
    vocab = sorted({tok for lc in re_data for tok in lc.candidate.tokens})
    path = tmp_path_factory.mktemp("vec") / "vectors.txt"
    path.write_text("\n".join(make_toy_vectors(vocab, seed=5)) + "\n", encoding="utf-8")
    return WordVectors.load(path)


@pytest.fixture(scope="module")
def feature_config(re_vectors):
    return FeatureConfig(masking=True, n_buckets=4096, dim=re_vectors.dim)


@pytest.fixture(scope="module")
def re_model(re_data, re_vectors, feature_config):
    return train_re(
        re_data, feature_config, ReTrainConfig(epochs=50, lr=0.5, seed=7), vectors=re_vectors
    )


class TestGenerateCandidates:
    def test_three_mentions_three_candidates(self):
        tokens = ["A1", "binds", "B2", "and", "C3"]
        mentions = [mention(tokens, 0, 1), mention(tokens, 2, 3), mention(tokens, 4, 5)]
        assert len(generate_candidates(tokens, mentions)) == 3

    def test_single_mention_no_candidates(self):
        tokens = ["A1", "alone"]
        assert generate_candidates(tokens, [mention(tokens, 0, 1)]) == []

    def test_same_entity_pair_dropped(self):
        tokens = ["A1", "binds", "A-one", "and", "B2"]
        mentions = [
            mention(tokens, 0, 1, entity_id="A1"),
            mention(tokens, 2, 3, entity_id="A1"),  # alias of the first
            mention(tokens, 4, 5, entity_id="B2"),
        ]
        # enumerate-pairs oracle: C(3,2)=3 minus the one same-entity pair
        cands = generate_candidates(tokens, mentions)
        assert len(cands) == 2
        pairs = {(c.mention_a.entity_id, c.mention_b.entity_id) for c in cands}
        assert pairs == {("A1", "B2"), ("A1", "B2")} or len(pairs) <= 2

    def test_candidate_count_formula(self):
        import itertools
        import random

        rng = random.Random(8)
        for _ in range(30):
            n = rng.randint(0, 6)
            tokens = [f"E{i}" for i in range(2 * n)] or ["x"]
            ids = [rng.choice(["X", "Y", "Z", f"E{i}"]) for i in range(n)]
            mentions = [mention(tokens, 2 * i, 2 * i + 1, entity_id=ids[i]) for i in range(n)]
            expected = sum(
                1 for a, b in itertools.combinations(range(n), 2) if ids[a] != ids[b]
            )
            assert len(generate_candidates(tokens, mentions)) == expected

    def test_ordering_and_bystanders(self):
        tokens = ["A1", "x", "B2", "y", "C3"]
        mentions = [mention(tokens, 4, 5), mention(tokens, 0, 1), mention(tokens, 2, 3)]
        cands = generate_candidates(tokens, mentions)
        for c in cands:
            assert c.mention_a.start < c.mention_b.start
        first = next(c for c in cands if c.mention_a.start == 0 and c.mention_b.start == 2)
        assert [m.start for m in first.bystanders] == [4]

    def test_overlapping_mentions_rejected(self):
        tokens = ["A1", "B2", "c"]
        with pytest.raises(ValueError, match="overlap"):
            generate_candidates(tokens, [mention(tokens, 0, 2), mention(tokens, 1, 2)])


class TestMasking:
    def test_direct_substitution(self):
        tokens = ["ARAP2", "binds", "ARF6"]
        c = candidate(tokens, mention(tokens, 0, 1), mention(tokens, 2, 3))
        assert mask_entities(c) == (MASK_A, "binds", MASK_B)

    def test_bystander_masked(self):
        tokens = ["ARAP2", "binds", "ARF6", "near", "P53"]
        c = candidate(
            tokens,
            mention(tokens, 0, 1),
            mention(tokens, 2, 3),
            bystanders=[mention(tokens, 4, 5)],
        )
        assert mask_entities(c) == (MASK_A, "binds", MASK_B, "near", MASK_OTHER)

    def test_multi_token_mention_collapses(self):
        tokens = ["growth", "factor", "binds", "ARF6"]
        c = candidate(tokens, mention(tokens, 0, 2), mention(tokens, 3, 4))
        assert mask_entities(c) == (MASK_A, "binds", MASK_B)

    def test_idempotent_after_remapping(self):
        tokens = ["x", "ARAP2", "binds", "ARF6", "near", "P53", "y"]
        c = candidate(
            tokens,
            mention(tokens, 1, 2),
            mention(tokens, 3, 4),
            bystanders=[mention(tokens, 5, 6)],
        )
        masked = mask_entities(c)
        remapped = candidate(
            list(masked),
            mention(list(masked), 1, 2),
            mention(list(masked), 3, 4),
            bystanders=[mention(list(masked), 5, 6)],
        )
        assert mask_entities(remapped) == masked


class TestFeatures:
    def test_adjacent_mentions_distance_bucket(self, re_vectors):
        tokens = ["A1", "B2", "x"]
        c = candidate(tokens, mention(tokens, 0, 1), mention(tokens, 1, 2))
        config = FeatureConfig(n_buckets=1 << 14, dim=re_vectors.dim)
        sparse_feats, _ = candidate_features(c, re_vectors, config)
        from ppikg.relex import _bucket_index

        assert sparse_feats.get(_bucket_index("dist=1", config.n_buckets), 0) >= 1

    def test_trigger_feature_fires(self, re_vectors):
        tokens = ["A1", "binds", "B2"]
        c = candidate(tokens, mention(tokens, 0, 1), mention(tokens, 2, 3))
        config = FeatureConfig(n_buckets=1 << 14, dim=re_vectors.dim)
        sparse_feats, _ = candidate_features(c, re_vectors, config)
        from ppikg.relex import _bucket_index

        assert sparse_feats.get(_bucket_index("trig=binds", config.n_buckets), 0) >= 1

    def test_empty_between_span_zero_dense_average(self, re_vectors):
        tokens = ["A1", "B2"]
        c = candidate(tokens, mention(tokens, 0, 1), mention(tokens, 1, 2))
        config = FeatureConfig(n_buckets=64, dim=re_vectors.dim)
        _, dense = candidate_features(c, re_vectors, config)
        assert np.array_equal(dense[: config.dim], np.zeros(config.dim))

    def test_invariant_to_doc_id(self, re_vectors, feature_config):
        tokens = ["A1", "binds", "B2"]
        c1 = candidate(tokens, mention(tokens, 0, 1), mention(tokens, 2, 3), doc_id="d1")
        c2 = candidate(tokens, mention(tokens, 0, 1), mention(tokens, 2, 3), doc_id="other")
        f1_, d1 = candidate_features(c1, re_vectors, feature_config)
        f2_, d2 = candidate_features(c2, re_vectors, feature_config)
        assert f1_ == f2_ and np.array_equal(d1, d2)

    def test_masking_invariance_to_entity_renaming(self, re_vectors, feature_config):
        def build(a_name, b_name):
            tokens = ["x", a_name, "binds", b_name, "y"]
            return candidate(tokens, mention(tokens, 1, 2), mention(tokens, 3, 4))

        f1_, d1 = candidate_features(build("AAA1", "BBB2"), re_vectors, feature_config)
        f2_, d2 = candidate_features(build("ZZZ9", "QQQ8"), re_vectors, feature_config)
        assert f1_ == f2_
        assert np.array_equal(d1, d2)

    def test_without_masking_renaming_changes_features(self, re_vectors):
        config = FeatureConfig(masking=False, n_buckets=4096, dim=re_vectors.dim)

        def build(a_name):
            tokens = [a_name, "binds", "B2", a_name]  # name also appears in window
            return candidate(tokens, mention(tokens, 0, 1), mention(tokens, 2, 3))

        f1_, _ = candidate_features(build("AAA1"), re_vectors, config)
        f2_, _ = candidate_features(build("ZZZ9"), re_vectors, config)
        assert f1_ != f2_


class TestTraining:
    def test_separable_data_train_accuracy(self, re_model, re_data):
        probs = predict_batch(re_model, [lc.candidate for lc in re_data])
        labels = np.array([lc.label for lc in re_data])
        accuracy = np.mean((probs >= 0.5) == labels)
        assert accuracy >= 0.99

    def test_single_class_data_rejected(self, re_data, feature_config):
        positives = [lc for lc in re_data if lc.label]
        with pytest.raises(ValueError, match="both"):
            train_re(positives, feature_config)

    def test_gradient_matches_finite_differences(self, re_data, re_vectors, feature_config):
        X = featurize_matrix([lc.candidate for lc in re_data[:40]], re_vectors, feature_config)
        y = np.array([float(lc.label) for lc in re_data[:40]])
        rng = np.random.default_rng(0)
        w = rng.normal(scale=0.1, size=feature_config.n_features)
        b = 0.3
        _, grad_w, grad_b = logistic_loss_grad(w, b, X, y, l2=1e-3)
        step = 1e-5
        coords = rng.choice(np.unique(X.nonzero()[1]), size=20, replace=False)
        for c in coords:
            orig = w[c]
            w[c] = orig + step
            up = logistic_loss_grad(w, b, X, y, 1e-3)[0]
            w[c] = orig - step
            down = logistic_loss_grad(w, b, X, y, 1e-3)[0]
            w[c] = orig
            fd = (up - down) / (2 * step)
            assert abs(fd - grad_w[c]) / max(abs(fd), abs(grad_w[c]), 1e-10) < 1e-5
        up = logistic_loss_grad(w, b + step, X, y, 1e-3)[0]
        down = logistic_loss_grad(w, b - step, X, y, 1e-3)[0]
        fd_b = (up - down) / (2 * step)
        assert abs(fd_b - grad_b) / max(abs(fd_b), abs(grad_b), 1e-10) < 1e-5

    def test_full_batch_loss_decreases(self, re_data, re_vectors, feature_config):
        subset = re_data[:100]
        X = featurize_matrix([lc.candidate for lc in subset], re_vectors, feature_config)
        y = np.array([float(lc.label) for lc in subset])
        w = np.zeros(feature_config.n_features)
        b = 0.0
        losses = []
        for _ in range(10):
            loss, gw, gb = logistic_loss_grad(w, b, X, y, l2=0.0)
            losses.append(loss)
            w -= 1e-3 * gw
            b -= 1e-3 * gb
        assert all(a > b_ for a, b_ in zip(losses, losses[1:]))

    def test_deterministic_under_seed(self, re_data, re_vectors, feature_config):
        m1 = train_re(re_data[:80], feature_config, ReTrainConfig(epochs=5, seed=3), vectors=re_vectors)
        m2 = train_re(re_data[:80], feature_config, ReTrainConfig(epochs=5, seed=3), vectors=re_vectors)
        assert np.array_equal(m1.weights, m2.weights) and m1.bias == m2.bias

    def test_threshold_tuning_prefers_lower_on_ties(self, re_model, re_data):
        threshold = tune_threshold(re_model, re_data[:50])
        probs = predict_batch(re_model, [lc.candidate for lc in re_data[:50]])
        # perfect separation: any threshold in the gap gives F1=100; the
        # lowest candidate value must win
        assert threshold <= sorted(probs)[0] or threshold <= 0.5


class TestPredict:
    def test_zero_weight_model_gives_half(self, feature_config, re_vectors, re_data):
        model = ReModel(
            weights=np.zeros(feature_config.n_features),
            bias=0.0,
            config=feature_config,
            vectors=re_vectors,
        )
        for lc in re_data[:5]:
            assert predict(model, lc.candidate) == 0.5

    def test_monotone_in_firing_weight(self, re_vectors, feature_config, re_data):
        cand = re_data[0].candidate
        model = ReModel(
            weights=np.zeros(feature_config.n_features),
            bias=0.0,
            config=feature_config,
            vectors=re_vectors,
        )
        base = predict(model, cand)
        sparse_feats, _ = candidate_features(cand, re_vectors, feature_config)
        idx = next(iter(sparse_feats))
        model.weights[idx] += 1.0
        assert predict(model, cand) > base

    def test_config_mismatch_rejected(self, re_model, re_data):
        other = FeatureConfig(masking=False, n_buckets=128, dim=0)
        with pytest.raises(ValueError, match="config"):
            predict(re_model, re_data[0].candidate, config=other)

    def test_serialized_model_reproduces_probabilities(self, tmp_path, re_model, re_vectors, re_data):
        path = tmp_path / "model.npz"
        save_re_model(re_model, path)
        loaded = load_re_model(path, vectors=re_vectors)
        cands = [lc.candidate for lc in re_data[:40]]
        assert np.array_equal(predict_batch(re_model, cands), predict_batch(loaded, cands))
        assert loaded.threshold == re_model.threshold


class TestEvalRe:
    def test_perfect_predictions(self, re_model, re_data):
        report = eval_re(re_model, re_data)
        assert (report.precision, report.recall, report.f1) == (100.0, 100.0, 100.0)

    def test_published_harmonic_means(self):
        from ppikg.ner import f1

        assert f1(41.17, 50.00) == pytest.approx(45.16, abs=0.01)
        assert f1(29.87, 70.00) == pytest.approx(41.88, abs=0.01)

    def test_empty_test_set_rejected(self, re_model):
        with pytest.raises(ValueError):
            eval_re(re_model, [])


class TestLabeledCandidateIO:
    def test_round_trip(self, tmp_path, re_data):
        path = tmp_path / "cands.jsonl"
        save_labeled_candidates(re_data[:20], path)
        loaded = load_labeled_candidates(path)
        assert len(loaded) == 20
        for original, again in zip(re_data[:20], loaded):
            assert again.label == original.label
            assert again.candidate.tokens == original.candidate.tokens
            assert again.candidate.mention_a.token_span == original.candidate.mention_a.token_span
            assert again.candidate.mention_b.token_span == original.candidate.mention_b.token_span

    def test_malformed_rows_reported(self, tmp_path):
        from ppikg.ioutils import ParseReport

        path = tmp_path / "bad.jsonl"
        path.write_text(
            '{"tokens": ["A1", "x", "B2"], "a": [0, 1], "b": [2, 3], "label": 1}\n'
            "garbage\n"
            '{"tokens": ["A1"], "a": [0, 1], "b": [5, 6], "label": 0}\n',
            encoding="utf-8",
        )
        report = ParseReport()
        loaded = load_labeled_candidates(path, report=report)
        assert len(loaded) == 1
        assert len(report.errors) == 2

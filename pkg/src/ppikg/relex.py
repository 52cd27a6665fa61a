"""Sentence-level relation extraction over protein mention pairs.

Candidates are unordered mention pairs from one sentence. The classifier is
a binary logistic regression over hashed sparse features (between-token bag,
distance bucket, trigger lexicon, mention windows) concatenated with a dense
block of averaged word vectors. An optional masking transform replaces the
paired mentions with placeholder tokens so the model cannot memorize entity
identities.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .ioutils import ParseReport
from .ner import EntityMention, PrfReport, link_entity
from .vectors import WordVectors

MASK_A = "@PROT-A$"
MASK_B = "@PROT-B$"
MASK_OTHER = "@PROT-O$"

DEFAULT_TRIGGERS = (
    "binds",
    "bind",
    "binding",
    "interacts",
    "interact",
    "interaction",
    "phosphorylates",
    "phosphorylation",
    "activates",
    "activation",
    "inhibits",
    "inhibition",
    "associates",
    "association",
    "complex",
    "regulates",
    "targets",
)

_DISTANCE_BUCKETS = ((1, "1"), (2, "2"), (3, "3"), (6, "4-6"), (10, "7-10"))


@dataclass(frozen=True)
class RelationCandidate:
    """An unordered protein pair in one sentence, ordered by token start."""

    doc_id: str
    sentence_index: int
    tokens: tuple[str, ...]
    mention_a: EntityMention
    mention_b: EntityMention
    bystanders: tuple[EntityMention, ...] = ()

    def __post_init__(self):
        a, b = self.mention_a, self.mention_b
        if not a.start < b.start:
            raise ValueError(f"mention_a must start before mention_b ({a.start} vs {b.start})")
        if a.end > b.start:
            raise ValueError(f"mentions overlap: {a.token_span} and {b.token_span}")


@dataclass(frozen=True)
class LabeledCandidate:
    candidate: RelationCandidate
    label: bool


@dataclass(frozen=True)
class FeatureConfig:
    """Featurizer switches; serialized with the model and checked at predict time."""

    masking: bool = False
    n_buckets: int = 1 << 16
    dim: int = 0  # word-vector dimension behind the dense block
    triggers: tuple[str, ...] = DEFAULT_TRIGGERS
    window: int = 3

    @property
    def n_features(self) -> int:
        return self.n_buckets + 3 * self.dim


def generate_candidates(
    tokens: Sequence,
    mentions: Sequence[EntityMention],
    doc_id: str = "",
    sentence_index: int = 0,
) -> list[RelationCandidate]:
    """All unordered pairs of distinct mentions; same-entity pairs are dropped."""
    texts = tuple(t if isinstance(t, str) else t.text for t in tokens)
    ordered = sorted(mentions, key=lambda m: m.token_span)
    for m in ordered:
        if not (0 <= m.start < m.end <= len(texts)):
            raise ValueError(f"mention span {m.token_span} out of bounds")
    for m1, m2 in zip(ordered, ordered[1:]):
        if m1.end > m2.start:
            raise ValueError(f"mentions overlap: {m1.token_span} and {m2.token_span}")

    out: list[RelationCandidate] = []
    for a, b in combinations(ordered, 2):
        if a.entity_id == b.entity_id:
            continue
        rest = tuple(m for m in ordered if m is not a and m is not b)
        out.append(
            RelationCandidate(
                doc_id=doc_id,
                sentence_index=sentence_index,
                tokens=texts,
                mention_a=a,
                mention_b=b,
                bystanders=rest,
            )
        )
    return out


def _masked_view(candidate: RelationCandidate) -> tuple[tuple[str, ...], tuple[int, int], tuple[int, int]]:
    """Masked token sequence plus the remapped (single-token) pair spans."""
    events = [(candidate.mention_a, MASK_A), (candidate.mention_b, MASK_B)]
    events += [(m, MASK_OTHER) for m in candidate.bystanders]
    events.sort(key=lambda e: e[0].start)

    out: list[str] = []
    a_pos = b_pos = -1
    i = 0
    ev = 0
    while i < len(candidate.tokens):
        if ev < len(events) and events[ev][0].start == i:
            mention, placeholder = events[ev]
            if placeholder == MASK_A:
                a_pos = len(out)
            elif placeholder == MASK_B:
                b_pos = len(out)
            out.append(placeholder)
            i = mention.end
            ev += 1
        else:
            out.append(candidate.tokens[i])
            i += 1
    return tuple(out), (a_pos, a_pos + 1), (b_pos, b_pos + 1)


def mask_entities(candidate: RelationCandidate) -> tuple[str, ...]:
    """Replace the pair with @PROT-A$/@PROT-B$ and bystanders with @PROT-O$."""
    tokens, _, _ = _masked_view(candidate)
    return tokens


def _distance_bucket(gap_plus_one: int) -> str:
    for limit, label in _DISTANCE_BUCKETS:
        if gap_plus_one <= limit:
            return label
    return ">10"


def _bucket_index(feature: str, n_buckets: int) -> int:
    digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % n_buckets


def _avg_vector(tokens: Iterable[str], vectors: WordVectors | None, dim: int) -> np.ndarray:
    if vectors is None or dim == 0:
        return np.zeros(dim)
    vecs = [vectors.get(t) for t in tokens]
    if not vecs:
        return np.zeros(dim)
    return np.mean(vecs, axis=0)


def candidate_features(
    candidate: RelationCandidate,
    vectors: WordVectors | None,
    config: FeatureConfig,
) -> tuple[dict[int, float], np.ndarray]:
    """Hashed sparse counts plus the dense averaged-vector block.

    Dense block layout: [avg(between) | avg(mention_a) | avg(mention_b)],
    each of length ``config.dim``; empty averages are zero vectors.
    """
    if config.masking:
        tokens, a_span, b_span = _masked_view(candidate)
    else:
        tokens = candidate.tokens
        a_span = candidate.mention_a.token_span
        b_span = candidate.mention_b.token_span

    between = tokens[a_span[1] : b_span[0]]
    trigger_set = set(config.triggers)
    w = config.window
    window_a = tokens[max(0, a_span[0] - w) : a_span[0]] + tokens[a_span[1] : a_span[1] + w]
    window_b = tokens[max(0, b_span[0] - w) : b_span[0]] + tokens[b_span[1] : b_span[1] + w]

    raw: dict[str, float] = {}

    def bump(feat: str) -> None:
        raw[feat] = raw.get(feat, 0.0) + 1.0

    for tok in between:
        bump("bw=" + tok.lower())
    bump("dist=" + _distance_bucket(b_span[0] - a_span[1] + 1))
    for tok in between:
        if tok.lower() in trigger_set:
            bump("trig=" + tok.lower())
    for tok in window_a + window_b:
        if tok.lower() in trigger_set:
            bump("trigw=" + tok.lower())
    for tok in window_a:
        bump("wina=" + tok.lower())
    for tok in window_b:
        bump("winb=" + tok.lower())

    sparse_feats: dict[int, float] = {}
    for feat, value in raw.items():
        idx = _bucket_index(feat, config.n_buckets)
        sparse_feats[idx] = sparse_feats.get(idx, 0.0) + value

    dim = config.dim
    dense = np.concatenate(
        [
            _avg_vector(between, vectors, dim),
            _avg_vector(tokens[a_span[0] : a_span[1]], vectors, dim),
            _avg_vector(tokens[b_span[0] : b_span[1]], vectors, dim),
        ]
    )
    return sparse_feats, dense


def featurize_matrix(
    candidates: Sequence[RelationCandidate],
    vectors: WordVectors | None,
    config: FeatureConfig,
) -> sparse.csr_matrix:
    """CSR design matrix: hashed buckets in [0, n_buckets), dense block after."""
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for i, cand in enumerate(candidates):
        sparse_feats, dense = candidate_features(cand, vectors, config)
        for idx, value in sorted(sparse_feats.items()):
            rows.append(i)
            cols.append(idx)
            vals.append(value)
        for j, value in enumerate(dense):
            if value != 0.0:
                rows.append(i)
                cols.append(config.n_buckets + j)
                vals.append(float(value))
    return sparse.csr_matrix(
        (vals, (rows, cols)), shape=(len(candidates), config.n_features)
    )


@dataclass
class ReModel:
    """Logistic regression weights over the fixed hashed + dense feature space."""

    weights: np.ndarray
    bias: float
    config: FeatureConfig
    threshold: float = 0.5
    vectors: WordVectors | None = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class ReTrainConfig:
    l2: float = 1e-4
    epochs: int = 50
    lr: float = 0.5
    seed: int = 0
    batch_size: int = 32


def sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


def logistic_loss_grad(
    weights: np.ndarray,
    bias: float,
    X: sparse.csr_matrix,
    y: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, float]:
    """Mean logistic loss with L2 penalty and its exact gradient.

    loss = mean(softplus(z) - y*z) + 0.5*l2*||w||^2 with z = Xw + b.
    """
    z = X @ weights + bias
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * np.dot(weights, weights))
    residual = (sigmoid(z) - y) / len(y)
    grad_w = X.T @ residual + l2 * weights
    grad_b = float(np.sum(residual))
    return loss, np.asarray(grad_w).ravel(), grad_b


def train_re(
    data: Sequence[LabeledCandidate],
    config: FeatureConfig,
    hyper: ReTrainConfig = ReTrainConfig(),
    vectors: WordVectors | None = None,
    valid: Sequence[LabeledCandidate] | None = None,
) -> ReModel:
    """Mini-batch gradient descent on the logistic loss, deterministic under seed.

    When ``valid`` is given, the decision threshold is tuned on it to maximize
    F1 (ties resolved toward the lower threshold, i.e. higher recall).
    """
    labels = {lc.label for lc in data}
    if labels != {True, False}:
        raise ValueError("training data must contain both positive and negative labels")
    if vectors is not None and config.dim not in (0, vectors.dim):
        raise ValueError(f"config.dim={config.dim} does not match vectors.dim={vectors.dim}")

    X = featurize_matrix([lc.candidate for lc in data], vectors, config)
    y = np.array([float(lc.label) for lc in data])

    rng = np.random.default_rng(hyper.seed)
    w = np.zeros(config.n_features)
    b = 0.0
    n = len(data)
    for _ in range(hyper.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hyper.batch_size):
            batch = order[start : start + hyper.batch_size]
            _, gw, gb = logistic_loss_grad(w, b, X[batch], y[batch], hyper.l2)
            w -= hyper.lr * gw
            b -= hyper.lr * gb

    model = ReModel(weights=w, bias=b, config=config, vectors=vectors)
    if valid:
        model.threshold = tune_threshold(model, valid)
    return model


def predict(model: ReModel, candidate: RelationCandidate, config: FeatureConfig | None = None) -> float:
    """Interaction probability for one candidate under the model's featurizer."""
    if config is not None and config != model.config:
        raise ValueError("feature config does not match the model's config")
    sparse_feats, dense = candidate_features(candidate, model.vectors, model.config)
    z = model.bias
    for idx, value in sparse_feats.items():
        z += model.weights[idx] * value
    offset = model.config.n_buckets
    if len(dense):
        z += float(np.dot(model.weights[offset : offset + len(dense)], dense))
    return float(sigmoid(z))


def predict_batch(model: ReModel, candidates: Sequence[RelationCandidate]) -> np.ndarray:
    X = featurize_matrix(candidates, model.vectors, model.config)
    return np.asarray(sigmoid(X @ model.weights + model.bias)).ravel()


def tune_threshold(model: ReModel, valid: Sequence[LabeledCandidate]) -> float:
    """Threshold maximizing F1 on a validation set; ties go to the lowest value."""
    probs = predict_batch(model, [lc.candidate for lc in valid])
    gold = np.array([lc.label for lc in valid])
    best_t, best_f1 = 0.5, -1.0
    for t in sorted(set(probs.tolist()) | {0.5}):
        pred = probs >= t
        tp = int(np.sum(pred & gold))
        fp = int(np.sum(pred & ~gold))
        fn = int(np.sum(~pred & gold))
        report = PrfReport.from_counts(tp, fp, fn)
        if report.f1 > best_f1:
            best_t, best_f1 = t, report.f1
    return best_t


def eval_re(model: ReModel, test: Sequence[LabeledCandidate]) -> PrfReport:
    """Binary P/R/F1 at the model threshold; positive class = interaction."""
    if not test:
        raise ValueError("test set is empty")
    probs = predict_batch(model, [lc.candidate for lc in test])
    tp = fp = fn = 0
    for prob, lc in zip(probs, test):
        predicted = prob >= model.threshold
        if predicted and lc.label:
            tp += 1
        elif predicted and not lc.label:
            fp += 1
        elif not predicted and lc.label:
            fn += 1
    return PrfReport.from_counts(tp, fp, fn)


def save_re_model(model: ReModel, path: str | Path) -> None:
    config_json = json.dumps(
        {
            "masking": model.config.masking,
            "n_buckets": model.config.n_buckets,
            "dim": model.config.dim,
            "triggers": list(model.config.triggers),
            "window": model.config.window,
        },
        sort_keys=True,
    )
    np.savez(
        path,
        weights=model.weights,
        bias=np.float64(model.bias),
        threshold=np.float64(model.threshold),
        config=np.bytes_(config_json.encode("utf-8")),
    )


def load_re_model(path: str | Path, vectors: WordVectors | None = None) -> ReModel:
    with np.load(path) as data:
        cfg = json.loads(bytes(data["config"]).decode("utf-8"))
        config = FeatureConfig(
            masking=bool(cfg["masking"]),
            n_buckets=int(cfg["n_buckets"]),
            dim=int(cfg["dim"]),
            triggers=tuple(cfg["triggers"]),
            window=int(cfg["window"]),
        )
        if config.dim and vectors is not None and vectors.dim != config.dim:
            raise ValueError(f"{path}: model expects {config.dim}-dim vectors, got {vectors.dim}")
        return ReModel(
            weights=data["weights"].copy(),
            bias=float(data["bias"]),
            threshold=float(data["threshold"]),
            config=config,
            vectors=vectors,
        )


def _mention_from_span(tokens: Sequence[str], span: tuple[int, int], doc_id: str) -> EntityMention:
    surface = " ".join(tokens[span[0] : span[1]])
    return EntityMention(
        token_span=(span[0], span[1]),
        surface=surface,
        entity_id=link_entity(surface),
        doc_id=doc_id,
    )


def load_labeled_candidates(
    path: str | Path, report: ParseReport | None = None
) -> list[LabeledCandidate]:
    """JSONL rows {"doc_id", "tokens", "a": [s,e], "b": [s,e], "label": 0|1}."""
    if report is None:
        report = ParseReport(source=str(path))
    out: list[LabeledCandidate] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                tokens = tuple(str(t) for t in obj["tokens"])
                a = (int(obj["a"][0]), int(obj["a"][1]))
                b = (int(obj["b"][0]), int(obj["b"][1]))
                label = bool(obj["label"])
                doc_id = str(obj.get("doc_id", ""))
                for span in (a, b):
                    if not 0 <= span[0] < span[1] <= len(tokens):
                        raise ValueError(f"span {span} out of bounds for {len(tokens)} tokens")
                if a > b:
                    a, b = b, a
                cand = RelationCandidate(
                    doc_id=doc_id,
                    sentence_index=int(obj.get("sentence_index", 0)),
                    tokens=tokens,
                    mention_a=_mention_from_span(tokens, a, doc_id),
                    mention_b=_mention_from_span(tokens, b, doc_id),
                )
            except (json.JSONDecodeError, KeyError, IndexError, TypeError, ValueError) as exc:
                report.add_error(line_no, str(exc))
                continue
            out.append(LabeledCandidate(candidate=cand, label=label))
            report.n_ok += 1
    return out


def save_labeled_candidates(data: Iterable[LabeledCandidate], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for lc in data:
            c = lc.candidate
            fh.write(
                json.dumps(
                    {
                        "doc_id": c.doc_id,
                        "sentence_index": c.sentence_index,
                        "tokens": list(c.tokens),
                        "a": list(c.mention_a.token_span),
                        "b": list(c.mention_b.token_span),
                        "label": int(lc.label),
                    }
                )
            )
            fh.write("\n")

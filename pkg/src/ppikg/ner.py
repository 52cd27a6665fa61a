"""Protein span tagging: BIO encoding, averaged-perceptron tagger, span PRF.

The tagger is a greedy left-to-right structured perceptron with averaged
weights. Features are binary string templates (lexical, shape, affix,
context) plus per-dimension sign buckets of pretrained word vectors.
Training is sequential and fully deterministic under a seed; two runs with
identical inputs serialize to byte-identical model files.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Sequence

from .vectors import WordVectors

MODEL_FORMAT = "ppikg-ner/1"

START1 = "-S1-"
START2 = "-S2-"
END_MARK = "</s>"
START_MARK = "<s>"

FEATURE_TEMPLATES = (
    "bias",
    "word",
    "shape",
    "prefix",
    "suffix",
    "has-digit",
    "has-hyphen",
    "all-caps",
    "prev-word",
    "next-word",
    "prev-tag",
    "prev-two-tags",
    "vector-sign",
)


class BioTag(IntEnum):
    # Order matters: ties in greedy decoding resolve to the lowest value.
    B = 0
    I = 1  # noqa: E741
    O = 2  # noqa: E741


TAG_NAMES = ("B", "I", "O")


@dataclass(frozen=True)
class EntityMention:
    """A tagged protein span inside one sentence."""

    token_span: tuple[int, int]  # [start, end) in token indices
    surface: str  # space-joined tokens of the span
    entity_id: str  # canonical id (uppercased surface unless aliased)
    doc_id: str = ""
    sentence_index: int = 0

    @property
    def start(self) -> int:
        return self.token_span[0]

    @property
    def end(self) -> int:
        return self.token_span[1]


@dataclass(frozen=True)
class AnnotatedSentence:
    tokens: tuple[str, ...]
    spans: tuple[tuple[int, int], ...]  # gold protein spans, token offsets


@dataclass
class PrfReport:
    """Span-level precision/recall/F1 as percentages, with raw counts."""

    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "PrfReport":
        p = 100.0 * tp / (tp + fp) if tp + fp > 0 else 0.0
        r = 100.0 * tp / (tp + fn) if tp + fn > 0 else 0.0
        return cls(precision=p, recall=r, f1=f1(p, r), tp=tp, fp=fp, fn=fn)

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }


def f1(p: float, r: float) -> float:
    """Harmonic mean of two percentages; 0 when both are 0."""
    if p + r == 0:
        return 0.0
    return 2.0 * p * r / (p + r)


def _text(token) -> str:
    return token if isinstance(token, str) else token.text


def word_shape(word: str) -> str:
    """Character-class shape with runs collapsed to length 2: 'ARF6' -> 'XXd'."""
    mapped = []
    for ch in word:
        if ch.isupper():
            mapped.append("X")
        elif ch.islower():
            mapped.append("x")
        elif ch.isdigit():
            mapped.append("d")
        else:
            mapped.append(ch)
    out: list[str] = []
    for ch in mapped:
        if len(out) >= 2 and out[-1] == ch and out[-2] == ch:
            continue
        out.append(ch)
    return "".join(out)


def token_features(
    tokens: Sequence,
    i: int,
    prev_tags: tuple[str, str],
    vectors: WordVectors | None = None,
) -> set[str]:
    """Binary feature set for position ``i`` given the last two predicted tags.

    OOV tokens contribute no vector-sign features (their vector is zero).
    """
    w = _text(tokens[i])
    lw = w.lower()
    prev_w = _text(tokens[i - 1]).lower() if i > 0 else START_MARK
    next_w = _text(tokens[i + 1]).lower() if i + 1 < len(tokens) else END_MARK
    t2, t1 = prev_tags

    feats = {
        "bias",
        "w=" + lw,
        "shape=" + word_shape(w),
        "w-1=" + prev_w,
        "w+1=" + next_w,
        "t-1=" + t1,
        "t-2,-1=" + t2 + "," + t1,
    }
    for n in (1, 2, 3):
        if len(lw) >= n:
            feats.add(f"pre{n}=" + lw[:n])
            feats.add(f"suf{n}=" + lw[-n:])
    if any(c.isdigit() for c in w):
        feats.add("has-digit")
    if "-" in w:
        feats.add("has-hyphen")
    if w.isalpha() and w.isupper():
        feats.add("all-caps")
    if vectors is not None:
        vec = vectors.get(w)
        for j, v in enumerate(vec):
            if v > 0:
                feats.add(f"wv{j}=+")
            elif v < 0:
                feats.add(f"wv{j}=-")
    return feats


def spans_to_bio(n_tokens: int, spans: Iterable[tuple[int, int]]) -> list[BioTag]:
    """Encode token spans as a BIO sequence; overlapping spans are an error."""
    ordered = sorted(tuple(s) for s in spans)
    tags = [BioTag.O] * n_tokens
    prev_end = -1
    prev_span: tuple[int, int] | None = None
    for start, end in ordered:
        if not (0 <= start < end <= n_tokens):
            raise ValueError(f"span {(start, end)} out of bounds for {n_tokens} tokens")
        if start < prev_end:
            raise ValueError(f"overlapping spans {prev_span} and {(start, end)}")
        tags[start] = BioTag.B
        for i in range(start + 1, end):
            tags[i] = BioTag.I
        prev_end = end
        prev_span = (start, end)
    return tags


def bio_to_spans(tags: Sequence[BioTag]) -> list[tuple[int, int]]:
    """Decode a valid BIO sequence back into [start, end) spans."""
    spans: list[tuple[int, int]] = []
    start: int | None = None
    for i, tag in enumerate(tags):
        if tag == BioTag.B:
            if start is not None:
                spans.append((start, i))
            start = i
        elif tag == BioTag.I:
            if start is None:
                raise ValueError(f"I tag at position {i} does not follow B or I")
        else:
            if start is not None:
                spans.append((start, i))
                start = None
    if start is not None:
        spans.append((start, len(tags)))
    return spans


@dataclass
class NerModel:
    """Averaged feature weights plus everything needed to reproduce them."""

    weights: dict[str, list[float]]  # feature -> [wB, wI, wO]
    templates: tuple[str, ...] = FEATURE_TEMPLATES
    epochs: int = 0
    seed: int = 0
    vector_dim: int = 0
    vectors: WordVectors | None = field(default=None, repr=False, compare=False)

    def scores(self, feats: Iterable[str]) -> list[float]:
        totals = [0.0, 0.0, 0.0]
        for f in feats:
            w = self.weights.get(f)
            if w is not None:
                totals[0] += w[0]
                totals[1] += w[1]
                totals[2] += w[2]
        return totals


def _argmax_tag(scores: Sequence[float]) -> BioTag:
    best = 0
    for t in (1, 2):
        if scores[t] > scores[best]:
            best = t
    return BioTag(best)


def _repair(tag: BioTag, prev_name: str) -> BioTag:
    if tag == BioTag.I and prev_name not in ("B", "I"):
        return BioTag.B
    return tag


def repair_bio(tags: Sequence[BioTag]) -> list[BioTag]:
    """Rewrite any I that does not follow B/I to B, yielding a valid sequence."""
    out: list[BioTag] = []
    prev = "-"
    for tag in tags:
        fixed = _repair(tag, prev)
        out.append(fixed)
        prev = TAG_NAMES[fixed]
    return out


def train_ner(
    train: Sequence[AnnotatedSentence],
    epochs: int,
    seed: int,
    vectors: WordVectors | None = None,
) -> NerModel:
    """Averaged-perceptron training with per-epoch shuffling keyed to the seed.

    Decoding during training mirrors inference: greedy, with the predicted
    (repaired) tags feeding the history features.
    """
    if not train:
        raise ValueError("training set is empty")
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")

    weights: dict[str, list[float]] = {}
    totals: dict[tuple[str, int], float] = {}
    tstamps: dict[tuple[str, int], int] = {}
    step = 0

    def update(feat: str, tag: int, delta: float) -> None:
        key = (feat, tag)
        w = weights.setdefault(feat, [0.0, 0.0, 0.0])
        totals[key] = totals.get(key, 0.0) + w[tag] * (step - tstamps.get(key, 0))
        tstamps[key] = step
        w[tag] += delta

    rng = random.Random(seed)
    order = list(train)
    scratch = NerModel(weights=weights, vectors=vectors)
    for _ in range(epochs):
        rng.shuffle(order)
        for sent in order:
            gold = spans_to_bio(len(sent.tokens), sent.spans)
            prev2, prev1 = START2, START1
            for i in range(len(sent.tokens)):
                step += 1
                feats = token_features(sent.tokens, i, (prev2, prev1), vectors)
                guess = _argmax_tag(scratch.scores(feats))
                truth = gold[i]
                if guess != truth:
                    for f in feats:
                        update(f, truth, 1.0)
                        update(f, guess, -1.0)
                fixed = _repair(guess, prev1)
                prev2, prev1 = prev1, TAG_NAMES[fixed]

    averaged: dict[str, list[float]] = {}
    for feat, w in weights.items():
        row = [0.0, 0.0, 0.0]
        keep = False
        for tag in range(3):
            total = totals.get((feat, tag), 0.0)
            total += w[tag] * (step - tstamps.get((feat, tag), 0))
            value = total / step
            row[tag] = value
            keep = keep or value != 0.0
        if keep:
            averaged[feat] = row
    return NerModel(
        weights=averaged,
        templates=FEATURE_TEMPLATES,
        epochs=epochs,
        seed=seed,
        vector_dim=vectors.dim if vectors is not None else 0,
        vectors=vectors,
    )


def decode(model: NerModel, tokens: Sequence) -> list[BioTag]:
    """Greedy left-to-right decoding; output is always a valid BIO sequence."""
    tags: list[BioTag] = []
    prev2, prev1 = START2, START1
    for i in range(len(tokens)):
        feats = token_features(tokens, i, (prev2, prev1), model.vectors)
        fixed = _repair(_argmax_tag(model.scores(feats)), prev1)
        tags.append(fixed)
        prev2, prev1 = prev1, TAG_NAMES[fixed]
    return tags


def link_entity(surface: str, alias_map: dict[str, str] | None = None) -> str:
    """Canonical id for a surface form: alias lookup, else uppercased surface."""
    if alias_map:
        hit = alias_map.get(surface)
        if hit is None:
            hit = alias_map.get(surface.upper())
        if hit is not None:
            return hit
    return surface.upper()


def tag(
    model: NerModel,
    tokens: Sequence,
    alias_map: dict[str, str] | None = None,
    doc_id: str = "",
    sentence_index: int = 0,
) -> list[EntityMention]:
    """Tag one tokenized sentence and return its protein mentions in order."""
    if not tokens:
        return []
    texts = [_text(t) for t in tokens]
    spans = bio_to_spans(decode(model, texts))
    mentions = []
    for start, end in spans:
        surface = " ".join(texts[start:end])
        mentions.append(
            EntityMention(
                token_span=(start, end),
                surface=surface,
                entity_id=link_entity(surface, alias_map),
                doc_id=doc_id,
                sentence_index=sentence_index,
            )
        )
    return mentions


def eval_ner(model: NerModel, test: Sequence[AnnotatedSentence]) -> PrfReport:
    """Exact-span match evaluation over all sentences."""
    if not test:
        raise ValueError("test set is empty")
    tp = fp = fn = 0
    for sent in test:
        predicted = {m.token_span for m in tag(model, sent.tokens)}
        gold = {tuple(s) for s in sent.spans}
        tp += len(predicted & gold)
        fp += len(predicted - gold)
        fn += len(gold - predicted)
    return PrfReport.from_counts(tp, fp, fn)


def save_ner_model(model: NerModel, path: str | Path) -> None:
    """Serialize to canonical JSON; identical training runs give identical bytes."""
    payload = {
        "format": MODEL_FORMAT,
        "templates": list(model.templates),
        "epochs": model.epochs,
        "seed": model.seed,
        "vector_dim": model.vector_dim,
        "weights": model.weights,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_ner_model(path: str | Path, vectors: WordVectors | None = None) -> NerModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: unsupported model format {payload.get('format')!r}")
    vector_dim = payload["vector_dim"]
    if vector_dim and vectors is not None and vectors.dim != vector_dim:
        raise ValueError(
            f"{path}: model expects {vector_dim}-dim vectors, got {vectors.dim}-dim"
        )
    return NerModel(
        weights={f: list(w) for f, w in payload["weights"].items()},
        templates=tuple(payload["templates"]),
        epochs=payload["epochs"],
        seed=payload["seed"],
        vector_dim=vector_dim,
        vectors=vectors,
    )


def load_annotations(path: str | Path) -> list[AnnotatedSentence]:
    """JSONL annotations: {"tokens": [...], "spans": [[s, e], ...]} per line."""
    out: list[AnnotatedSentence] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                tokens = tuple(str(t) for t in obj["tokens"])
                spans = tuple((int(s), int(e)) for s, e in obj.get("spans", []))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: line {line_no}: {exc}") from None
            out.append(AnnotatedSentence(tokens=tokens, spans=spans))
    return out


def save_annotations(sentences: Iterable[AnnotatedSentence], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sent in sentences:
            fh.write(
                json.dumps(
                    {"tokens": list(sent.tokens), "spans": [list(s) for s in sent.spans]}
                )
            )
            fh.write("\n")

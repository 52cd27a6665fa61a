"""Rotation-based knowledge-graph embeddings (RotatE) with self-adversarial
negative sampling.

Entities are complex vectors (stored as separate real/imaginary arrays);
relations are phase vectors, so every relation embedding element has modulus
exactly 1 by construction. The triple distance is the summed element-wise
modulus |h * e^{i*phase} - t|. Training is plain mini-batch SGD for
determinism and auditability; negative triples are weighted by a softmax of
their current scores (temperature alpha, detached from the gradient).
"""

from __future__ import annotations

import json
import random
import struct
import time
import logging
from dataclasses import dataclass, asdict, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .kg import PPI, KnowledgeGraph, Triple, make_triple

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"PPKG"
CHECKPOINT_VERSION = 1

# Per-component init bound is gamma / (INIT_SCALE * dim).
INIT_SCALE = 1.0

_MAX_SAMPLE_RETRIES = 100


@dataclass
class TrainConfig:
    dim: int = 64
    gamma: float = 12.0
    learning_rate: float = 0.05
    batch_size: int = 128
    negatives: int = 16
    adversarial_temperature: float = 1.0  # 0 = uniform negative weighting
    epochs: int = 100
    seed: int = 0

    def validate(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.negatives < 1:
            raise ValueError(f"negatives must be >= 1, got {self.negatives}")
        if self.adversarial_temperature < 0:
            raise ValueError("adversarial_temperature must be >= 0")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        return cls(**data)


def wrap_phase(theta: np.ndarray) -> np.ndarray:
    """Map angles into the canonical range (-pi, pi]."""
    wrapped = np.mod(theta, 2.0 * np.pi)  # [0, 2*pi)
    return np.where(wrapped > np.pi, wrapped - 2.0 * np.pi, wrapped)


@dataclass
class EmbeddingModel:
    entity_re: np.ndarray  # (n_entities, dim)
    entity_im: np.ndarray  # (n_entities, dim)
    relation_phase: np.ndarray  # (n_relations, dim), each element in (-pi, pi]
    gamma: float
    entities: tuple[str, ...]
    relations: tuple[str, ...]
    ent2id: dict[str, int] = field(repr=False, default_factory=dict)
    rel2id: dict[str, int] = field(repr=False, default_factory=dict)
    loss_history: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self.ent2id:
            self.ent2id = {e: i for i, e in enumerate(self.entities)}
        if not self.rel2id:
            self.rel2id = {r: i for i, r in enumerate(self.relations)}

    @property
    def dim(self) -> int:
        return self.entity_re.shape[1]

    @property
    def n_entities(self) -> int:
        return self.entity_re.shape[0]

    @property
    def n_relations(self) -> int:
        return self.relation_phase.shape[0]

    def entity_index(self, name: str) -> int:
        try:
            return self.ent2id[name]
        except KeyError:
            raise ValueError(f"unknown entity {name!r}") from None

    def relation_index(self, name: str) -> int:
        try:
            return self.rel2id[name]
        except KeyError:
            raise ValueError(f"unknown relation {name!r}") from None

    def copy(self) -> "EmbeddingModel":
        return EmbeddingModel(
            entity_re=self.entity_re.copy(),
            entity_im=self.entity_im.copy(),
            relation_phase=self.relation_phase.copy(),
            gamma=self.gamma,
            entities=self.entities,
            relations=self.relations,
            loss_history=list(self.loss_history),
        )


def init_model(
    entities: Sequence[str] | int,
    relations: Sequence[str] | int,
    config: TrainConfig,
) -> EmbeddingModel:
    """Deterministic uniform init: entity components in +-gamma/(INIT_SCALE*dim),
    relation phases uniform over (-pi, pi]."""
    if isinstance(entities, int):
        entities = [f"e{i}" for i in range(entities)]
    if isinstance(relations, int):
        relations = [f"r{i}" for i in range(relations)]
    if len(entities) < 1 or len(relations) < 1:
        raise ValueError("need at least one entity and one relation")
    config.validate()
    rng = np.random.default_rng(config.seed)
    bound = config.gamma / (INIT_SCALE * config.dim)
    n_e, n_r, d = len(entities), len(relations), config.dim
    return EmbeddingModel(
        entity_re=rng.uniform(-bound, bound, (n_e, d)),
        entity_im=rng.uniform(-bound, bound, (n_e, d)),
        relation_phase=wrap_phase(rng.uniform(0.0, 2.0 * np.pi, (n_r, d))),
        gamma=config.gamma,
        entities=tuple(entities),
        relations=tuple(relations),
    )


def _distance_ids(
    model: EmbeddingModel,
    h: np.ndarray,
    r: np.ndarray,
    t: np.ndarray,
) -> np.ndarray:
    """Summed element-wise modulus |h * e^{i*phase} - t| for id arrays."""
    h_re = model.entity_re[h]
    h_im = model.entity_im[h]
    phase = model.relation_phase[r]
    cos_p, sin_p = np.cos(phase), np.sin(phase)
    rot_re = h_re * cos_p - h_im * sin_p
    rot_im = h_re * sin_p + h_im * cos_p
    diff_re = rot_re - model.entity_re[t]
    diff_im = rot_im - model.entity_im[t]
    return np.sqrt(diff_re * diff_re + diff_im * diff_im).sum(axis=-1)


def distance(model: EmbeddingModel, head: str, relation: str, tail: str) -> float:
    h = np.array(model.entity_index(head))
    r = np.array(model.relation_index(relation))
    t = np.array(model.entity_index(tail))
    return float(_distance_ids(model, h, r, t))


def score(model: EmbeddingModel, head: str, relation: str, tail: str) -> float:
    """gamma - distance; higher means more plausible."""
    return model.gamma - distance(model, head, relation, tail)


def score_ids(model: EmbeddingModel, h: np.ndarray, r: np.ndarray, t: np.ndarray) -> np.ndarray:
    return model.gamma - _distance_ids(model, h, r, t)


def adversarial_weights(neg_scores: Sequence[float] | np.ndarray, alpha: float) -> np.ndarray:
    """softmax(alpha * scores): positive, sums to 1; alpha=0 gives uniform."""
    scores = np.asarray(neg_scores, dtype=float)
    if scores.size == 0:
        raise ValueError("neg_scores must be non-empty")
    z = alpha * scores
    z = z - z.max(axis=-1, keepdims=True)
    w = np.exp(z)
    return w / w.sum(axis=-1, keepdims=True)


class PoolExhaustedError(ValueError):
    """No valid corruption exists for a triple under the given pool/filter."""


def _corrupt_ids(
    rng: random.Random,
    h: int,
    r: int,
    t: int,
    k: int,
    pool: Sequence[int],
    mode: str,
    is_true: Callable[[int, int, int], bool],
) -> list[tuple[int, int, int]]:
    """k corruptions of (h, r, t): uniform redraw while the corruption is a
    self-loop or a known-true triple; bounded retries, then an exhaustive
    uniform draw over the remaining valid corruptions (error if none exist)."""
    if mode not in ("head", "tail", "both"):
        raise ValueError(f"unknown corruption mode {mode!r}")
    out: list[tuple[int, int, int]] = []
    for _ in range(k):
        side = mode if mode != "both" else ("head" if rng.randrange(2) == 0 else "tail")
        found = None
        for _ in range(_MAX_SAMPLE_RETRIES):
            e = pool[rng.randrange(len(pool))]
            cand = (e, r, t) if side == "head" else (h, r, e)
            if cand[0] == cand[2] or is_true(*cand):
                continue
            found = cand
            break
        if found is None:
            sides = ("head", "tail") if mode == "both" else (mode,)
            valid = [
                cand
                for s in sides
                for e in pool
                for cand in [(e, r, t) if s == "head" else (h, r, e)]
                if cand[0] != cand[2] and not is_true(*cand)
            ]
            if not valid:
                raise PoolExhaustedError(
                    f"no valid corruption for triple ids ({h}, {r}, {t}) in mode {mode!r}"
                )
            found = valid[rng.randrange(len(valid))]
        out.append(found)
    return out


def negative_sample(
    triple: Triple,
    k: int,
    mode: str,
    entity_pool: Sequence[str],
    forbidden: set[Triple],
    rng: random.Random,
    model: EmbeddingModel | None = None,
) -> list[Triple]:
    """k corrupted triples with true-triple filtering against ``forbidden``.

    Entity ids are resolved through ``model`` when given, else a local index
    over the pool plus the triple's own entities is used.
    """
    if model is not None:
        names = list(model.entities)
        name2id = model.ent2id
    else:
        names = sorted(set(entity_pool) | {triple.head, triple.tail})
        name2id = {n: i for i, n in enumerate(names)}
    pool_ids = [name2id[e] for e in entity_pool]
    if not pool_ids:
        raise ValueError("entity pool is empty")

    rel = triple.relation

    def is_true(hi: int, ri: int, ti: int) -> bool:
        if hi == ti:
            return True
        return make_triple(names[hi], rel, names[ti]) in forbidden

    raw = _corrupt_ids(
        rng,
        name2id[triple.head],
        0,
        name2id[triple.tail],
        k,
        pool_ids,
        mode,
        is_true,
    )
    return [make_triple(names[h], rel, names[t]) for h, r, t in raw]


def _batch_loss_grad(
    model: EmbeddingModel,
    pos: np.ndarray,  # (B, 3) int ids
    neg: np.ndarray,  # (B, K, 3) int ids
    alpha: float,
    weights: np.ndarray | None = None,
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Mean self-adversarial loss over a batch plus full-shape gradients.

    loss_b = -log sigmoid(gamma - d_pos) - sum_k w_k log sigmoid(d_neg_k - gamma)
    with w = softmax(alpha * (gamma - d_neg)) treated as constants. Returns
    (loss, grad_entity_re, grad_entity_im, grad_relation_phase); gradient
    arrays are model-shaped with nonzeros only at touched rows.
    """
    B = pos.shape[0]
    gamma = model.gamma
    d_pos = _distance_ids(model, pos[:, 0], pos[:, 1], pos[:, 2])  # (B,)
    d_neg = _distance_ids(model, neg[..., 0], neg[..., 1], neg[..., 2])  # (B, K)

    if weights is None:
        weights = adversarial_weights(gamma - d_neg, alpha)  # (B, K)

    # sigmoid in a numerically safe form; log sigmoid(x) = -softplus(-x)
    pos_margin = gamma - d_pos
    neg_margin = d_neg - gamma
    loss_terms = np.logaddexp(0.0, -pos_margin) + (
        weights * np.logaddexp(0.0, -neg_margin)
    ).sum(axis=-1)
    loss = float(loss_terms.mean())

    # d loss / d distance, already including the 1/B of the batch mean
    coef_pos = (1.0 - _sigmoid(pos_margin)) / B  # (B,)
    coef_neg = -weights * (1.0 - _sigmoid(neg_margin)) / B  # (B, K)

    g_re = np.zeros_like(model.entity_re)
    g_im = np.zeros_like(model.entity_im)
    g_ph = np.zeros_like(model.relation_phase)

    all_h = np.concatenate([pos[:, 0], neg[..., 0].ravel()])
    all_r = np.concatenate([pos[:, 1], neg[..., 1].ravel()])
    all_t = np.concatenate([pos[:, 2], neg[..., 2].ravel()])
    all_coef = np.concatenate([coef_pos, coef_neg.ravel()])
    _accumulate_distance_grads(model, all_h, all_r, all_t, all_coef, g_re, g_im, g_ph)
    return loss, g_re, g_im, g_ph


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500, 500)))


def _accumulate_distance_grads(
    model: EmbeddingModel,
    h: np.ndarray,
    r: np.ndarray,
    t: np.ndarray,
    coef: np.ndarray,
    g_re: np.ndarray,
    g_im: np.ndarray,
    g_ph: np.ndarray,
) -> None:
    """Add coef * d(distance)/d(param) into the gradient accumulators.

    With a = Re(h e^{i p}), b = Im(h e^{i p}), u = (a - t_re, b - t_im)/m and
    m the element modulus: dd/dt = -u, dd/dh = R(-p) u, dd/dp = a*u_im - b*u_re.
    Elements with m = 0 contribute zero (subgradient at the kink).
    """
    h_re = model.entity_re[h]
    h_im = model.entity_im[h]
    phase = model.relation_phase[r]
    cos_p, sin_p = np.cos(phase), np.sin(phase)
    a = h_re * cos_p - h_im * sin_p
    b = h_re * sin_p + h_im * cos_p
    diff_re = a - model.entity_re[t]
    diff_im = b - model.entity_im[t]
    m = np.sqrt(diff_re * diff_re + diff_im * diff_im)
    inv = np.divide(1.0, m, out=np.zeros_like(m), where=m > 0)
    u_re = diff_re * inv
    u_im = diff_im * inv

    c = coef[:, None]
    np.add.at(g_re, h, (u_re * cos_p + u_im * sin_p) * c)
    np.add.at(g_im, h, (-u_re * sin_p + u_im * cos_p) * c)
    np.add.at(g_re, t, -u_re * c)
    np.add.at(g_im, t, -u_im * c)
    np.add.at(g_ph, r, (a * u_im - b * u_re) * c)


@dataclass
class BatchGrads:
    """Gradients restricted to the embeddings a batch actually touched."""

    entity_re: dict[int, np.ndarray]
    entity_im: dict[int, np.ndarray]
    relation_phase: dict[int, np.ndarray]


def loss_and_grad(
    model: EmbeddingModel,
    positive: Triple,
    negatives: Sequence[Triple],
    config: TrainConfig,
    weights: np.ndarray | None = None,
) -> tuple[float, BatchGrads]:
    """Loss and touched-embedding gradients for one positive and its negatives.

    Pass ``weights`` to hold the (detached) negative weights fixed, e.g. when
    comparing against finite differences of the loss.
    """
    if not negatives:
        raise ValueError("negatives must be non-empty")
    pos = np.array(
        [[model.entity_index(positive.head), model.relation_index(positive.relation), model.entity_index(positive.tail)]]
    )
    neg = np.array(
        [
            [
                [model.entity_index(n.head), model.relation_index(n.relation), model.entity_index(n.tail)]
                for n in negatives
            ]
        ]
    )
    loss, g_re, g_im, g_ph = _batch_loss_grad(
        model, pos, neg, config.adversarial_temperature, weights=weights
    )
    touched_entities = sorted(set(pos[:, 0]) | set(pos[:, 2]) | set(neg[..., 0].ravel()) | set(neg[..., 2].ravel()))
    touched_relations = sorted(set(pos[:, 1]) | set(neg[..., 1].ravel()))
    return loss, BatchGrads(
        entity_re={int(i): g_re[i].copy() for i in touched_entities},
        entity_im={int(i): g_im[i].copy() for i in touched_entities},
        relation_phase={int(i): g_ph[i].copy() for i in touched_relations},
    )


def train(
    graph: KnowledgeGraph,
    config: TrainConfig,
    entities: Sequence[str] | None = None,
    relations: Sequence[str] | None = None,
) -> EmbeddingModel:
    """Mini-batch SGD over shuffled triples with filtered uniform corruption.

    Relation phases are re-wrapped into (-pi, pi] after every update. The
    per-epoch mean loss is logged and kept on the model's loss_history.
    """
    if len(graph) == 0:
        raise ValueError("training graph is empty")
    config.validate()
    entity_names = tuple(entities) if entities is not None else tuple(sorted(graph.entities()))
    relation_names = tuple(relations) if relations is not None else tuple(sorted(graph.relations()))
    model = init_model(entity_names, relation_names, config)

    triples = sorted(graph.triples)
    pos_ids = np.array(
        [
            [model.ent2id[t.head], model.rel2id[t.relation], model.ent2id[t.tail]]
            for t in triples
        ]
    )
    symmetric = {model.rel2id[r] for r in relation_names if r == PPI}
    true_set: set[tuple[int, int, int]] = set()
    for h, r, t in pos_ids:
        true_set.add((int(h), int(r), int(t)))
        if int(r) in symmetric:
            true_set.add((int(t), int(r), int(h)))

    def is_true(hi: int, ri: int, ti: int) -> bool:
        return (hi, ri, ti) in true_set

    rng = random.Random(config.seed)
    pool = list(range(model.n_entities))
    n = len(triples)
    order = list(range(n))
    k = config.negatives
    alpha = config.adversarial_temperature
    lr = config.learning_rate

    for epoch in range(config.epochs):
        rng.shuffle(order)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch_idx = order[start : start + config.batch_size]
            pos = pos_ids[batch_idx]
            neg = np.empty((len(batch_idx), k, 3), dtype=np.int64)
            for row, idx in enumerate(batch_idx):
                h, r, t = (int(v) for v in pos_ids[idx])
                neg[row] = _corrupt_ids(rng, h, r, t, k, pool, "both", is_true)
            loss, g_re, g_im, g_ph = _batch_loss_grad(model, pos, neg, alpha)
            model.entity_re -= lr * g_re
            model.entity_im -= lr * g_im
            model.relation_phase = wrap_phase(model.relation_phase - lr * g_ph)
            epoch_loss += loss * len(batch_idx)
        mean_loss = epoch_loss / n
        model.loss_history.append(mean_loss)
        log.debug("epoch %d: loss %.6f", epoch + 1, mean_loss)
    return model


def save_model(model: EmbeddingModel, path: str | Path, config: TrainConfig | None = None) -> None:
    """Binary checkpoint: header, id dictionaries, row-major float64 arrays.

    When ``config`` is given, a JSON sidecar <path>.config.json is written too.
    """
    dictionaries = json.dumps(
        {"entities": list(model.entities), "relations": list(model.relations)}
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(
            struct.pack(
                "<IIIId",
                CHECKPOINT_VERSION,
                model.dim,
                model.n_entities,
                model.n_relations,
                model.gamma,
            )
        )
        fh.write(struct.pack("<Q", len(dictionaries)))
        fh.write(dictionaries)
        fh.write(np.ascontiguousarray(model.entity_re, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.entity_im, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.relation_phase, dtype="<f8").tobytes())
    if config is not None:
        sidecar = Path(str(path) + ".config.json")
        sidecar.write_text(json.dumps(config.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> EmbeddingModel:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not an embedding checkpoint")
        version, dim, n_e, n_r, gamma = struct.unpack("<IIIId", fh.read(24))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        (dict_len,) = struct.unpack("<Q", fh.read(8))
        dicts = json.loads(fh.read(dict_len).decode("utf-8"))
        entity_re = np.frombuffer(fh.read(8 * n_e * dim), dtype="<f8").reshape(n_e, dim).copy()
        entity_im = np.frombuffer(fh.read(8 * n_e * dim), dtype="<f8").reshape(n_e, dim).copy()
        relation_phase = (
            np.frombuffer(fh.read(8 * n_r * dim), dtype="<f8").reshape(n_r, dim).copy()
        )
    return EmbeddingModel(
        entity_re=entity_re,
        entity_im=entity_im,
        relation_phase=relation_phase,
        gamma=gamma,
        entities=tuple(dicts["entities"]),
        relations=tuple(dicts["relations"]),
    )


@dataclass
class SearchSpace:
    """Random-search space; learning rate is sampled log-uniformly."""

    dims: tuple[int, ...] = (64, 128, 256)
    gammas: tuple[float, ...] = (6.0, 12.0, 24.0)
    lr_range: tuple[float, float] = (1e-4, 1e-1)
    negatives: tuple[int, ...] = (16, 64, 128)
    alphas: tuple[float, ...] = (0.0, 0.5, 1.0)
    epochs: int = 100
    batch_size: int = 128


@dataclass
class Trial:
    index: int
    config: TrainConfig
    mr: float
    mp: float
    hit30: float
    hit3: float
    hit1: float
    seconds: float

    def to_dict(self) -> dict:
        return {
            "trial": self.index,
            "config": self.config.to_dict(),
            "metrics": {
                "mr": self.mr,
                "mp": self.mp,
                "hit30": self.hit30,
                "hit3": self.hit3,
                "hit1": self.hit1,
            },
            "seconds": self.seconds,
        }


def sample_config(rng: random.Random, space: SearchSpace, seed: int) -> TrainConfig:
    lo, hi = space.lr_range
    lr = 10.0 ** rng.uniform(np.log10(lo), np.log10(hi))
    return TrainConfig(
        dim=rng.choice(list(space.dims)),
        gamma=rng.choice(list(space.gammas)),
        learning_rate=lr,
        batch_size=space.batch_size,
        negatives=rng.choice(list(space.negatives)),
        adversarial_temperature=rng.choice(list(space.alphas)),
        epochs=space.epochs,
        seed=seed,
    )


def tune(
    train_graph: KnowledgeGraph,
    valid_triples: Iterable[Triple],
    search_space: SearchSpace,
    n_trials: int,
    seed: int,
    relation: str = "gene_disease",
    candidates: Sequence[str] | None = None,
    log_path: str | Path | None = None,
) -> tuple[TrainConfig, list[Trial]]:
    """Random search: train each sampled config, pick max validation hit@30
    (mean rank breaks ties). The full trial log is returned and optionally
    written as JSONL."""
    from . import lpeval  # local import to avoid a module cycle

    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    valid = sorted(set(valid_triples))
    if not valid:
        raise ValueError("validation set is empty")
    if candidates is None:
        pool = {t.head for t in train_graph if t.relation == relation}
        pool.update(t.head for t in valid)
        candidates = sorted(pool)
    known = train_graph.triples | set(valid)
    all_entities = tuple(sorted(train_graph.entities() | {t.head for t in valid} | {t.tail for t in valid}))

    rng = random.Random(seed)
    trials: list[Trial] = []
    fh = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        for i in range(n_trials):
            config = sample_config(rng, space=search_space, seed=seed + i)
            started = time.perf_counter()
            model = train(train_graph, config, entities=all_entities)
            report = lpeval.evaluate(model, valid, candidates, known, relation=relation)
            trial = Trial(
                index=i,
                config=config,
                mr=report.mr,
                mp=report.mp,
                hit30=report.hit30,
                hit3=report.hit3,
                hit1=report.hit1,
                seconds=time.perf_counter() - started,
            )
            trials.append(trial)
            log.info(
                "trial %d/%d: hit@30 %.2f, MR %.2f (dim=%d, lr=%.2e)",
                i + 1,
                n_trials,
                trial.hit30,
                trial.mr,
                config.dim,
                config.learning_rate,
            )
            if fh:
                fh.write(json.dumps(trial.to_dict()) + "\n")
                fh.flush()
    finally:
        if fh:
            fh.close()
    best = max(trials, key=lambda tr: (tr.hit30, -tr.mr, -tr.index))
    return best.config, trials

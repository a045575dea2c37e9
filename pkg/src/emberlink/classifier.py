"""Match/non-match classification head and the full training protocol.

A similarity vector feeds a 50-unit ReLU layer and a logistic output.
Training minimizes binary cross-entropy plus an L2 penalty on the head
weights with mini-batch Adam; recurrent composer parameters (when used)
train jointly, and embedding vectors can optionally be fine-tuned
through the composition at a separate update rate, on a copy-on-write
overlay that leaves the base dictionary untouched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import lstm as lstm_mod
from .compose import (
    compose_avg,
    lstm_backward,
    lstm_forward,
    lstm_token_seqs,
    record_tokens,
)
from .data_model import MATCH, NON_MATCH, LabeledPair, Record, Table
from .embeddings import EmbeddingDictionary
from .errors import (
    ConfigError,
    ContractError,
    DivergenceError,
    PreconditionError,
    TrainingError,
)
from .lstm import LstmParams, init_lstm_params
from .metrics import MatchReport, precision_recall_f1
from .similarity import (
    COSINE,
    DIFF_HADAMARD,
    DIFFERENCE,
    HADAMARD,
    SIMILARITY_KINDS,
    similarity_vector,
    whole_tuple_cosine,
)

MODEL_FORMAT_TAG = "emberlink-model-v1"

COMPOSITIONS = ("avg", "lstm", "bilstm")


@dataclass
class TrainConfig:
    composition: str = "avg"
    similarity: str = COSINE
    learning_rate: float = 0.01
    epochs: int = 20
    batch_size: int = 16
    l2: float = 1e-3
    embedding_update_rate: float = 0.01
    neg_ratio: int = 4
    folds: int = 5
    noise_fraction: float = 0.0
    seed: int = 0
    fine_tune_embeddings: bool = False
    hidden_dim: int = 150        # recurrent composer memory size
    head_hidden: int = 50        # similarity-layer width

    def __post_init__(self):
        if self.composition not in COMPOSITIONS:
            raise ConfigError(f"unknown composition {self.composition!r}")
        if self.similarity not in SIMILARITY_KINDS:
            raise ConfigError(f"unknown similarity kind {self.similarity!r}")
        if self.composition == "avg" and self.similarity != COSINE:
            raise ConfigError("avg composition pairs with per-attribute cosine")
        if self.composition != "avg" and self.similarity == COSINE:
            raise ConfigError("recurrent composition needs difference/hadamard similarity")
        for name in ("learning_rate", "embedding_update_rate"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.epochs < 1 or self.batch_size < 1 or self.folds < 2:
            raise ConfigError("epochs/batch_size must be >= 1 and folds >= 2")
        if not 0.0 <= self.noise_fraction <= 1.0:
            raise ConfigError("noise_fraction must be in [0, 1]")
        if self.neg_ratio < 0:
            raise ConfigError("neg_ratio must be >= 0")
        if self.l2 < 0:
            raise ConfigError("l2 must be >= 0")

    def to_dict(self) -> dict:
        return {
            "composition": self.composition, "similarity": self.similarity,
            "learning_rate": self.learning_rate, "epochs": self.epochs,
            "batch_size": self.batch_size, "l2": self.l2,
            "embedding_update_rate": self.embedding_update_rate,
            "neg_ratio": self.neg_ratio, "folds": self.folds,
            "noise_fraction": self.noise_fraction, "seed": self.seed,
            "fine_tune_embeddings": self.fine_tune_embeddings,
            "hidden_dim": self.hidden_dim, "head_hidden": self.head_hidden,
        }


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + np.exp(-z))
    ez = np.exp(z)
    return ez / (1.0 + ez)


def _bce_from_logit(z: float, y: float) -> float:
    # log(1 + e^z) - y*z, computed stably
    return float(np.logaddexp(0.0, z) - y * z)


@dataclass
class DenseHead:
    """similarity-dim -> ReLU hidden layer -> logistic output."""

    W1: np.ndarray   # (hidden, sim_dim)
    b1: np.ndarray   # (hidden,)
    w2: np.ndarray   # (hidden,)
    b2: np.ndarray   # (1,)

    def forward(self, s: np.ndarray) -> tuple[float, tuple]:
        z1 = self.W1 @ s + self.b1
        a1 = np.maximum(z1, 0.0)
        z2 = float(self.w2 @ a1 + self.b2[0])
        return _sigmoid(z2), (s, z1, a1, z2)

    def probability(self, s: np.ndarray) -> float:
        return self.forward(s)[0]

    def backward(self, cache: tuple, y: float) -> tuple[dict[str, np.ndarray], np.ndarray]:
        """Gradients of the BCE loss wrt head params and the input vector."""
        s, z1, a1, z2 = cache
        dz2 = _sigmoid(z2) - y
        dw2 = dz2 * a1
        db2 = np.array([dz2])
        da1 = dz2 * self.w2
        dz1 = da1 * (z1 > 0)
        dW1 = np.outer(dz1, s)
        db1 = dz1
        ds = self.W1.T @ dz1
        return {"head.W1": dW1, "head.b1": db1, "head.w2": dw2, "head.b2": db2}, ds

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        return [
            ("head.W1", self.W1), ("head.b1", self.b1),
            ("head.w2", self.w2), ("head.b2", self.b2),
        ]


def init_head(sim_dim: int, hidden: int = 50, seed: int = 0) -> DenseHead:
    rng = np.random.default_rng(seed)
    return DenseHead(
        W1=rng.uniform(-1, 1, size=(hidden, sim_dim)) / np.sqrt(sim_dim),
        b1=np.zeros(hidden),
        w2=rng.uniform(-1, 1, size=hidden) / np.sqrt(hidden),
        b2=np.zeros(1),
    )


class Adam:
    """Mini-batch Adam over named parameter arrays, updated in place."""

    def __init__(self, params: list[tuple[str, np.ndarray]], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = dict(params)
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {n: np.zeros_like(a) for n, a in self.params.items()}
        self.v = {n: np.zeros_like(a) for n, a in self.params.items()}
        self.t = 0

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for name, g in grads.items():
            p = self.params[name]
            m = self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            v = self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            m_hat = m / (1 - self.beta1**self.t)
            v_hat = v / (1 - self.beta2**self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


# ---------------------------------------------------------------------------
# Similarity-vector computation with backprop hooks
# ---------------------------------------------------------------------------


def _cosine_with_grads(u: np.ndarray, v: np.ndarray):
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0, np.zeros_like(u), np.zeros_like(v)
    s = float(np.dot(u, v) / (nu * nv))
    du = v / (nu * nv) - s * u / (nu * nu)
    dv = u / (nu * nv) - s * v / (nv * nv)
    return s, du, dv


class _AvgFeaturizer:
    """Per-attribute means + cosines, differentiable into token vectors."""

    def __init__(self, dictionary: EmbeddingDictionary, fine_tune: bool):
        self.dictionary = dictionary
        self.fine_tune = fine_tune

    def forward(self, lrec: Record, rrec: Record):
        toks_l = record_tokens(lrec)
        toks_r = record_tokens(rrec)
        d = self.dictionary
        means_l = [
            np.mean([d.lookup(t) for t in seq], axis=0) if len(seq) else d.unk_vector
            for seq in toks_l
        ]
        means_r = [
            np.mean([d.lookup(t) for t in seq], axis=0) if len(seq) else d.unk_vector
            for seq in toks_r
        ]
        sims, dus, dvs = [], [], []
        for u, v in zip(means_l, means_r):
            s, du, dv = _cosine_with_grads(u, v)
            sims.append(s)
            dus.append(du)
            dvs.append(dv)
        cache = (toks_l, toks_r, dus, dvs)
        return np.array(sims), cache

    def backward(self, cache, dsim: np.ndarray):
        if not self.fine_tune:
            return {}, {}
        toks_l, toks_r, dus, dvs = cache
        emb: dict[str, np.ndarray] = {}
        for i, (seq_l, seq_r) in enumerate(zip(toks_l, toks_r)):
            for seq, dvec in ((seq_l, dus[i]), (seq_r, dvs[i])):
                if len(seq) == 0:
                    continue  # UNK stood in; no participating tokens
                g = dsim[i] * dvec / len(seq)
                for tok in seq:
                    if tok in emb:
                        emb[tok] = emb[tok] + g
                    else:
                        emb[tok] = g.copy()
        return {}, emb


class _LstmFeaturizer:
    """Recurrent composition of both tuples + difference/hadamard similarity."""

    def __init__(self, dictionary: EmbeddingDictionary, params: LstmParams,
                 kind: str, fine_tune: bool):
        self.dictionary = dictionary
        self.params = params
        self.kind = kind
        self.fine_tune = fine_tune

    def forward(self, lrec: Record, rrec: Record):
        dr_l, cache_l = lstm_forward(lstm_token_seqs(lrec), self.dictionary, self.params)
        dr_r, cache_r = lstm_forward(lstm_token_seqs(rrec), self.dictionary, self.params)
        sim = similarity_vector(dr_l, dr_r, self.kind)
        return sim, (cache_l, cache_r, dr_l.vector, dr_r.vector)

    def backward(self, cache, dsim: np.ndarray):
        cache_l, cache_r, a, b = cache
        if self.kind == DIFFERENCE:
            da, db = dsim, -dsim
        elif self.kind == HADAMARD:
            da, db = dsim * b, dsim * a
        elif self.kind == DIFF_HADAMARD:
            half = dsim.size // 2
            d1, d2 = dsim[:half], dsim[half:]
            da, db = d1 + d2 * b, -d1 + d2 * a
        else:
            raise ContractError(f"no gradient rule for similarity {self.kind!r}")
        grads_l, emb_l = lstm_backward(cache_l, da, self.fine_tune)
        grads_r, emb_r = lstm_backward(cache_r, db, self.fine_tune)
        param_grads = {
            f"lstm.{k}": grads_l[k] + grads_r[k] for k in grads_l
        }
        emb = dict(emb_l)
        for w, g in emb_r.items():
            emb[w] = emb[w] + g if w in emb else g
        return param_grads, emb


# ---------------------------------------------------------------------------
# Training-set construction
# ---------------------------------------------------------------------------


def positive_threshold(
    positives: list[LabeledPair],
    left: Table,
    right: Table,
    dictionary: EmbeddingDictionary,
) -> float:
    """Minimum whole-tuple cosine over the matched pairs (averaged DRs)."""
    sims = positive_similarities(positives, left, right, dictionary)
    return float(np.min(sims))


def positive_similarities(
    positives: list[LabeledPair],
    left: Table,
    right: Table,
    dictionary: EmbeddingDictionary,
) -> np.ndarray:
    if not positives:
        raise PreconditionError("at least one positive pair is required")
    out = []
    for p in positives:
        a = compose_avg(left.record(p.left_id), dictionary)
        b = compose_avg(right.record(p.right_id), dictionary)
        out.append(whole_tuple_cosine(a, b))
    return np.array(out)


@dataclass
class NegativeSample:
    pairs: list[LabeledPair]
    threshold: float
    relaxed: bool = False


def sample_negatives(
    positives: list[LabeledPair],
    left: Table,
    right: Table,
    dictionary: EmbeddingDictionary,
    ratio: int,
    threshold: float | None = None,
    seed: int = 0,
    attempt_cap: int | None = None,
) -> NegativeSample:
    """ratio * |positives| seeded uniform non-duplicate pairs whose
    whole-tuple cosine falls below the threshold.

    If the attempt cap is exhausted before enough qualify, the threshold
    relaxes once to the 5th percentile of the positive-pair similarities
    and sampling resumes; the relaxation is flagged on the result.
    """
    requested = ratio * len(positives)
    if requested == 0:
        return NegativeSample(pairs=[], threshold=threshold or 0.0)
    sims = positive_similarities(positives, left, right, dictionary)
    if threshold is None:
        threshold = float(np.min(sims))
    rng = np.random.default_rng(seed)
    drs_left = {r.id: compose_avg(r, dictionary) for r in left.records}
    drs_right = {r.id: compose_avg(r, dictionary) for r in right.records}
    positive_keys = {p.key() for p in positives}
    left_ids = left.ids
    right_ids = right.ids
    cap = attempt_cap or max(1000, 50 * requested)
    chosen: list[tuple[str, str]] = []
    chosen_set: set[tuple[str, str]] = set()
    relaxed = False
    current = threshold
    attempts = 0
    while len(chosen) < requested:
        if attempts >= cap:
            if relaxed:
                raise PreconditionError(
                    f"could not sample {requested} negatives below threshold "
                    f"{current:.4f} within {cap} attempts"
                )
            relaxed = True
            current = float(np.percentile(sims, 5))
            attempts = 0
            continue
        attempts += 1
        li = left_ids[rng.integers(len(left_ids))]
        ri = right_ids[rng.integers(len(right_ids))]
        key = (li, ri)
        if key in positive_keys or key in chosen_set:
            continue
        if whole_tuple_cosine(drs_left[li], drs_right[ri]) >= current:
            continue
        chosen.append(key)
        chosen_set.add(key)
    pairs = [LabeledPair(l, r, NON_MATCH) for l, r in chosen]
    return NegativeSample(pairs=pairs, threshold=current, relaxed=relaxed)


def inject_noise(
    pairs: list[LabeledPair], fraction: float, seed: int = 0
) -> list[LabeledPair]:
    """Flip exactly floor(fraction * n) labels, chosen uniformly."""
    if not 0.0 <= fraction <= 1.0:
        raise ContractError("fraction must be in [0, 1]")
    n = len(pairs)
    k = int(np.floor(fraction * n))
    rng = np.random.default_rng(seed)
    flip = set(rng.choice(n, size=k, replace=False).tolist()) if k else set()
    out = []
    for i, p in enumerate(pairs):
        if i in flip:
            out.append(LabeledPair(p.left_id, p.right_id,
                                   NON_MATCH if p.is_match else MATCH))
        else:
            out.append(p)
    return out


# ---------------------------------------------------------------------------
# Model and training loop
# ---------------------------------------------------------------------------


@dataclass
class TrainedModel:
    composition: str
    similarity: str
    head: DenseHead
    num_attributes: int
    embedding_dim: int
    threshold: float = 0.5
    lstm_params: LstmParams | None = None
    overlay: dict[str, np.ndarray] = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    loss_history: list[float] = field(default_factory=list)

    def resolve_dictionary(self, dictionary: EmbeddingDictionary) -> EmbeddingDictionary:
        """Apply the fine-tuned overlay (if any) on top of a base dictionary."""
        if not self.overlay:
            return dictionary
        cached = getattr(self, "_resolved", None)
        if cached is not None and cached[0] is dictionary:
            return cached[1]
        merged = dictionary.with_entries(self.overlay)
        self._resolved = (dictionary, merged)
        return merged

    def similarity_for(
        self, lrec: Record, rrec: Record, dictionary: EmbeddingDictionary
    ) -> np.ndarray:
        if len(lrec.values) != self.num_attributes or len(rrec.values) != self.num_attributes:
            raise ContractError(
                f"records have {len(lrec.values)}/{len(rrec.values)} attributes, "
                f"model expects {self.num_attributes}"
            )
        d = self.resolve_dictionary(dictionary)
        if self.composition == "avg":
            a = compose_avg(lrec, d)
            b = compose_avg(rrec, d)
        else:
            a, _ = lstm_forward(lstm_token_seqs(lrec), d, self.lstm_params)
            b, _ = lstm_forward(lstm_token_seqs(rrec), d, self.lstm_params)
        return similarity_vector(a, b, self.similarity)

    def dr_for(self, rec: Record, dictionary: EmbeddingDictionary):
        d = self.resolve_dictionary(dictionary)
        if self.composition == "avg":
            return compose_avg(rec, d)
        dr, _ = lstm_forward(lstm_token_seqs(rec), d, self.lstm_params)
        return dr


def predict(
    model: TrainedModel,
    pair: tuple[Record, Record],
    dictionary: EmbeddingDictionary,
) -> tuple[float, str]:
    """(probability, label); label is a match iff probability >= threshold."""
    sim = model.similarity_for(pair[0], pair[1], dictionary)
    p = model.head.probability(sim)
    return p, (MATCH if p >= model.threshold else NON_MATCH)


def _make_featurizer(cfg: TrainConfig, dictionary, params):
    if cfg.composition == "avg":
        return _AvgFeaturizer(dictionary, cfg.fine_tune_embeddings)
    return _LstmFeaturizer(dictionary, params, cfg.similarity, cfg.fine_tune_embeddings)


def train(
    pairs: list[LabeledPair],
    left: Table,
    right: Table,
    dictionary: EmbeddingDictionary,
    cfg: TrainConfig,
) -> TrainedModel:
    """Mini-batch Adam over the labeled pairs; deterministic per seed."""
    if not pairs:
        raise TrainingError("training needs a non-empty pair set")
    labels = np.array([1.0 if p.is_match else 0.0 for p in pairs])
    if labels.min() == labels.max():
        raise TrainingError("training needs both classes present")
    m = left.schema.arity
    d = dictionary.dimension
    rng = np.random.default_rng(cfg.seed)

    lstm_params = None
    if cfg.composition != "avg":
        direction = lstm_mod.BIDIRECTIONAL if cfg.composition == "bilstm" else lstm_mod.FORWARD
        lstm_params = init_lstm_params(d, cfg.hidden_dim, direction, seed=cfg.seed + 1)
        sim_dim = (
            2 * lstm_params.output_dim
            if cfg.similarity == DIFF_HADAMARD
            else lstm_params.output_dim
        )
    else:
        sim_dim = m

    head = init_head(sim_dim, hidden=cfg.head_hidden, seed=cfg.seed + 2)

    working = dictionary
    touched: set[str] = set()
    if cfg.fine_tune_embeddings:
        working = dictionary.with_entries({})  # copy-on-write working dictionary

    featurizer = _make_featurizer(cfg, working, lstm_params)
    recs = [(left.record(p.left_id), right.record(p.right_id)) for p in pairs]

    # static-feature fast path: nothing upstream of the head ever changes
    static_features = None
    if cfg.composition == "avg" and not cfg.fine_tune_embeddings:
        static_features = [featurizer.forward(lr, rr)[0] for lr, rr in recs]

    opt_params = head.named_arrays()
    if lstm_params is not None:
        opt_params += [(f"lstm.{n}", a) for n, a in lstm_params.named_arrays()]
    optimizer = Adam(opt_params, lr=cfg.learning_rate)

    n = len(pairs)
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        batch_count = 0
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            bsz = len(batch)
            grads = {name: np.zeros_like(arr) for name, arr in opt_params}
            emb_accum: dict[str, np.ndarray] = {}
            loss = 0.0
            for idx in batch:
                y = labels[idx]
                if static_features is not None:
                    s = static_features[idx]
                    cache = None
                else:
                    s, cache = featurizer.forward(*recs[idx])
                p, head_cache = head.forward(s)
                loss += _bce_from_logit(head_cache[3], y)
                head_grads, ds = head.backward(head_cache, y)
                for k, g in head_grads.items():
                    grads[k] += g
                if cache is not None:
                    f_grads, emb_grads = featurizer.backward(cache, ds)
                    for k, g in f_grads.items():
                        grads[k] += g
                    for w, g in emb_grads.items():
                        if w in emb_accum:
                            emb_accum[w] = emb_accum[w] + g
                        else:
                            emb_accum[w] = g
            for k in grads:
                grads[k] /= bsz
            # L2 on head weight matrices only
            grads["head.W1"] += 2.0 * cfg.l2 * head.W1
            grads["head.w2"] += 2.0 * cfg.l2 * head.w2
            loss = loss / bsz + cfg.l2 * (
                float(np.sum(head.W1**2)) + float(np.sum(head.w2**2))
            )
            if not np.isfinite(loss):
                raise DivergenceError(epoch=epoch, batch=start // cfg.batch_size)
            optimizer.step(grads)
            if cfg.fine_tune_embeddings and emb_accum:
                for w, g in emb_accum.items():
                    if w in working.entries:
                        working.entries[w] = working.entries[w] - (
                            cfg.embedding_update_rate * g / bsz
                        )
                        touched.add(w)
            epoch_loss += loss
            batch_count += 1
        history.append(epoch_loss / batch_count)

    overlay = {w: working.entries[w] for w in sorted(touched)}
    return TrainedModel(
        composition=cfg.composition,
        similarity=cfg.similarity,
        head=head,
        num_attributes=m,
        embedding_dim=d,
        lstm_params=lstm_params,
        overlay=overlay,
        config=cfg.to_dict(),
        loss_history=history,
    )


# ---------------------------------------------------------------------------
# K-fold evaluation
# ---------------------------------------------------------------------------


@dataclass
class FoldResults:
    folds: list[MatchReport]
    mean_precision: float
    mean_recall: float
    mean_f1: float
    std_f1: float

    def to_dict(self) -> dict:
        return {
            "folds": [f.to_dict() for f in self.folds],
            "mean_precision": self.mean_precision,
            "mean_recall": self.mean_recall,
            "mean_f1": self.mean_f1,
            "std_f1": self.std_f1,
        }


def kfold_eval(
    pairs: list[LabeledPair],
    left: Table,
    right: Table,
    dictionary: EmbeddingDictionary,
    cfg: TrainConfig,
) -> FoldResults:
    """Seeded stratified K-fold train/test over the labeled pairs."""
    pos_idx = [i for i, p in enumerate(pairs) if p.is_match]
    neg_idx = [i for i, p in enumerate(pairs) if not p.is_match]
    if len(pos_idx) < cfg.folds:
        raise PreconditionError(
            f"{len(pos_idx)} positives cannot fill {cfg.folds} folds"
        )
    rng = np.random.default_rng(cfg.seed)
    pos_folds = np.array_split(rng.permutation(pos_idx), cfg.folds)
    neg_folds = np.array_split(rng.permutation(neg_idx), cfg.folds) if neg_idx else [
        np.array([], dtype=int)
    ] * cfg.folds
    reports = []
    for fold in range(cfg.folds):
        test_idx = set(pos_folds[fold].tolist()) | set(neg_folds[fold].tolist())
        train_pairs = [p for i, p in enumerate(pairs) if i not in test_idx]
        test_pairs = [pairs[i] for i in sorted(test_idx)]
        fold_cfg_dict = cfg.to_dict()
        fold_cfg_dict["seed"] = cfg.seed + 7919 * (fold + 1)
        model = train(train_pairs, left, right, dictionary, TrainConfig(**fold_cfg_dict))
        predicted = []
        for p in test_pairs:
            prob, label = predict(
                model, (left.record(p.left_id), right.record(p.right_id)), dictionary
            )
            if label == MATCH:
                predicted.append(p.key())
        truth = [p.key() for p in test_pairs if p.is_match]
        reports.append(
            precision_recall_f1(predicted, truth, universe_size=len(test_pairs))
        )
    f1s = np.array([r.f1 for r in reports])
    return FoldResults(
        folds=reports,
        mean_precision=float(np.mean([r.precision for r in reports])),
        mean_recall=float(np.mean([r.recall for r in reports])),
        mean_f1=float(np.mean(f1s)),
        std_f1=float(np.std(f1s)),
    )


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def save_model(model: TrainedModel, path: str) -> None:
    """Single .npz artifact; round-trips bit-exactly."""
    meta = {
        "tag": MODEL_FORMAT_TAG,
        "composition": model.composition,
        "similarity": model.similarity,
        "num_attributes": model.num_attributes,
        "embedding_dim": model.embedding_dim,
        "threshold": model.threshold,
        "config": model.config,
        "loss_history": model.loss_history,
        "lstm": None,
        "overlay_words": sorted(model.overlay),
    }
    arrays = {}
    for name, arr in model.head.named_arrays():
        arrays[name.replace(".", "_")] = arr
    if model.lstm_params is not None:
        meta["lstm"] = {
            "input_dim": model.lstm_params.input_dim,
            "hidden_dim": model.lstm_params.hidden_dim,
            "direction": model.lstm_params.direction,
        }
        for name, arr in model.lstm_params.named_arrays():
            arrays["lstm_" + name.replace(".", "_")] = arr
    if model.overlay:
        arrays["overlay_vectors"] = np.stack(
            [model.overlay[w] for w in meta["overlay_words"]]
        )
    arrays["meta"] = np.array(json.dumps(meta))
    np.savez_compressed(path, **arrays)


def load_model(path: str) -> TrainedModel:
    from .lstm import GateParams

    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("tag") != MODEL_FORMAT_TAG:
            raise ContractError(f"not a model artifact: {meta.get('tag')!r}")
        head = DenseHead(
            W1=data["head_W1"], b1=data["head_b1"],
            w2=data["head_w2"], b2=data["head_b2"],
        )
        lstm_params = None
        if meta["lstm"] is not None:
            fwd = GateParams(
                W=data["lstm_fwd_W"], U=data["lstm_fwd_U"], b=data["lstm_fwd_b"]
            )
            bwd = None
            if meta["lstm"]["direction"] == lstm_mod.BIDIRECTIONAL:
                bwd = GateParams(
                    W=data["lstm_bwd_W"], U=data["lstm_bwd_U"], b=data["lstm_bwd_b"]
                )
            lstm_params = LstmParams(
                input_dim=meta["lstm"]["input_dim"],
                hidden_dim=meta["lstm"]["hidden_dim"],
                fwd=fwd, direction=meta["lstm"]["direction"], bwd=bwd,
            )
        overlay = {}
        if meta["overlay_words"]:
            vectors = data["overlay_vectors"]
            overlay = {w: vectors[i] for i, w in enumerate(meta["overlay_words"])}
    return TrainedModel(
        composition=meta["composition"],
        similarity=meta["similarity"],
        head=head,
        num_attributes=meta["num_attributes"],
        embedding_dim=meta["embedding_dim"],
        threshold=meta["threshold"],
        lstm_params=lstm_params,
        overlay=overlay,
        config=meta["config"],
        loss_history=meta["loss_history"],
    )

"""Tokenization and tuple-level distributed representations.

Two composers are provided: per-attribute averaging with concatenation
(the m*d "concatenated" layout), and a recurrent composer (see lstm.py)
that runs one shared LSTM over the whole tuple's token stream and emits
a single "composed" vector.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

from .data_model import Record, Schema
from .embeddings import EmbeddingDictionary
from .errors import ContractError, IntegrityError
from .lstm import LstmParams, SequenceCache, run_backward, run_forward

CONCATENATED = "concatenated"
COMPOSED = "composed"

UNK_TOKEN = "<unk>"

_STRIP_CHARS = string.punctuation


@dataclass(frozen=True)
class TokenSeq:
    tokens: tuple[str, ...]

    def __post_init__(self):
        if any(not t for t in self.tokens):
            raise ContractError("token sequences must not contain empty tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


@dataclass
class TupleDR:
    """Distributed representation of one tuple.

    kind "concatenated": vector length is num_attributes * dim_per_attribute.
    kind "composed": vector is the recurrent composer's output (x or 2x dims).
    """

    kind: str
    vector: np.ndarray
    num_attributes: int | None = None
    dim_per_attribute: int | None = None

    def __post_init__(self):
        if self.kind not in (CONCATENATED, COMPOSED):
            raise ContractError(f"unknown TupleDR kind {self.kind!r}")
        if not np.all(np.isfinite(self.vector)):
            raise ContractError("TupleDR vector has non-finite components")
        if self.kind == CONCATENATED:
            if self.num_attributes is None or self.dim_per_attribute is None:
                raise ContractError("concatenated DR needs (m, d) layout")
            if self.vector.size != self.num_attributes * self.dim_per_attribute:
                raise ContractError(
                    f"concatenated DR length {self.vector.size} != "
                    f"{self.num_attributes}*{self.dim_per_attribute}"
                )

    def attribute_slice(self, i: int) -> np.ndarray:
        if self.kind != CONCATENATED:
            raise ContractError("attribute slices only exist on concatenated DRs")
        d = self.dim_per_attribute
        return self.vector[i * d : (i + 1) * d]


def tokenize(text: str | None) -> TokenSeq:
    """Lowercase, split on whitespace, strip edge punctuation; None -> empty."""
    if text is None:
        return TokenSeq(())
    out = []
    for raw in text.lower().split():
        tok = raw.strip(_STRIP_CHARS)
        if tok:
            out.append(tok)
    return TokenSeq(tuple(out))


def record_tokens(record: Record) -> list[TokenSeq]:
    """Token sequence per non-id attribute, in schema order."""
    return [tokenize(v) for v in record.values]


def compose_avg(record: Record, dictionary: EmbeddingDictionary) -> TupleDR:
    """Per-attribute token-vector mean, concatenated in attribute order.

    An attribute with no tokens (NULL or punctuation-only) contributes the
    UNK vector.
    """
    d = dictionary.dimension
    parts = []
    for seq in record_tokens(record):
        if len(seq) == 0:
            parts.append(dictionary.unk_vector)
        else:
            parts.append(
                np.mean([dictionary.lookup(t) for t in seq], axis=0)
            )
    m = len(record.values)
    vector = np.concatenate(parts) if parts else np.zeros(0)
    return TupleDR(
        kind=CONCATENATED, vector=vector, num_attributes=m, dim_per_attribute=d
    )


def lstm_token_seqs(record: Record) -> list[TokenSeq]:
    """Token sequences for the recurrent composer.

    A NULL or empty attribute contributes a single UNK pseudo-token so
    the recurrent state still advances at attribute boundaries.
    """
    seqs = []
    for value in record.values:
        seq = tokenize(value)
        if len(seq) == 0:
            seq = TokenSeq((UNK_TOKEN,))
        seqs.append(seq)
    return seqs


@dataclass
class ComposeCache:
    """Forward activations plus the token stream, kept for backprop."""

    tokens: tuple[str, ...]
    seq_cache: SequenceCache


def lstm_forward(
    token_seqs: list[TokenSeq],
    dictionary: EmbeddingDictionary,
    params: LstmParams,
) -> tuple[TupleDR, ComposeCache]:
    """One shared LSTM over all attributes' tokens, state carried across
    attribute boundaries; the final hidden state summarizes the tuple."""
    if params.input_dim != dictionary.dimension:
        raise ContractError(
            f"LSTM input_dim {params.input_dim} != embedding dim {dictionary.dimension}"
        )
    tokens = tuple(t for seq in token_seqs for t in seq)
    X = (
        np.stack([dictionary.lookup(t) for t in tokens])
        if tokens
        else np.zeros((0, dictionary.dimension))
    )
    out, seq_cache = run_forward(X, params)
    dr = TupleDR(kind=COMPOSED, vector=out)
    return dr, ComposeCache(tokens=tokens, seq_cache=seq_cache)


def lstm_backward(
    cache: ComposeCache,
    upstream: np.ndarray,
    want_embedding_grads: bool = False,
) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray]]:
    """BPTT gradients for the composer parameters and, optionally, for the
    embedding vectors of the participating tokens (summed per word)."""
    if len(cache.tokens) != cache.seq_cache.length:
        raise IntegrityError("compose cache is inconsistent with its token stream")
    gate_grads, dX = run_backward(cache.seq_cache, np.asarray(upstream, dtype=float))
    flat: dict[str, np.ndarray] = {}
    for side, grads in gate_grads.items():
        flat[f"{side}.W"] = grads.W
        flat[f"{side}.U"] = grads.U
        flat[f"{side}.b"] = grads.b
    emb_grads: dict[str, np.ndarray] = {}
    if want_embedding_grads:
        for t, word in enumerate(cache.tokens):
            if word in emb_grads:
                emb_grads[word] = emb_grads[word] + dX[t]
            else:
                emb_grads[word] = dX[t].copy()
    return flat, emb_grads


def compose_lstm(
    record: Record, dictionary: EmbeddingDictionary, params: LstmParams
) -> TupleDR:
    """Run the shared LSTM over the tuple's whole token stream."""
    dr, _ = lstm_forward(lstm_token_seqs(record), dictionary, params)
    return dr


def compose_table(
    records: list[Record],
    dictionary: EmbeddingDictionary,
    method: str = "avg",
    params: LstmParams | None = None,
) -> dict[str, TupleDR]:
    """DR per record id; method is "avg", "lstm", or "bilstm"."""
    if method == "avg":
        return {r.id: compose_avg(r, dictionary) for r in records}
    if method in ("lstm", "bilstm"):
        if params is None:
            raise ContractError(f"composition {method!r} requires LstmParams")
        return {r.id: compose_lstm(r, dictionary, params) for r in records}
    raise ContractError(f"unknown composition method {method!r}")


def schema_arity(schema: Schema) -> int:
    return schema.arity

"""Loading and querying pre-trained word-embedding dictionaries.

The on-disk format is the usual ``word v1 v2 ... vd`` text layout that
GloVe, word2vec, and fastText can all export to.  Words are stored
lowercase (first occurrence wins on case collisions) so lookups stay
consistent with the lowercasing tokenizer.  Out-of-vocabulary words fall
back to a synthesized UNK vector: the component-wise mean of every
loaded vector.
"""

from __future__ import annotations

import gzip
from dataclasses import dataclass, field

import numpy as np

from .data_model import Table
from .errors import FormatError

GZIP_MAGIC = b"\x1f\x8b"


@dataclass
class EmbeddingDictionary:
    dimension: int
    entries: dict[str, np.ndarray]
    unk_vector: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.unk_vector)):
            raise FormatError("UNK vector has non-finite components")
        if self.unk_vector.shape != (self.dimension,):
            raise FormatError("UNK vector length differs from dimension")

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, word: str) -> np.ndarray:
        """Vector for `word` (case-insensitive); UNK vector if absent."""
        return self.entries.get(word.lower(), self.unk_vector)

    def with_entries(self, extra: dict[str, np.ndarray]) -> "EmbeddingDictionary":
        """New dictionary with `extra` merged in; the receiver is untouched."""
        merged = dict(self.entries)
        merged.update(extra)
        return EmbeddingDictionary(self.dimension, merged, self.unk_vector.copy())


def lookup(dictionary: EmbeddingDictionary, word: str) -> np.ndarray:
    return dictionary.lookup(word)


def _mean_unk(entries: dict[str, np.ndarray], dimension: int) -> np.ndarray:
    if not entries:
        return np.zeros(dimension)
    return np.mean(np.stack(list(entries.values())), axis=0)


def load_embedding_text(path: str) -> EmbeddingDictionary:
    """Load a whitespace-separated embedding text file (gzip detected by magic).

    All lines must share one dimension; violations raise FormatError with
    the offending line number.
    """
    with open(path, "rb") as raw:
        magic = raw.read(2)
    opener = gzip.open if magic == GZIP_MAGIC else open
    entries: dict[str, np.ndarray] = {}
    dimension = None
    with opener(path, "rt", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.split()
            if not parts:
                continue
            word = parts[0].lower()
            try:
                vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-numeric component") from exc
            if dimension is None:
                if vec.size == 0:
                    raise FormatError(f"{path}:{lineno}: no vector components")
                dimension = vec.size
            elif vec.size != dimension:
                raise FormatError(
                    f"{path}:{lineno}: dimension {vec.size} differs from {dimension}"
                )
            if word not in entries:
                entries[word] = vec
    if dimension is None:
        raise FormatError(f"{path}: empty embedding file, dimension undeterminable")
    return EmbeddingDictionary(
        dimension=dimension, entries=entries, unk_vector=_mean_unk(entries, dimension)
    )


def save_embedding_text(dictionary: EmbeddingDictionary, path: str) -> None:
    """Write entries in the same text format, one word per line."""
    with open(path, "w", encoding="utf-8") as f:
        for word, vec in dictionary.entries.items():
            f.write(word + " " + " ".join(repr(float(x)) for x in vec) + "\n")


@dataclass
class CoverageReport:
    """Token-level dictionary coverage of a table."""

    total_tokens: int
    known_tokens: int
    oov_words: set[str]
    per_attribute: dict[str, float] = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        if self.total_tokens == 0:
            return 1.0
        return self.known_tokens / self.total_tokens

    def to_dict(self) -> dict:
        return {
            "total_tokens": self.total_tokens,
            "known_tokens": self.known_tokens,
            "ratio": self.ratio,
            "oov_words": sorted(self.oov_words),
            "per_attribute": dict(self.per_attribute),
        }


def coverage(dictionary: EmbeddingDictionary, table: Table) -> CoverageReport:
    """Count how many tokens of `table` the dictionary knows."""
    from .compose import tokenize  # local import, compose depends on embeddings

    total = 0
    known = 0
    oov: set[str] = set()
    per_attr: dict[str, float] = {}
    attrs = table.schema.value_attributes
    attr_total = [0] * len(attrs)
    attr_known = [0] * len(attrs)
    for rec in table.records:
        for i, value in enumerate(rec.values):
            for tok in tokenize(value).tokens:
                total += 1
                attr_total[i] += 1
                if tok in dictionary:
                    known += 1
                    attr_known[i] += 1
                else:
                    oov.add(tok)
    for i, name in enumerate(attrs):
        per_attr[name] = attr_known[i] / attr_total[i] if attr_total[i] else 1.0
    return CoverageReport(
        total_tokens=total, known_tokens=known, oov_words=oov, per_attribute=per_attr
    )

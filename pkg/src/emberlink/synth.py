"""Synthetic benchmark generator: planted duplicates + a tiny embedding file.

Two tables share a product-like schema (name, city, category).  The right
table contains perturbed copies of some left records (the planted
duplicates) plus fresh distractors.  Perturbation either substitutes
synonyms that exist in the synthetic embedding (tier "easy") or injects
typos that fall out of vocabulary (tier "typo"), so every pipeline stage
can be exercised offline.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .data_model import LabeledPair, Record, Schema, Table, write_matches, write_table
from .embeddings import EmbeddingDictionary

_SYLLABLES = [
    "ba", "be", "bo", "da", "de", "di", "fa", "fo", "ga", "gu", "ka", "ke",
    "ki", "la", "lo", "ma", "mi", "mo", "na", "ne", "ni", "pa", "po", "ra",
    "re", "ri", "sa", "so", "ta", "te", "ti", "va", "vo", "za", "zu",
]


@dataclass
class SynthConfig:
    n_left: int = 300
    n_right: int = 300
    n_dups: int = 60
    dim: int = 24
    seed: int = 0
    tier: str = "easy"          # "easy": synonym swaps; "typo": OOV misspellings
    synonym_noise: float = 0.3  # vector distance of a synonym from its base word
    sub_prob: float = 0.6       # per-token perturbation probability
    null_prob: float = 0.02     # chance of a NULL city on distractor rows
    vocab: int = 160            # base words (before synonyms)

    def __post_init__(self):
        if self.n_dups > min(self.n_left, self.n_right):
            raise ValueError("more duplicates than rows on one side")
        if self.tier not in ("easy", "typo"):
            raise ValueError(f"unknown tier {self.tier!r}")


def _make_word(rng: np.random.Generator, used: set[str]) -> str:
    while True:
        k = rng.integers(2, 5)
        word = "".join(_SYLLABLES[rng.integers(len(_SYLLABLES))] for _ in range(k))
        if word not in used:
            used.add(word)
            return word


def _typo(rng: np.random.Generator, word: str) -> str:
    chars = list(word)
    if len(chars) >= 3:
        i = int(rng.integers(len(chars) - 1))
        chars[i], chars[i + 1] = chars[i + 1], chars[i]
    chars.append("x")
    return "".join(chars)


@dataclass
class SynthBenchmark:
    left: Table
    right: Table
    matches: list[LabeledPair]
    dictionary: EmbeddingDictionary
    synonyms: dict[str, str]


def generate(cfg: SynthConfig) -> SynthBenchmark:
    rng = np.random.default_rng(cfg.seed)
    used: set[str] = set()
    base = [_make_word(rng, used) for _ in range(cfg.vocab)]
    synonyms = {w: _make_word(rng, used) for w in base}

    entries: dict[str, np.ndarray] = {}
    for w in base:
        v = rng.standard_normal(cfg.dim)
        entries[w] = v / np.linalg.norm(v)
    for w, s in synonyms.items():
        u = rng.standard_normal(cfg.dim)
        u /= np.linalg.norm(u)
        v = entries[w] + cfg.synonym_noise * u
        entries[s] = v / np.linalg.norm(v)
    unk = np.mean(np.stack(list(entries.values())), axis=0)
    dictionary = EmbeddingDictionary(dimension=cfg.dim, entries=entries, unk_vector=unk)

    # word pools per field
    quarter = len(base) // 4
    brands, products, cities, cats = (
        base[:quarter], base[quarter : 2 * quarter],
        base[2 * quarter : 3 * quarter], base[3 * quarter :],
    )
    schema = Schema(attributes=("id", "name", "city", "category"), id_attribute="id")

    def fresh_record(prefix: str, i: int, allow_null: bool) -> Record:
        name = f"{brands[rng.integers(len(brands))]} {products[rng.integers(len(products))]}"
        if rng.random() < 0.5:
            name += f" {products[rng.integers(len(products))]}"
        city = cities[rng.integers(len(cities))]
        if allow_null and rng.random() < cfg.null_prob:
            city = None
        cat = cats[rng.integers(len(cats))]
        return Record(id=f"{prefix}{i:05d}", values=(name, city, cat))

    def perturb_token(tok: str) -> str:
        if rng.random() >= cfg.sub_prob:
            return tok
        if cfg.tier == "easy":
            return synonyms.get(tok, tok)
        return _typo(rng, tok)

    def perturb(rec: Record, new_id: str) -> Record:
        values = []
        for v in rec.values:
            if v is None:
                values.append(None)
                continue
            values.append(" ".join(perturb_token(t) for t in v.split()))
        return Record(id=new_id, values=tuple(values))

    left_records = [fresh_record("L", i, allow_null=True) for i in range(cfg.n_left)]
    dup_sources = rng.choice(cfg.n_left, size=cfg.n_dups, replace=False)
    right_records = []
    matches = []
    for j, src in enumerate(sorted(dup_sources.tolist())):
        rid = f"R{j:05d}"
        right_records.append(perturb(left_records[src], rid))
        matches.append(LabeledPair(left_records[src].id, rid))
    for j in range(cfg.n_dups, cfg.n_right):
        right_records.append(fresh_record("R", j, allow_null=True))

    return SynthBenchmark(
        left=Table(schema=schema, records=left_records),
        right=Table(schema=schema, records=right_records),
        matches=matches,
        dictionary=dictionary,
        synonyms=synonyms,
    )


def write_benchmark(cfg: SynthConfig, outdir: str) -> dict[str, str]:
    """Generate and write left.csv, right.csv, matches.csv, embeddings.txt."""
    bench = generate(cfg)
    os.makedirs(outdir, exist_ok=True)
    paths = {
        "left": os.path.join(outdir, "left.csv"),
        "right": os.path.join(outdir, "right.csv"),
        "matches": os.path.join(outdir, "matches.csv"),
        "embeddings": os.path.join(outdir, "embeddings.txt"),
    }
    write_table(bench.left, paths["left"])
    write_table(bench.right, paths["right"])
    write_matches(bench.matches, paths["matches"])
    from .embeddings import save_embedding_text

    save_embedding_text(bench.dictionary, paths["embeddings"])
    return paths

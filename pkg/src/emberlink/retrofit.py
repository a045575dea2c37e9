"""Dataset-driven embedding retrofitting.

A co-occurrence graph connects words that appear in the same tuple.
Out-of-vocabulary words are seeded from their most frequent in-dictionary
neighbors, then every vector is pulled toward its neighbors while staying
attached to its starting point, by exact coordinate descent on

    psi(Q) = sum_i alpha * ||q_i - q0_i||^2
           + sum_{(i,j) in E} beta * c_ij * ||q_i - q_j||^2

which is convex, so psi never increases across a full sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .compose import tokenize
from .data_model import Table
from .embeddings import EmbeddingDictionary
from .errors import ContractError, PreconditionError


@dataclass
class CoocGraph:
    """Within-tuple co-occurrence counts over the dataset vocabulary."""

    vertices: set[str] = field(default_factory=set)
    edges: dict[frozenset, int] = field(default_factory=dict)
    oov: set[str] = field(default_factory=set)

    def neighbors(self, word: str) -> dict[str, int]:
        out = {}
        for pair, count in self.edges.items():
            if word in pair:
                others = pair - {word}
                if others:
                    out[next(iter(others))] = count
        return out

    def degree_counts(self) -> dict[str, dict[str, int]]:
        """word -> {neighbor: co-occurrence count}, built in one pass."""
        adj: dict[str, dict[str, int]] = {w: {} for w in self.vertices}
        for pair, count in self.edges.items():
            a, b = tuple(pair)
            adj[a][b] = count
            adj[b][a] = count
        return adj


@dataclass
class RetrofitConfig:
    alpha: float = 1.0           # attachment to the starting vector
    beta: float = 1.0            # neighbor pull, scaled by edge count
    iterations: int = 10
    init_neighbors: int = 5      # top-k co-occurring words seeding each OOV word

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta <= 0:
            raise ContractError("alpha and beta must be nonnegative with alpha+beta>0")
        if self.iterations < 0:
            raise ContractError("iterations must be >= 0")
        if self.init_neighbors < 1:
            raise ContractError("init_neighbors must be >= 1")


def build_graph(tables, dictionary: EmbeddingDictionary) -> CoocGraph:
    """One vertex per distinct token; an edge per tuple-level co-occurrence.

    `tables` is a Table or an iterable of Tables.  Edge counts accumulate
    one per tuple in which both words appear.
    """
    if isinstance(tables, Table):
        tables = [tables]
    graph = CoocGraph()
    for table in tables:
        for rec in table.records:
            words = set()
            for value in rec.values:
                words.update(tokenize(value).tokens)
            graph.vertices.update(words)
            for a, b in combinations(sorted(words), 2):
                key = frozenset((a, b))
                graph.edges[key] = graph.edges.get(key, 0) + 1
    graph.oov = {w for w in graph.vertices if w not in dictionary}
    return graph


def init_oov(
    graph: CoocGraph, dictionary: EmbeddingDictionary, init_neighbors: int = 5
) -> EmbeddingDictionary:
    """Seed each OOV word with the mean vector of its top-k most frequent
    in-dictionary co-occurring words (ties lexicographic); UNK if none."""
    adj = graph.degree_counts()
    extra: dict[str, np.ndarray] = {}
    for word in sorted(graph.oov):
        known = [(n, c) for n, c in adj.get(word, {}).items() if n in dictionary]
        if not known:
            extra[word] = dictionary.unk_vector.copy()
            continue
        known.sort(key=lambda nc: (-nc[1], nc[0]))
        top = known[:init_neighbors]
        extra[word] = np.mean([dictionary.lookup(n) for n, _ in top], axis=0)
    return dictionary.with_entries(extra)


def objective(
    vectors: dict[str, np.ndarray],
    anchors: dict[str, np.ndarray],
    graph: CoocGraph,
    cfg: RetrofitConfig,
) -> float:
    """psi(Q) for the given vector assignment."""
    total = 0.0
    for w in graph.vertices:
        diff = vectors[w] - anchors[w]
        total += cfg.alpha * float(np.dot(diff, diff))
    for pair, count in graph.edges.items():
        a, b = tuple(pair)
        diff = vectors[a] - vectors[b]
        total += cfg.beta * count * float(np.dot(diff, diff))
    return total


def retrofit(
    dictionary: EmbeddingDictionary, graph: CoocGraph, cfg: RetrofitConfig
) -> EmbeddingDictionary:
    """Gauss-Seidel sweeps in lexicographic vertex order.

    Every graph vertex must already have a vector (run init_oov first
    when the graph has OOV words).
    """
    missing = [w for w in graph.vertices if w not in dictionary]
    if missing:
        raise PreconditionError(
            f"{len(missing)} graph vertices lack initial vectors, e.g. {sorted(missing)[:3]}"
        )
    order = sorted(graph.vertices)
    anchors = {w: dictionary.lookup(w) for w in order}
    q = {w: anchors[w].copy() for w in order}
    adj = graph.degree_counts()
    for _ in range(cfg.iterations):
        for w in order:
            neigh = adj.get(w, {})
            total_count = sum(neigh.values())
            denom = cfg.alpha + cfg.beta * total_count
            if denom == 0.0:
                continue
            acc = cfg.alpha * anchors[w]
            for n, c in neigh.items():
                acc = acc + cfg.beta * c * q[n]
            q[w] = acc / denom
    return dictionary.with_entries(q)

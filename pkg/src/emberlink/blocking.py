"""Cosine-LSH blocking: random-hyperplane hashing, indexed blocking,
multi-probe candidate generation, and analytic (K, L) tuning.

Hash codes are K-bit sign patterns of dot products against random unit
normals, packed into int64 bucket keys.  An index holds L tables; a pair
is a candidate if it shares a bucket in at least one table.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import ContractError, IntegrityError
from .similarity import safe_cosine

MAX_CODE_BITS = 62  # packed into int64 bucket keys

INDEX_FORMAT_TAG = "emberlink-index-v1"


@dataclass
class LshConfig:
    k: int = 8                # bits per hash code
    l: int = 2                # number of hash tables
    probe_radius: int = 0     # max Hamming distance for multi-probe (0 = exact)
    top_n: int = 0            # candidate cap per tuple (0 = unlimited)
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ContractError("k must be >= 1")
        if self.k > MAX_CODE_BITS:
            raise ContractError(f"k must be <= {MAX_CODE_BITS}")
        if self.l < 1:
            raise ContractError("l must be >= 1")
        if not (0 <= self.probe_radius <= self.k):
            raise ContractError("probe_radius must be in [0, k]")
        if self.top_n < 0:
            raise ContractError("top_n must be >= 0")


@dataclass
class TuningGoal:
    p1: float      # collision probability promised to near pairs
    p2: float      # collision probability tolerated for far pairs
    n: int         # table size

    def __post_init__(self):
        if not (0.0 < self.p2 < self.p1 < 1.0):
            raise ContractError("require 0 < P2 < P1 < 1")
        if self.n < 1:
            raise ContractError("n must be >= 1")


@dataclass
class HyperplaneFamily:
    """L groups of K random unit normals over a fixed dimension."""

    dimension: int
    normals: np.ndarray  # (L, K, dimension)
    seed: int

    def __post_init__(self):
        norms = np.linalg.norm(self.normals, axis=2)
        if not np.allclose(norms, 1.0, atol=1e-9):
            raise ContractError("hyperplane normals must have unit norm")

    @property
    def num_tables(self) -> int:
        return self.normals.shape[0]

    @property
    def bits(self) -> int:
        return self.normals.shape[1]


def sample_hyperplanes(
    dim: int, k: int, l: int, seed: int = 0
) -> HyperplaneFamily:
    """Spherical-Gaussian normals, normalized; deterministic per seed."""
    if dim < 1:
        raise ContractError("dimension must be >= 1")
    rng = np.random.default_rng(seed)
    normals = rng.standard_normal((l, k, dim))
    norms = np.linalg.norm(normals, axis=2, keepdims=True)
    if np.any(norms == 0.0):
        raise ContractError("degenerate zero-norm hyperplane draw")
    return HyperplaneFamily(dimension=dim, normals=normals / norms, seed=seed)


def hash_code(vector: np.ndarray, planes: np.ndarray) -> np.ndarray:
    """K-length +1/-1 code; a zero dot product hashes to +1."""
    vector = np.asarray(vector, dtype=float)
    planes = np.asarray(planes, dtype=float)
    if planes.ndim != 2 or planes.shape[1] != vector.shape[0]:
        raise ContractError(
            f"plane shape {planes.shape} does not match vector length {vector.shape[0]}"
        )
    dots = planes @ vector
    return np.where(dots >= 0.0, 1, -1).astype(np.int8)


def _pack_codes(vectors: np.ndarray, planes: np.ndarray) -> np.ndarray:
    """Packed int64 codes for many vectors at once; bit i = (dot_i >= 0)."""
    bits = (vectors @ planes.T) >= 0.0  # (n, K)
    powers = (np.int64(1) << np.arange(planes.shape[0], dtype=np.int64))
    return bits.astype(np.int64) @ powers


def pack_code(code: np.ndarray) -> int:
    """Pack a +1/-1 code into the int64 bucket key."""
    bits = np.asarray(code) > 0
    return int(bits.astype(np.int64) @ (np.int64(1) << np.arange(len(bits), dtype=np.int64)))


@dataclass
class LshIndex:
    family: HyperplaneFamily
    config: LshConfig
    left_ids: list[str]
    left_codes: np.ndarray                     # (L, n_left) int64
    right_ids: list[str] | None = None
    right_codes: np.ndarray | None = None
    # per table: packed code -> (left row indices, right row indices)
    buckets: list[dict[int, tuple[np.ndarray, np.ndarray]]] = field(default_factory=list)

    @property
    def two_sided(self) -> bool:
        return self.right_ids is not None

    def occupancy(self) -> list[dict[int, int]]:
        """Per table: bucket size -> number of buckets of that size."""
        out = []
        for table in self.buckets:
            hist: dict[int, int] = {}
            for lrows, rrows in table.values():
                size = len(lrows) + len(rrows)
                hist[size] = hist.get(size, 0) + 1
            out.append(hist)
        return out


def _as_matrix(drs: dict) -> tuple[list[str], np.ndarray]:
    ids = list(drs.keys())
    vecs = []
    for i in ids:
        v = drs[i]
        v = v.vector if hasattr(v, "vector") else np.asarray(v, dtype=float)
        vecs.append(v)
    dims = {v.shape[0] for v in vecs}
    if len(dims) > 1:
        raise IntegrityError(f"DR dimension drift across tuples: {sorted(dims)}")
    return ids, np.stack(vecs) if vecs else np.zeros((0, 0))


def build_index(
    left: dict,
    cfg: LshConfig,
    right: dict | None = None,
    family: HyperplaneFamily | None = None,
) -> LshIndex:
    """Index one or two sides of tuple DRs into L hash tables.

    `left`/`right` map record id -> TupleDR or raw vector.  With two
    sides, one shared hyperplane family hashes both and candidate pairs
    are cross-side only.
    """
    left_ids, left_mat = _as_matrix(left)
    right_ids, right_mat = (None, None)
    if right is not None:
        right_ids, right_mat = _as_matrix(right)
        if left_mat.size and right_mat.size and left_mat.shape[1] != right_mat.shape[1]:
            raise IntegrityError(
                f"DR dimension drift across sides: {left_mat.shape[1]} vs {right_mat.shape[1]}"
            )
    dim = left_mat.shape[1] if left_mat.size else (
        right_mat.shape[1] if right_mat is not None and right_mat.size else 1
    )
    if family is None:
        family = sample_hyperplanes(dim, cfg.k, cfg.l, cfg.seed)
    elif family.bits != cfg.k or family.num_tables != cfg.l:
        raise ContractError("hyperplane family inconsistent with LshConfig")

    left_codes = np.zeros((cfg.l, len(left_ids)), dtype=np.int64)
    right_codes = (
        np.zeros((cfg.l, len(right_ids)), dtype=np.int64) if right_ids is not None else None
    )
    for t in range(cfg.l):
        if len(left_ids):
            left_codes[t] = _pack_codes(left_mat, family.normals[t])
        if right_ids is not None and len(right_ids):
            right_codes[t] = _pack_codes(right_mat, family.normals[t])
    index = LshIndex(
        family=family, config=cfg,
        left_ids=left_ids, left_codes=left_codes,
        right_ids=right_ids, right_codes=right_codes,
        buckets=[],
    )
    _rebuild_buckets(index)
    return index


def _group_rows(codes: np.ndarray) -> dict[int, np.ndarray]:
    """code value -> sorted array of rows carrying it."""
    n = len(codes)
    if n == 0:
        return {}
    order = np.argsort(codes, kind="stable")
    sorted_codes = codes[order]
    starts = np.flatnonzero(
        np.concatenate(([True], sorted_codes[1:] != sorted_codes[:-1]))
    )
    bounds = np.append(starts, n)
    return {
        int(sorted_codes[s]): order[s:e] for s, e in zip(bounds[:-1], bounds[1:])
    }


def _pair_codes_for_table(
    index: LshIndex, table: dict[int, tuple[np.ndarray, np.ndarray]]
) -> np.ndarray:
    """Within-bucket pairs of one table, encoded as int64 for fast dedup."""
    chunks = []
    if index.two_sided:
        n_right = len(index.right_ids)
        for lrows, rrows in table.values():
            if len(lrows) and len(rrows):
                li = np.repeat(lrows.astype(np.int64), len(rrows))
                rj = np.tile(rrows.astype(np.int64), len(lrows))
                chunks.append(li * n_right + rj)
    else:
        n = len(index.left_ids)
        for lrows, _ in table.values():
            b = len(lrows)
            if b >= 2:
                rows = np.sort(lrows.astype(np.int64))
                ii, jj = np.triu_indices(b, k=1)
                chunks.append(rows[ii] * n + rows[jj])
    if not chunks:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(chunks)


def candidate_pair_codes(index: LshIndex) -> np.ndarray:
    """Distinct candidate pairs over all tables, as sorted encoded int64."""
    per_table = [_pair_codes_for_table(index, t) for t in index.buckets]
    allc = np.concatenate(per_table) if per_table else np.zeros(0, dtype=np.int64)
    return np.unique(allc)


def decode_pair_codes(index: LshIndex, codes: np.ndarray) -> list[tuple[str, str]]:
    if index.two_sided:
        n_right = len(index.right_ids)
        li, rj = codes // n_right, codes % n_right
        return [(index.left_ids[a], index.right_ids[b]) for a, b in zip(li, rj)]
    n = len(index.left_ids)
    ii, jj = codes // n, codes % n
    out = []
    for a, b in zip(ii, jj):
        ida, idb = index.left_ids[a], index.left_ids[b]
        out.append((ida, idb) if ida <= idb else (idb, ida))
    return out


def block_pairs(index: LshIndex) -> list[tuple[str, str]]:
    """Distinct within-bucket candidate pairs over all tables.

    Two-sided indexes emit cross-side (left_id, right_id) pairs only;
    single-sided indexes emit lexicographically ordered id pairs.  Every
    pair appears once no matter how many tables co-locate it.
    """
    return decode_pair_codes(index, candidate_pair_codes(index))


def _probe_masks(k: int, radius: int):
    """Packed XOR masks by increasing Hamming distance, low bits first."""
    yield 0
    for r in range(1, radius + 1):
        for bits in combinations(range(k), r):
            mask = 0
            for b in bits:
                mask |= 1 << b
            yield mask


def candidates_multiprobe(
    index: LshIndex,
    vector: np.ndarray,
    radius: int,
    side: str | None = None,
    exclude_id: str | None = None,
) -> set[str]:
    """Occupants of every bucket within Hamming distance <= radius of the
    query's code, unioned over tables.

    `side` restricts results to "left" or "right" occupants (two-sided
    indexes); `exclude_id` drops the query tuple itself.
    """
    if radius > index.config.k:
        raise ContractError("probe radius exceeds code length")
    vector = np.asarray(vector, dtype=float)
    found: set[str] = set()
    for t in range(index.config.l):
        code = int(_pack_codes(vector[None, :], index.family.normals[t])[0])
        for mask in _probe_masks(index.config.k, radius):
            hit = index.buckets[t].get(code ^ mask)
            if hit is None:
                continue
            lrows, rrows = hit
            if side in (None, "left"):
                found.update(index.left_ids[r] for r in lrows)
            if side in (None, "right") and index.right_ids is not None:
                found.update(index.right_ids[r] for r in rrows)
    found.discard(exclude_id)
    return found


def topn_filter(
    query: np.ndarray, candidates, n: int
) -> list[str]:
    """Top-n candidate ids by cosine to the query; ties by ascending id.

    `candidates` yields (id, vector-or-TupleDR) pairs.
    """
    if n < 1:
        raise ContractError("n must be >= 1")
    query = np.asarray(query, dtype=float)
    scored = []
    for cid, vec in candidates:
        v = vec.vector if hasattr(vec, "vector") else np.asarray(vec, dtype=float)
        scored.append((-safe_cosine(query, v), cid))
    scored.sort()
    return [cid for _, cid in scored[:n]]


def tune_params(goal: TuningGoal) -> tuple[int, int]:
    """Analytic (K, L) for target collision probabilities and table size."""
    k = max(1, math.ceil(math.log(goal.n) / math.log(1.0 / goal.p2) - 1e-12))
    rho = math.log(1.0 / goal.p1) / math.log(1.0 / goal.p2)
    l = max(1, math.ceil(goal.n**rho - 1e-12))
    return k, l


def save_index(index: LshIndex, path: str) -> None:
    """Binary snapshot; reloading rebuilds an index with identical buckets."""
    meta = {
        "tag": INDEX_FORMAT_TAG,
        "config": {
            "k": index.config.k, "l": index.config.l,
            "probe_radius": index.config.probe_radius,
            "top_n": index.config.top_n, "seed": index.config.seed,
        },
        "family_seed": index.family.seed,
        "dimension": index.family.dimension,
        "two_sided": index.two_sided,
    }
    arrays = {
        "meta": np.array(json.dumps(meta)),
        "normals": index.family.normals,
        "left_ids": np.array(index.left_ids, dtype=str),
        "left_codes": index.left_codes,
    }
    if index.two_sided:
        arrays["right_ids"] = np.array(index.right_ids, dtype=str)
        arrays["right_codes"] = index.right_codes
    np.savez_compressed(path, **arrays)


def load_index(path: str) -> LshIndex:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("tag") != INDEX_FORMAT_TAG:
            raise IntegrityError(f"not an index snapshot: {meta.get('tag')!r}")
        cfg = LshConfig(**meta["config"])
        family = HyperplaneFamily(
            dimension=meta["dimension"], normals=data["normals"],
            seed=meta["family_seed"],
        )
        left_ids = [str(s) for s in data["left_ids"]]
        left_codes = data["left_codes"]
        right_ids = right_codes = None
        if meta["two_sided"]:
            right_ids = [str(s) for s in data["right_ids"]]
            right_codes = data["right_codes"]
    index = LshIndex(
        family=family, config=cfg,
        left_ids=left_ids, left_codes=left_codes,
        right_ids=right_ids, right_codes=right_codes,
        buckets=[],
    )
    _rebuild_buckets(index)
    return index


def _rebuild_buckets(index: LshIndex) -> None:
    empty = np.zeros(0, dtype=np.int64)
    index.buckets = []
    for t in range(index.config.l):
        table: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        for key, rows in _group_rows(index.left_codes[t]).items():
            table[key] = (rows, empty)
        if index.right_codes is not None:
            for key, rows in _group_rows(index.right_codes[t]).items():
                lrows, _ = table.get(key, (empty, empty))
                table[key] = (lrows, rows)
        index.buckets.append(table)

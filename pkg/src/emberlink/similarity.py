"""Similarity vectors between pairs of tuple representations.

Concatenated (per-attribute) representations are compared with one
cosine per attribute slice; composed representations with element-wise
difference, Hadamard product, or both concatenated.
"""

from __future__ import annotations

import numpy as np

from .compose import CONCATENATED, COMPOSED, TupleDR
from .errors import ContractError

COSINE = "cosine"
DIFFERENCE = "difference"
HADAMARD = "hadamard"
DIFF_HADAMARD = "diff_hadamard"
SIMILARITY_KINDS = (COSINE, DIFFERENCE, HADAMARD, DIFF_HADAMARD)


def safe_cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity, with 0.0 when either vector is all zeros."""
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def _require_concatenated(a: TupleDR, b: TupleDR) -> None:
    if a.kind != CONCATENATED or b.kind != CONCATENATED:
        raise ContractError("per-attribute cosine needs concatenated DRs")
    if (a.num_attributes, a.dim_per_attribute) != (b.num_attributes, b.dim_per_attribute):
        raise ContractError(
            f"layout mismatch: ({a.num_attributes},{a.dim_per_attribute}) vs "
            f"({b.num_attributes},{b.dim_per_attribute})"
        )


def _require_same_length(a: TupleDR, b: TupleDR) -> None:
    if a.kind != COMPOSED or b.kind != COMPOSED:
        raise ContractError("difference/hadamard need composed DRs")
    if a.vector.shape != b.vector.shape:
        raise ContractError(
            f"length mismatch: {a.vector.size} vs {b.vector.size}"
        )


def sim_cosine_per_attr(a: TupleDR, b: TupleDR) -> np.ndarray:
    """One cosine per d-dimensional attribute slice; m components."""
    _require_concatenated(a, b)
    return np.array(
        [
            safe_cosine(a.attribute_slice(i), b.attribute_slice(i))
            for i in range(a.num_attributes)
        ]
    )


def sim_difference(a: TupleDR, b: TupleDR) -> np.ndarray:
    _require_same_length(a, b)
    return a.vector - b.vector


def sim_hadamard(a: TupleDR, b: TupleDR) -> np.ndarray:
    _require_same_length(a, b)
    return a.vector * b.vector


def similarity_vector(a: TupleDR, b: TupleDR, kind: str) -> np.ndarray:
    if kind == COSINE:
        return sim_cosine_per_attr(a, b)
    if kind == DIFFERENCE:
        return sim_difference(a, b)
    if kind == HADAMARD:
        return sim_hadamard(a, b)
    if kind == DIFF_HADAMARD:
        return np.concatenate([sim_difference(a, b), sim_hadamard(a, b)])
    raise ContractError(f"unknown similarity kind {kind!r}")


def similarity_dim(kind: str, num_attributes: int, composed_dim: int) -> int:
    """Length of the similarity vector a given configuration produces."""
    if kind == COSINE:
        return num_attributes
    if kind in (DIFFERENCE, HADAMARD):
        return composed_dim
    if kind == DIFF_HADAMARD:
        return 2 * composed_dim
    raise ContractError(f"unknown similarity kind {kind!r}")


def whole_tuple_cosine(a: TupleDR, b: TupleDR) -> float:
    """Cosine of the full vectors (used for negative-sampling thresholds)."""
    if a.vector.shape != b.vector.shape:
        raise ContractError("whole-tuple cosine needs equal-length DRs")
    return safe_cosine(a.vector, b.vector)

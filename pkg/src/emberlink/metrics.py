"""Blocking and matching quality metrics.

Reduction ratio here follows the compared/total convention in which
SMALLER is better (it is really a comparison ratio, and serializes under
both names).  Pair completeness is the fraction of true duplicate pairs
that survive blocking.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import PreconditionError

Pair = tuple[str, str]


def normalize_pairs(pairs, two_sided: bool = True) -> set[Pair]:
    """Canonical pair set: (left, right) as given when two-sided, else
    lexicographically ordered so (a, b) == (b, a)."""
    out = set()
    for a, b in pairs:
        if two_sided or a <= b:
            out.add((a, b))
        else:
            out.add((b, a))
    return out


@dataclass
class BlockingReport:
    pair_completeness: float
    reduction_ratio: float
    compared_pairs: int
    total_pairs: int
    covered_duplicates: int
    total_duplicates: int
    occupancy: list[dict[int, int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "pair_completeness": self.pair_completeness,
            # the classic convention is 1 - x; this field is compared/total
            "comparison_ratio": self.reduction_ratio,
            "reduction_ratio": self.reduction_ratio,
            "compared_pairs": self.compared_pairs,
            "total_pairs": self.total_pairs,
            "covered_duplicates": self.covered_duplicates,
            "total_duplicates": self.total_duplicates,
            "occupancy": [
                {str(k): v for k, v in sorted(h.items())} for h in self.occupancy
            ],
        }

    def to_kv_lines(self) -> str:
        d = self.to_dict()
        lines = [f"{k}={d[k]}" for k in (
            "pair_completeness", "comparison_ratio", "reduction_ratio",
            "compared_pairs", "total_pairs", "covered_duplicates", "total_duplicates",
        )]
        for t, hist in enumerate(self.occupancy):
            packed = ",".join(f"{size}:{cnt}" for size, cnt in sorted(hist.items()))
            lines.append(f"occupancy.table{t}={packed}")
        return "\n".join(lines) + "\n"


@dataclass
class MatchReport:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int

    def to_dict(self) -> dict:
        return {
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
        }

    def to_kv_lines(self) -> str:
        d = self.to_dict()
        return "\n".join(f"{k}={v}" for k, v in d.items()) + "\n"


def pair_completeness(
    candidates, truth, two_sided: bool = True
) -> tuple[float, int, int]:
    """(ratio, covered, total): fraction of true pairs present among candidates."""
    truth_set = normalize_pairs(truth, two_sided)
    if not truth_set:
        raise PreconditionError("pair completeness needs a non-empty truth set")
    cand_set = normalize_pairs(candidates, two_sided)
    covered = len(cand_set & truth_set)
    return covered / len(truth_set), covered, len(truth_set)


def total_pair_count(n_left: int, n_right: int | None = None) -> int:
    if n_left < 1 or (n_right is not None and n_right < 1):
        raise PreconditionError("table sizes must be >= 1")
    if n_right is None:
        return n_left * (n_left - 1) // 2
    return n_left * n_right


def reduction_ratio(candidates, n_left: int, n_right: int | None = None) -> float:
    """Compared pairs over all possible pairs; smaller means more reduction."""
    total = total_pair_count(n_left, n_right)
    count = len(candidates) if hasattr(candidates, "__len__") else sum(1 for _ in candidates)
    return count / total if total else 0.0


def blocking_report(
    candidates,
    truth,
    n_left: int,
    n_right: int | None = None,
    occupancy: list[dict[int, int]] | None = None,
) -> BlockingReport:
    cand_set = normalize_pairs(candidates, two_sided=n_right is not None)
    total = total_pair_count(n_left, n_right)
    if truth:
        pc, covered, n_truth = pair_completeness(
            cand_set, truth, two_sided=n_right is not None
        )
    else:
        pc, covered, n_truth = 0.0, 0, 0
    return BlockingReport(
        pair_completeness=pc,
        reduction_ratio=len(cand_set) / total if total else 0.0,
        compared_pairs=len(cand_set),
        total_pairs=total,
        covered_duplicates=covered,
        total_duplicates=n_truth,
        occupancy=occupancy or [],
    )


def precision_recall_f1(
    predicted_matches,
    truth,
    universe_size: int | None = None,
    two_sided: bool = True,
) -> MatchReport:
    """Confusion-matrix metrics over the evaluated pair universe.

    True pairs never predicted (including pairs blocked away and never
    compared) count as false negatives, so blocking losses depress recall.
    `universe_size` (all possible pairs) is only needed for the TN count.
    """
    pred = normalize_pairs(predicted_matches, two_sided)
    true = normalize_pairs(truth, two_sided)
    tp = len(pred & true)
    fp = len(pred - true)
    fn = len(true - pred)
    tn = (universe_size - tp - fp - fn) if universe_size is not None else 0
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return MatchReport(
        precision=precision, recall=recall, f1=f1, tp=tp, fp=fp, fn=fn, tn=tn
    )


def write_report(report, path_prefix: str) -> None:
    """Write `<prefix>.txt` (key=value lines) and `<prefix>.json`."""
    with open(path_prefix + ".txt", "w", encoding="utf-8") as f:
        f.write(report.to_kv_lines())
    with open(path_prefix + ".json", "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")

"""Clustering evaluation: ACC (optimal label matching), NMI, ARI.

All three are computed from the contingency table between two labelings
and are invariant to relabeling either side.  ACC maximizes the matched
mass over one-to-one cluster matchings (rectangular tables allowed;
unmatched clusters contribute nothing).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, log, sqrt

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ParamError


@dataclass
class Labeling:
    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.intp)
        if self.labels.ndim != 1 or self.labels.size < 1:
            raise ParamError("labels must be a nonempty 1-D integer array")

    @property
    def n(self) -> int:
        return self.labels.size


@dataclass
class ContingencyTable:
    counts: np.ndarray            # (R, C) nonnegative ints
    row_marginals: np.ndarray
    col_marginals: np.ndarray
    n: int


def _as_labels(x) -> np.ndarray:
    if isinstance(x, Labeling):
        return x.labels
    return Labeling(np.asarray(x)).labels


def contingency_table(truth, pred) -> ContingencyTable:
    t = _as_labels(truth)
    p = _as_labels(pred)
    if t.size != p.size:
        raise ParamError(f"label length mismatch: {t.size} vs {p.size}")
    _, ti = np.unique(t, return_inverse=True)
    _, pi = np.unique(p, return_inverse=True)
    R = int(ti.max()) + 1
    C = int(pi.max()) + 1
    counts = np.zeros((R, C), dtype=np.int64)
    np.add.at(counts, (ti, pi), 1)
    return ContingencyTable(
        counts=counts,
        row_marginals=counts.sum(axis=1),
        col_marginals=counts.sum(axis=0),
        n=t.size,
    )


def linear_assignment(cost: np.ndarray, mode: str = "min"):
    """Optimal one-to-one matching of rows to columns.

    Rectangular matrices match min(R, C) pairs.  Returns the matching as a
    list of (row, col) pairs sorted by row, plus the objective value.
    """
    cost = np.atleast_2d(np.asarray(cost, dtype=np.float64))
    if cost.size == 0:
        raise ParamError("empty cost matrix")
    if not np.isfinite(cost).all():
        raise ParamError("cost matrix must be finite")
    if mode not in ("min", "max"):
        raise ParamError(f"mode must be 'min' or 'max', got {mode!r}")
    rows, cols = linear_sum_assignment(cost, maximize=(mode == "max"))
    objective = float(cost[rows, cols].sum())
    return list(zip(rows.tolist(), cols.tolist())), objective


def accuracy(truth, pred) -> float:
    """Fraction of documents matched under the best cluster permutation."""
    table = contingency_table(truth, pred)
    _, matched = linear_assignment(table.counts.astype(np.float64), mode="max")
    return matched / table.n


def _entropy(marginals: np.ndarray, n: int) -> float:
    p = marginals[marginals > 0] / n
    return float(-(p * np.log(p)).sum())


def _canonical(labels: np.ndarray) -> np.ndarray:
    """Relabel by order of first appearance (partition-equality canon)."""
    seen: dict[int, int] = {}
    return np.array([seen.setdefault(int(v), len(seen)) for v in labels], dtype=np.intp)


def _same_partition(truth, pred) -> bool:
    t = _as_labels(truth)
    p = _as_labels(pred)
    return bool(np.array_equal(_canonical(t), _canonical(p)))


def nmi(truth, pred) -> float:
    """Mutual information normalized by the geometric mean of the entropies.

    If either labeling has zero entropy the ratio is undefined; by
    convention the result is 1.0 for identical partitions and 0.0
    otherwise.
    """
    table = contingency_table(truth, pred)
    ht = _entropy(table.row_marginals, table.n)
    hp = _entropy(table.col_marginals, table.n)
    if ht == 0.0 or hp == 0.0:
        return 1.0 if _same_partition(truth, pred) else 0.0
    n = table.n
    mi = 0.0
    nz = np.argwhere(table.counts > 0)
    for r, c in nz:
        nij = table.counts[r, c]
        mi += (nij / n) * log(n * nij / (table.row_marginals[r] * table.col_marginals[c]))
    mi = max(mi, 0.0)
    return mi / sqrt(ht * hp)


def ari(truth, pred) -> float:
    """Adjusted Rand index (pair-counting, chance-corrected); may be negative."""
    table = contingency_table(truth, pred)
    if table.n < 2:
        raise ParamError("ARI requires at least 2 samples")
    sum_ij = sum(comb(int(v), 2) for v in table.counts.ravel())
    sum_a = sum(comb(int(v), 2) for v in table.row_marginals)
    sum_b = sum(comb(int(v), 2) for v in table.col_marginals)
    pairs = comb(table.n, 2)
    expected = sum_a * sum_b / pairs
    maximum = 0.5 * (sum_a + sum_b)
    if maximum == expected:
        return 1.0
    return (sum_ij - expected) / (maximum - expected)

"""Hierarchical clustering with localized proposals, and prefix-code indexes.

Recursing into a sub-cluster re-targets the proposal to the sub-cluster's
documents (phi tilde), then bootstraps the already-scored texts with
weights r_j = (phi_tilde_j / phi_j)^alpha instead of generating and
scoring new ones.  The resulting tree yields one digit per level for each
document, plus a within-leaf ordinal: the document's semantic ID for
generative retrieval.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import (
    LogProbMatrix,
    Params,
    Proposal,
    compute_weights,
    estimate_proposal,
    preprocess,
)
from .engine import RunResult, clustering
from .errors import DegenerateWeightsError, ParamError


@dataclass
class ResampleWeights:
    r: np.ndarray
    normalized_r: np.ndarray


@dataclass
class PrefixCode:
    doc_id: str
    digits: tuple[int, ...]       # cluster index per level
    ordinal: int                  # position within the leaf

    @property
    def code(self) -> tuple[int, ...]:
        return self.digits + (self.ordinal,)

    def as_string(self, sep: str = ".") -> str:
        return sep.join(str(d) for d in self.code)


@dataclass
class HierNode:
    depth: int
    doc_rows: np.ndarray          # original row indices, ascending
    children: list["HierNode"] = field(default_factory=list)
    is_leaf: bool = False
    child_digits: list[int] = field(default_factory=list)  # cluster index per child

    @property
    def size(self) -> int:
        return self.doc_rows.size


def resample_weights(phi: Proposal, phi_local: Proposal, alpha: float) -> ResampleWeights:
    """r_j = (phi_local_j / phi_j)^alpha, plus its normalization."""
    if phi.n_texts != phi_local.n_texts:
        raise ParamError("proposals cover different numbers of texts")
    if not 0.0 <= alpha <= 1.0:
        raise ParamError(f"alpha must be in [0, 1], got {alpha}")
    r = np.exp(alpha * (phi_local.log_phi - phi.log_phi))
    total = r.sum()
    if total <= 0.0 or not np.isfinite(total):
        raise DegenerateWeightsError("all resampling weights underflowed to zero")
    return ResampleWeights(r=r, normalized_r=r / total)


def bootstrap_texts(r: ResampleWeights, J: int, rng: np.random.Generator) -> np.ndarray:
    """J i.i.d. column indices drawn from Categorical(normalized_r)."""
    return rng.choice(r.normalized_r.size, size=J, replace=True, p=r.normalized_r)


def cluster_subset(
    P: LogProbMatrix,
    rows: np.ndarray,
    params: Params,
    parent_phi: Proposal,
    rng: np.random.Generator,
    *,
    init: str = "random",
    localized: bool = True,
) -> tuple[RunResult, np.ndarray]:
    """Cluster the documents in ``rows`` with a sub-cluster-local proposal.

    Estimates phi_tilde on the subset, resamples J columns of P with
    replacement by the ratio weights, forms the localized importance
    weights, and runs the CLUSTERING loop ``params.restarts`` times
    (fresh seeds from ``rng``), keeping the lowest-distortion run.

    With ``localized=False`` (the ablation) the subset rows of P are
    clustered under the parent proposal directly, without resampling.

    Returns the winning run and the bootstrapped column indices.
    """
    rows = np.asarray(rows, dtype=np.intp)
    if rows.size < params.K:
        raise ParamError(f"subset of {rows.size} rows cannot form K={params.K} clusters")
    J = params.J if params.J is not None else P.n_texts

    if localized and params.alpha > 0.0:
        phi_local = estimate_proposal(P, params.alpha, rows=rows)
        rw = resample_weights(parent_phi, phi_local, params.alpha)
        cols = bootstrap_texts(rw, J, rng)
        sub = LogProbMatrix.from_array(
            P.values[np.ix_(rows, cols)],
            doc_ids=[P.doc_ids[i] for i in rows],
            text_ids=[P.text_ids[j] for j in cols],
        )
        phi_sub = Proposal(log_phi=phi_local.log_phi[cols])
    elif localized:                      # alpha == 0: weights are all ones
        cols = bootstrap_texts(
            ResampleWeights(r=np.ones(P.n_texts), normalized_r=np.full(P.n_texts, 1.0 / P.n_texts)),
            J, rng,
        )
        sub = LogProbMatrix.from_array(P.values[np.ix_(rows, cols)])
        phi_sub = Proposal(log_phi=np.zeros(J))
    else:
        cols = np.arange(P.n_texts)
        sub = LogProbMatrix.from_array(
            P.values[rows],
            doc_ids=[P.doc_ids[i] for i in rows],
            text_ids=list(P.text_ids),
        )
        phi_sub = parent_phi
    W_sub = compute_weights(sub, phi_sub, params.alpha)

    best = None
    for _ in range(params.restarts):
        run_rng = np.random.default_rng(rng.integers(2**63))
        assignment, centroids = clustering(
            sub, W_sub, params.K, run_rng, init=init, max_iters=params.max_iters
        )
        if best is None or assignment.total_distortion < best[0].total_distortion:
            best = (assignment, centroids)
    result = RunResult(assignment=best[0], centroids=best[1], seed=params.seed)
    return result, cols


def build_tree(
    P: LogProbMatrix,
    params: Params,
    leaf_threshold: Optional[int] = None,
    *,
    init: str = "random",
    localized: bool = True,
    clip: bool = True,
    naive: bool = False,
) -> HierNode:
    """Recursive hierarchical clustering of the whole matrix.

    Preprocessing (clipping, global proposal, weights) happens once; each
    node below the root re-localizes the proposal per ``cluster_subset``.
    A node becomes a leaf when it holds at most max(leaf_threshold, K)
    documents.  Each node's RNG stream is derived from (seed, node path),
    so the tree is reproducible regardless of traversal order.
    """
    if leaf_threshold is None:
        leaf_threshold = params.K
    if leaf_threshold < 1:
        raise ParamError(f"leaf_threshold must be >= 1, got {leaf_threshold}")
    params.validate()
    pre = preprocess(P, params, clip=clip, naive=naive)
    stop = max(leaf_threshold, params.K)

    def recurse(rows: np.ndarray, depth: int, path: tuple[int, ...]) -> HierNode:
        node = HierNode(depth=depth, doc_rows=rows)
        if rows.size <= stop:
            node.is_leaf = True
            return node
        rng = np.random.default_rng(np.random.SeedSequence(params.seed, spawn_key=path))
        result, _ = cluster_subset(
            pre.P, rows, params, pre.phi, rng, init=init, localized=localized
        )
        labels = result.assignment.labels
        groups = [rows[labels == k] for k in range(params.K)]
        nonempty = [k for k, g in enumerate(groups) if g.size > 0]
        if len(nonempty) <= 1:
            node.is_leaf = True           # cannot split further (duplicate rows)
            return node
        for k in nonempty:
            node.children.append(recurse(groups[k], depth + 1, path + (k,)))
            node.child_digits.append(k)
        return node

    return recurse(np.arange(P.n_docs, dtype=np.intp), 0, ())


def assign_prefix_codes(tree: HierNode, doc_ids: Optional[list[str]] = None) -> list[PrefixCode]:
    """Root-to-leaf digit strings plus within-leaf ordinals, one per document.

    Ordinals follow ascending original row order inside each leaf; codes
    come back sorted by original row index.
    """
    codes: dict[int, PrefixCode] = {}

    def walk(node: HierNode, digits: tuple[int, ...]) -> None:
        if node.is_leaf:
            for ordinal, row in enumerate(np.sort(node.doc_rows)):
                did = doc_ids[row] if doc_ids is not None else str(row)
                codes[int(row)] = PrefixCode(doc_id=did, digits=digits, ordinal=ordinal)
            return
        for digit, child in zip(node.child_digits, node.children):
            walk(child, digits + (digit,))

    walk(tree, ())
    return [codes[row] for row in sorted(codes)]


def tree_summary(tree: HierNode) -> dict:
    def walk(node: HierNode) -> dict:
        entry = {"depth": node.depth, "n_docs": int(node.size), "leaf": node.is_leaf}
        if not node.is_leaf:
            entry["children"] = {
                str(d): walk(c) for d, c in zip(node.child_digits, node.children)
            }
        return entry

    depths = []

    def leaves(node: HierNode):
        if node.is_leaf:
            depths.append(node.depth)
        for c in node.children:
            leaves(c)

    leaves(tree)
    return {
        "n_docs": int(tree.size),
        "max_depth": max(depths) if depths else 0,
        "n_leaves": len(depths),
        "tree": walk(tree),
    }


def write_codes_jsonl(codes: list[PrefixCode], path) -> None:
    """One record per document: {"doc_id", "code": [d1, ..., ordinal]}."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for c in codes:
            fh.write(json.dumps({"doc_id": c.doc_id, "code": list(c.code)}) + "\n")

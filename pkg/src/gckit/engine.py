"""Flat generative clustering by regularized importance sampling.

The distortion between document i and centroid c is the RIS estimate of
KL[p(Y|x_i) || p(Y|k)]:

    d(i, c) = (1/J) * sum_j W_ij * (log P_ij - log c_j)

which may be negative.  The engine alternates argmin assignment with the
closed-form centroid update (column sums of W over cluster members,
normalized to 1) until the total distortion stops improving, then repeats
across seeds and keeps the lowest-distortion run.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import LogProbMatrix, Params, Preprocessed, WeightMatrix, preprocess
from .errors import ParamError

logger = logging.getLogger(__name__)

CONVERGENCE_RTOL = 1e-10


@dataclass
class CentroidSet:
    """K centroid vectors over the J texts; engine-produced rows sum to 1."""

    centroids: np.ndarray         # (K, J) float64

    def __post_init__(self):
        self.centroids = np.ascontiguousarray(self.centroids, dtype=np.float64)
        if self.centroids.ndim != 2:
            raise ParamError("centroids must be 2-D")

    @property
    def K(self) -> int:
        return self.centroids.shape[0]

    @property
    def n_texts(self) -> int:
        return self.centroids.shape[1]


@dataclass
class Assignment:
    labels: np.ndarray            # (n,) int
    per_doc_distortion: np.ndarray
    total_distortion: float
    iterations: int
    converged: bool
    history: list[float] = field(default_factory=list)  # total per iteration


@dataclass
class RunResult:
    assignment: Assignment
    centroids: CentroidSet
    seed: int


def _normalize_rows(rows: np.ndarray) -> np.ndarray:
    return rows / rows.sum(axis=1, keepdims=True)


def distortion_row(i: int, c_k: np.ndarray, P: LogProbMatrix, W: WeightMatrix) -> float:
    """RIS distortion of one document against one centroid vector."""
    c_k = np.asarray(c_k, dtype=np.float64)
    if np.any(c_k <= 0.0):
        raise ParamError("centroid has a zero entry where the weight is positive")
    J = P.n_texts
    return float(np.dot(W.values[i], P.values[i] - np.log(c_k)) / J)


def _distortion_matrix(W: np.ndarray, log_c: np.ndarray, row_self: np.ndarray) -> np.ndarray:
    """n x K matrix of distortions; row_self precomputes sum_j W_ij logP_ij."""
    J = log_c.shape[1]
    return (row_self[:, None] - W @ log_c.T) / J


def assign_all(
    P: LogProbMatrix, W: WeightMatrix, centroids: CentroidSet
) -> tuple[np.ndarray, np.ndarray]:
    """argmin-distortion labels (ties to the lowest cluster index)."""
    if np.any(centroids.centroids <= 0.0):
        raise ParamError("centroid has a zero entry where the weight is positive")
    row_self = np.einsum("ij,ij->i", W.values, P.values)
    D = _distortion_matrix(W.values, np.log(centroids.centroids), row_self)
    labels = np.argmin(D, axis=1)
    per_doc = D[np.arange(D.shape[0]), labels]
    return labels, per_doc


def update_centroids(
    W: WeightMatrix,
    labels: np.ndarray,
    K: int,
    per_doc_distortion: Optional[np.ndarray] = None,
) -> CentroidSet:
    """Optimal centroids: per-cluster column sums of W, normalized to 1.

    A cluster that lost all members is reseeded from the not-yet-donated
    document with the largest current distortion (its normalized W row);
    this requires ``per_doc_distortion``.
    """
    sums = np.zeros((K, W.n_texts))
    for k in range(K):
        members = labels == k
        if members.any():
            sums[k] = W.values[members].sum(axis=0)
    empty = [k for k in range(K) if not (labels == k).any()]
    if empty:
        if per_doc_distortion is None:
            raise ParamError(
                "empty cluster encountered and no per-document distortions "
                "were supplied for the repair policy"
            )
        donors = np.argsort(per_doc_distortion)[::-1]
        for k, donor in zip(empty, donors):
            sums[k] = W.values[donor]
    return CentroidSet(centroids=_normalize_rows(sums))


def init_random(W: WeightMatrix, K: int, rng: np.random.Generator) -> CentroidSet:
    """K distinct rows of W chosen uniformly, each normalized to sum 1."""
    if K > W.n_docs:
        raise ParamError(f"K={K} exceeds n_docs={W.n_docs}")
    idx = rng.choice(W.n_docs, size=K, replace=False)
    return CentroidSet(centroids=_normalize_rows(W.values[idx]))


def init_kmeanspp(
    P: LogProbMatrix, W: WeightMatrix, K: int, rng: np.random.Generator
) -> CentroidSet:
    """k-means++-style seeding on the RIS distortion.

    The distortion can be negative, so at every step the per-document
    distance to the nearest chosen centroid is offset by its global
    minimum before the d^2-proportional draw.  A document sitting at the
    minimum thus has selection probability exactly zero.
    """
    n = W.n_docs
    if K > n:
        raise ParamError(f"K={K} exceeds n_docs={n}")
    chosen = [int(rng.integers(n))]
    centroids = [_normalize_rows(W.values[chosen[0]][None, :])[0]]
    row_self = np.einsum("ij,ij->i", W.values, P.values)
    J = P.n_texts
    d = (row_self - W.values @ np.log(centroids[0])) / J
    while len(chosen) < K:
        offset = d - d.min()
        total = float((offset**2).sum())
        if total > 0.0:
            probs = offset**2 / total
            nxt = int(rng.choice(n, p=probs))
        else:
            # all documents equidistant: uniform among the unchosen
            remaining = np.setdiff1d(np.arange(n), np.array(chosen))
            nxt = int(rng.choice(remaining))
        chosen.append(nxt)
        c = _normalize_rows(W.values[nxt][None, :])[0]
        centroids.append(c)
        d = np.minimum(d, (row_self - W.values @ np.log(c)) / J)
    return CentroidSet(centroids=np.stack(centroids))


def clustering(
    P: LogProbMatrix,
    W: WeightMatrix,
    K: int,
    rng: np.random.Generator,
    *,
    init: str = "random",
    max_iters: int = 300,
    rtol: float = CONVERGENCE_RTOL,
) -> tuple[Assignment, CentroidSet]:
    """The inner CLUSTERING loop on an already-preprocessed (P, W) pair.

    Each iteration assigns, updates the centroids, then evaluates the total
    distortion under the updated centroids; the loop stops once the total
    fails to improve by more than ``rtol`` relative (or at ``max_iters``).
    """
    if init == "random":
        centroids = init_random(W, K, rng)
    elif init == "kmeanspp":
        centroids = init_kmeanspp(P, W, K, rng)
    else:
        raise ParamError(f"unknown init {init!r}")

    row_self = np.einsum("ij,ij->i", W.values, P.values)
    J = P.n_texts
    n = P.n_docs
    prev = np.inf
    history: list[float] = []
    labels = np.zeros(n, dtype=np.intp)
    per_doc = np.zeros(n)
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        D = _distortion_matrix(W.values, np.log(centroids.centroids), row_self)
        labels = np.argmin(D, axis=1)
        assign_cost = D[np.arange(n), labels]
        centroids = update_centroids(W, labels, K, per_doc_distortion=assign_cost)
        per_doc = (row_self - np.einsum(
            "ij,ij->i", W.values, np.log(centroids.centroids)[labels]
        )) / J
        total = float(per_doc.sum())
        history.append(total)
        logger.info("iter %d: total distortion %.10g", iterations, total)
        if np.isfinite(prev) and prev - total <= rtol * abs(prev):
            converged = True
            break
        prev = total
    assignment = Assignment(
        labels=labels,
        per_doc_distortion=per_doc,
        total_distortion=history[-1],
        iterations=iterations,
        converged=converged,
        history=history,
    )
    return assignment, centroids


def cluster(
    P: LogProbMatrix,
    params: Params,
    init: str = "random",
    *,
    clip: bool = True,
    naive: bool = False,
    pre: Optional[Preprocessed] = None,
) -> RunResult:
    """One full run: preprocessing + CLUSTERING, seeded by params.seed."""
    params.validate(n_docs=P.n_docs)
    if pre is None:
        pre = preprocess(P, params, clip=clip, naive=naive)
    rng = np.random.default_rng(params.seed)
    assignment, centroids = clustering(
        pre.P, pre.W, params.K, rng, init=init, max_iters=params.max_iters
    )
    return RunResult(assignment=assignment, centroids=centroids, seed=params.seed)


def cluster_best_of(
    P: LogProbMatrix,
    params: Params,
    init: str = "random",
    *,
    clip: bool = True,
    naive: bool = False,
    threads: int = 1,
) -> RunResult:
    """Run with seeds seed..seed+restarts-1 and keep the lowest distortion.

    Ties go to the lowest seed.  Preprocessing is shared across restarts;
    restarts may execute on a thread pool without affecting the result.
    """
    params.validate(n_docs=P.n_docs)
    pre = preprocess(P, params, clip=clip, naive=naive)
    seeds = [params.seed + r for r in range(params.restarts)]

    def one(seed: int) -> RunResult:
        p = Params(
            K=params.K, alpha=params.alpha, J=params.J, restarts=1,
            clip_sigmas=params.clip_sigmas, max_iters=params.max_iters, seed=seed,
        )
        return cluster(P, p, init, pre=pre)

    if threads > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(one, seeds))
    else:
        runs = [one(s) for s in seeds]
    best = runs[0]
    for run in runs[1:]:
        if run.assignment.total_distortion < best.assignment.total_distortion:
            best = run
    return best


def kmeans_rows_baseline(M: np.ndarray, K: int, params: Params) -> RunResult:
    """Euclidean k-means (Lloyd) on raw matrix rows, same restart protocol.

    Comparison utility: distortion is the sum of squared distances to the
    assigned centroid.  Returns the best of ``params.restarts`` runs.
    """
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    n = M.shape[0]
    if K > n:
        raise ParamError(f"K={K} exceeds number of rows {n}")

    def one(seed: int) -> RunResult:
        rng = np.random.default_rng(seed)
        centers = M[rng.choice(n, size=K, replace=False)].copy()
        prev = np.inf
        history: list[float] = []
        labels = np.zeros(n, dtype=np.intp)
        converged = False
        iterations = 0
        for iterations in range(1, params.max_iters + 1):
            d2 = ((M[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            labels = np.argmin(d2, axis=1)
            assign_cost = d2[np.arange(n), labels]
            for k in range(K):
                members = labels == k
                if members.any():
                    centers[k] = M[members].mean(axis=0)
            empty = [k for k in range(K) if not (labels == k).any()]
            if empty:
                donors = np.argsort(assign_cost)[::-1]
                for k, donor in zip(empty, donors):
                    centers[k] = M[donor]
            per_doc = ((M - centers[labels]) ** 2).sum(axis=1)
            total = float(per_doc.sum())
            history.append(total)
            if np.isfinite(prev) and prev - total <= CONVERGENCE_RTOL * abs(prev):
                converged = True
                break
            prev = total
        assignment = Assignment(
            labels=labels,
            per_doc_distortion=per_doc,
            total_distortion=history[-1],
            iterations=iterations,
            converged=converged,
            history=history,
        )
        return RunResult(assignment=assignment, centroids=CentroidSet(centers), seed=seed)

    best = None
    for r in range(params.restarts):
        run = one(params.seed + r)
        if best is None or run.assignment.total_distortion < best.assignment.total_distortion:
            best = run
    return best


def write_assignment_jsonl(result: RunResult, doc_ids: list[str], path) -> None:
    """One record per document: {"doc_id", "cluster", "distortion"}."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for did, label, dist in zip(
            doc_ids, result.assignment.labels, result.assignment.per_doc_distortion
        ):
            fh.write(json.dumps(
                {"doc_id": did, "cluster": int(label), "distortion": float(dist)}
            ) + "\n")


def write_run_metadata(result: RunResult, params: Params, path, extra: Optional[dict] = None) -> None:
    meta = {
        "seed": int(result.seed),
        "iterations": int(result.assignment.iterations),
        "total_distortion": float(result.assignment.total_distortion),
        "alpha": float(params.alpha),
        "K": int(params.K),
        "J": int(params.J) if params.J is not None else None,
    }
    if extra:
        meta.update(extra)
    Path(path).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")

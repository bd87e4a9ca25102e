"""Synthetic planted-cluster instances over a finite text space.

With a finite space of M symbols every quantity the estimator targets is
computable by direct summation: exact KL divergences between document and
cluster distributions, the exact prior, and the exact second moment of
the importance weights.  That makes these instances the oracle bed for
the clustering engine and the RIS estimator.

Generation model: K cluster distributions drawn from a symmetric
Dirichlet(concentration); each document's distribution is a
(1 - noise) : noise mixture of its cluster's distribution and fresh
Dirichlet noise; texts are sampled by the prior procedure (uniform
document, then a symbol from that document's distribution).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .core import LogProbMatrix, Proposal, estimate_proposal
from .errors import AbsoluteContinuityError, ParamError

_FLOOR = 1e-300  # keeps Dirichlet draws strictly positive after underflow


@dataclass
class SyntheticInstance:
    M: int
    K_true: int
    n_docs: int
    doc_dists: np.ndarray         # (n, M) rows sum to 1
    cluster_dists: np.ndarray     # (K, M) rows sum to 1
    true_labels: np.ndarray       # (n,)
    P: LogProbMatrix              # (n, J) log p(y_j | x_i)
    sampled_text_ids: np.ndarray  # (J,) symbol index per sampled text

    @property
    def J(self) -> int:
        return self.P.n_texts

    def prior(self) -> np.ndarray:
        """Exact prior p(y) = uniform-document mixture of doc_dists."""
        return self.doc_dists.mean(axis=0)


def _positive_simplex(rows: np.ndarray) -> np.ndarray:
    rows = np.clip(rows, _FLOOR, None)
    return rows / rows.sum(axis=-1, keepdims=True)


def balanced_labels(K_true: int, n_docs: int) -> np.ndarray:
    """n_docs labels over K_true clusters, sizes as even as possible."""
    base = n_docs // K_true
    sizes = [base + (1 if k < n_docs % K_true else 0) for k in range(K_true)]
    return np.repeat(np.arange(K_true), sizes)


def sample_texts_from_prior(
    doc_dists: np.ndarray, J: int, rng: np.random.Generator
) -> np.ndarray:
    """J symbol indices: uniform document choice, then a symbol from it."""
    n, M = doc_dists.shape
    docs = rng.integers(n, size=J)
    ids = np.empty(J, dtype=np.intp)
    for j, i in enumerate(docs):
        ids[j] = rng.choice(M, p=doc_dists[i])
    return ids


def generate_instance(
    K_true: int,
    n_docs: int,
    M: int,
    concentration: float,
    noise: float,
    J: int,
    rng: np.random.Generator,
) -> SyntheticInstance:
    if not (M >= K_true >= 1):
        raise ParamError(f"need M >= K_true >= 1, got M={M}, K_true={K_true}")
    if J < 1 or n_docs < 1:
        raise ParamError("J and n_docs must be >= 1")
    if not 0.0 <= noise <= 1.0:
        raise ParamError(f"noise must be in [0, 1], got {noise}")
    if concentration <= 0:
        raise ParamError(f"concentration must be > 0, got {concentration}")

    cluster_dists = _positive_simplex(
        rng.dirichlet(np.full(M, concentration), size=K_true)
    )
    labels = balanced_labels(K_true, n_docs)
    if noise > 0.0:
        fresh = rng.dirichlet(np.full(M, concentration), size=n_docs)
        doc_dists = (1.0 - noise) * cluster_dists[labels] + noise * fresh
    else:
        doc_dists = cluster_dists[labels].copy()
    doc_dists = _positive_simplex(doc_dists)

    ids = sample_texts_from_prior(doc_dists, J, rng)
    P = LogProbMatrix.from_array(
        np.log(doc_dists[:, ids]),
        doc_ids=[f"doc{i}" for i in range(n_docs)],
        text_ids=[f"y{j}" for j in range(J)],
    )
    return SyntheticInstance(
        M=M, K_true=K_true, n_docs=n_docs,
        doc_dists=doc_dists, cluster_dists=cluster_dists,
        true_labels=labels, P=P, sampled_text_ids=ids,
    )


@dataclass
class HierarchicalInstance:
    """Two-level planted structure: parent clusters, each with sub-clusters."""

    M: int
    doc_dists: np.ndarray         # (n, M)
    parent_dists: np.ndarray      # (K_top, M)
    sub_dists: np.ndarray         # (K_top * subs_per, M)
    top_labels: np.ndarray        # (n,)
    sub_labels: np.ndarray        # (n,)
    P: LogProbMatrix
    sampled_text_ids: np.ndarray

    @property
    def n_docs(self) -> int:
        return self.doc_dists.shape[0]

    def prior(self) -> np.ndarray:
        return self.doc_dists.mean(axis=0)


def generate_hierarchical_instance(
    K_top: int,
    subs_per: int,
    n_per_sub: int,
    M: int,
    concentration: float,
    mix: float,
    noise: float,
    J: int,
    rng: np.random.Generator,
) -> HierarchicalInstance:
    """Planted two-level corpus: each sub-cluster's distribution is a
    mix : (1 - mix) blend of its parent's distribution and fresh Dirichlet
    draw; documents then mix their sub-cluster's distribution with noise
    as in generate_instance."""
    if not (0.0 <= mix <= 1.0 and 0.0 <= noise <= 1.0):
        raise ParamError("mix and noise must be in [0, 1]")
    parents = _positive_simplex(rng.dirichlet(np.full(M, concentration), size=K_top))
    subs = []
    for p in parents:
        for _ in range(subs_per):
            fresh = rng.dirichlet(np.full(M, concentration))
            subs.append(mix * p + (1.0 - mix) * fresh)
    subs = _positive_simplex(np.array(subs))
    n_subs = K_top * subs_per
    sub_labels = np.repeat(np.arange(n_subs), n_per_sub)
    top_labels = sub_labels // subs_per
    if noise > 0.0:
        fresh = rng.dirichlet(np.full(M, concentration), size=n_subs * n_per_sub)
        doc_dists = (1.0 - noise) * subs[sub_labels] + noise * fresh
    else:
        doc_dists = subs[sub_labels].copy()
    doc_dists = _positive_simplex(doc_dists)
    ids = sample_texts_from_prior(doc_dists, J, rng)
    P = LogProbMatrix.from_array(
        np.log(doc_dists[:, ids]),
        doc_ids=[f"doc{i}" for i in range(len(sub_labels))],
        text_ids=[f"y{j}" for j in range(J)],
    )
    return HierarchicalInstance(
        M=M, doc_dists=doc_dists, parent_dists=parents, sub_dists=subs,
        top_labels=top_labels, sub_labels=sub_labels, P=P, sampled_text_ids=ids,
    )


def inject_outliers(
    P: LogProbMatrix,
    rng: np.random.Generator,
    n_columns: int,
    delta: float = 12.0,
    per_column: int = 1,
) -> LogProbMatrix:
    """Plant source-document outliers: in each of ``n_columns`` random
    columns, raise ``per_column`` random entries to mu_j + delta nats
    (capped at -0.1).

    This is the pattern that occurs when a text was generated from the
    very document it is scored against; used to exercise the clipping
    ablation.
    """
    values = P.values.copy()
    mu = values.mean(axis=0)
    n, J = values.shape
    cols = rng.choice(J, size=min(n_columns, J), replace=False)
    for j in cols:
        for i in rng.integers(n, size=per_column):
            values[int(i), int(j)] = min(mu[j] + delta, -0.1)
    return LogProbMatrix(values=values, doc_ids=list(P.doc_ids), text_ids=list(P.text_ids))


def exact_kl(pdist: np.ndarray, qdist: np.ndarray) -> float:
    """KL(p || q) by direct summation; requires q > 0 wherever p > 0."""
    p = np.asarray(pdist, dtype=np.float64)
    q = np.asarray(qdist, dtype=np.float64)
    if p.shape != q.shape:
        raise ParamError("distributions must have the same length")
    support = p > 0.0
    if np.any(q[support] <= 0.0):
        raise AbsoluteContinuityError("q has zero mass on the support of p")
    ps = p[support]
    return float(np.sum(ps * (np.log(ps) - np.log(q[support]))))


def exact_kl_matrix(instance: SyntheticInstance) -> np.ndarray:
    """n x K matrix of exact KL[p(Y|x_i) || p(Y|k)]."""
    n, K = instance.n_docs, instance.K_true
    out = np.empty((n, K))
    for i in range(n):
        for k in range(K):
            out[i, k] = exact_kl(instance.doc_dists[i], instance.cluster_dists[k])
    return out


def ris_estimate_matrix(
    instance: SyntheticInstance,
    ids: np.ndarray,
    alpha: float,
    proposal: str = "estimated",
) -> np.ndarray:
    """RIS estimates d_hat(i, k) on one text sample against true centroids.

    ``proposal="exact"`` evaluates phi at the true prior (the distribution
    the sampler actually draws from); ``"estimated"`` runs the power-mean
    estimator on the sampled matrix, as the pipeline does.
    """
    logP = np.log(instance.doc_dists[:, ids])
    if proposal == "exact":
        log_phi = np.log(instance.prior()[ids])
    elif proposal == "estimated":
        log_phi = estimate_proposal(LogProbMatrix.from_array(logP), alpha).log_phi
    else:
        raise ParamError(f"unknown proposal mode {proposal!r}")
    W = np.exp(alpha * (logP - log_phi[None, :]))
    log_c = np.log(instance.cluster_dists[:, ids])         # true p(y_j | k)
    J = ids.size
    row_self = np.einsum("ij,ij->i", W, logP)
    return (row_self[:, None] - W @ log_c.T) / J


@dataclass
class SweepCell:
    alpha: float
    J: int
    mean_bias: float
    mean_variance: float
    rmse: float


@dataclass
class SweepReport:
    cells: list[SweepCell] = field(default_factory=list)

    def cell(self, alpha: float, J: int) -> SweepCell:
        for c in self.cells:
            if c.alpha == alpha and c.J == J:
                return c
        raise KeyError((alpha, J))


def estimator_error_sweep(
    instance: SyntheticInstance,
    alpha_list: Sequence[float],
    J_list: Sequence[int],
    trials: int,
    rng: np.random.Generator,
    proposal: str = "estimated",
) -> SweepReport:
    """Bias/variance/RMSE of d_hat against the exact KL matrix.

    For each (alpha, J) cell, ``trials`` fresh text samples are drawn and
    d_hat is evaluated for every (document, cluster) pair.  Reported
    numbers aggregate over pairs: mean over pairs of the per-pair mean
    error, per-pair variance, and the RMSE over everything.
    """
    exact = exact_kl_matrix(instance)
    report = SweepReport()
    for alpha in alpha_list:
        for J in J_list:
            est = np.empty((trials, instance.n_docs, instance.K_true))
            for t in range(trials):
                ids = sample_texts_from_prior(instance.doc_dists, J, rng)
                est[t] = ris_estimate_matrix(instance, ids, alpha, proposal)
            err = est - exact[None, :, :]
            report.cells.append(SweepCell(
                alpha=alpha,
                J=J,
                mean_bias=float(err.mean()),
                mean_variance=float(est.var(axis=0, ddof=1).mean()),
                rmse=float(np.sqrt((err**2).mean())),
            ))
    return report


def second_moment(
    phi_candidate: Proposal, instance: SyntheticInstance, alpha: float
) -> float:
    """Exact second moment of the regularized weights under a proposal.

    The candidate's log values are interpreted over the M symbols of the
    finite space and renormalized to a proper distribution before the
    expectation E_X E_phi [(p(Y|X)/phi(Y))^(2 alpha)] is summed out.
    """
    if alpha <= 0:
        raise ParamError("alpha must be > 0")
    log_phi = phi_candidate.log_phi
    if log_phi.shape[0] != instance.M:
        raise ParamError("candidate proposal must cover the full finite space")
    log_z = np.logaddexp.reduce(log_phi)
    phi = np.exp(log_phi - log_z)
    # sum_m phi_m^(1-2a) * mean_i p_im^(2a), in linear domain (M is small)
    p2a = instance.doc_dists ** (2.0 * alpha)
    return float(np.dot(phi ** (1.0 - 2.0 * alpha), p2a.mean(axis=0)))


def optimal_proposal_on_space(instance: SyntheticInstance, alpha: float) -> Proposal:
    """Power-mean proposal evaluated on the full finite space (unnormalized)."""
    if alpha <= 0:
        raise ParamError("alpha must be > 0")
    logp = np.log(instance.doc_dists)
    log_phi = (logsumexp(2.0 * alpha * logp, axis=0) - np.log(instance.n_docs)) / (2.0 * alpha)
    return Proposal(log_phi=log_phi)

"""Core types and the preprocessing pipeline for generative clustering.

A run starts from a dense matrix of log-probabilities log p(y_j | x_i)
(rows = documents, columns = sampled texts).  Preprocessing turns it into
the pair consumed by the clustering engine:

  1. clip per-column outliers in the log domain (mu_j + s * sigma_j),
  2. estimate the shared proposal phi(y_j) as a 2*alpha power mean of the
     column's probabilities,
  3. form regularized importance weights W_ij = (P_ij / phi_j)^alpha.

All probability arithmetic runs in the log domain; text log-probabilities
routinely span hundreds of nats, so linear-domain sums are not an option.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import (
    NonFiniteValueError,
    ParamError,
    PositiveLogProbError,
    WeightOverflowError,
    WeightUnderflowError,
)


@dataclass
class LogProbMatrix:
    """Dense n_docs x n_texts matrix of natural-log probabilities."""

    values: np.ndarray            # (n_docs, n_texts) float64, C order
    doc_ids: list[str]
    text_ids: list[str]

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ParamError("values must be a 2-D array")
        n, j = self.values.shape
        if n < 1 or j < 1:
            raise ParamError("matrix must have at least one row and one column")
        if len(self.doc_ids) != n or len(self.text_ids) != j:
            raise ParamError("doc_ids/text_ids lengths must match the matrix shape")

    @classmethod
    def from_array(
        cls,
        values: np.ndarray,
        doc_ids: Optional[Sequence[str]] = None,
        text_ids: Optional[Sequence[str]] = None,
    ) -> "LogProbMatrix":
        values = np.atleast_2d(np.asarray(values, dtype=np.float64))
        n, j = values.shape
        if doc_ids is None:
            doc_ids = [str(i) for i in range(n)]
        if text_ids is None:
            text_ids = [str(i) for i in range(j)]
        return cls(values=values, doc_ids=list(doc_ids), text_ids=list(text_ids))

    @property
    def n_docs(self) -> int:
        return self.values.shape[0]

    @property
    def n_texts(self) -> int:
        return self.values.shape[1]

    def validate_log_probs(self) -> None:
        """Enforce the log-probability invariants (finite, <= 0)."""
        bad = ~np.isfinite(self.values)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise NonFiniteValueError(
                f"non-finite log-probability at row {i}, column {j}"
            )
        pos = self.values > 0.0
        if pos.any():
            i, j = np.argwhere(pos)[0]
            raise PositiveLogProbError(
                f"positive log-probability {self.values[i, j]!r} at row {i}, column {j}"
            )


@dataclass
class Params:
    """Knobs of the clustering pipeline.

    alpha is the power applied to the importance weights, K the number
    of clusters, restarts the size of the model-selection pool.
    J is optional; when None it is taken from the input matrix.
    """

    K: int
    alpha: float = 0.25
    J: Optional[int] = None
    restarts: int = 10
    clip_sigmas: float = 5.0
    max_iters: int = 300
    seed: int = 0

    def validate(self, n_docs: Optional[int] = None) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ParamError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.K < 1:
            raise ParamError(f"K must be >= 1, got {self.K}")
        if n_docs is not None and self.K > n_docs:
            raise ParamError(f"K={self.K} exceeds n_docs={n_docs}")
        if self.restarts < 1:
            raise ParamError(f"restarts must be >= 1, got {self.restarts}")
        if self.clip_sigmas <= 0:
            raise ParamError(f"clip_sigmas must be > 0, got {self.clip_sigmas}")
        if self.max_iters < 1:
            raise ParamError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.J is not None and self.J < 1:
            raise ParamError(f"J must be >= 1, got {self.J}")


@dataclass
class Proposal:
    """Log of the (unnormalized) proposal phi(y_j) over the J sampled texts.

    The normalization constant is fixed to 1; it cancels in the assignment
    argmin and in centroid normalization.
    """

    log_phi: np.ndarray           # (n_texts,) float64

    def __post_init__(self):
        self.log_phi = np.ascontiguousarray(self.log_phi, dtype=np.float64)
        if self.log_phi.ndim != 1:
            raise ParamError("log_phi must be 1-D")
        if not np.isfinite(self.log_phi).all():
            raise NonFiniteValueError("proposal contains non-finite entries")

    @property
    def n_texts(self) -> int:
        return self.log_phi.shape[0]


@dataclass
class WeightMatrix:
    """Regularized importance weights W_ij = (P_ij / phi_j)^alpha."""

    values: np.ndarray            # (n_docs, n_texts) float64, strictly positive

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ParamError("weight values must be 2-D")

    @property
    def n_docs(self) -> int:
        return self.values.shape[0]

    @property
    def n_texts(self) -> int:
        return self.values.shape[1]


@dataclass
class ColumnStats:
    """Per-column mean and population standard deviation of log P."""

    mu: np.ndarray
    sigma: np.ndarray


def column_stats(P: LogProbMatrix) -> ColumnStats:
    """Single-pass per-column mean and population std of the log matrix."""
    mu = P.values.mean(axis=0)
    sigma = P.values.std(axis=0)          # population convention (ddof=0)
    return ColumnStats(mu=mu, sigma=sigma)


def clip_log_probs(
    P: LogProbMatrix, clip_sigmas: float = 5.0
) -> tuple[LogProbMatrix, int]:
    """Reset per-column upward outliers to mu_j + clip_sigmas * sigma_j.

    Column statistics are computed once, outliers included; only entries
    strictly above the threshold are replaced.  Returns the clipped matrix
    (a copy) and the number of replaced entries.
    """
    if clip_sigmas <= 0:
        raise ParamError(f"clip_sigmas must be > 0, got {clip_sigmas}")
    stats = column_stats(P)
    threshold = stats.mu + clip_sigmas * stats.sigma
    mask = P.values > threshold[None, :]
    clipped = np.where(mask, threshold[None, :], P.values)
    count = int(mask.sum())
    out = LogProbMatrix(values=clipped, doc_ids=list(P.doc_ids), text_ids=list(P.text_ids))
    return out, count


def estimate_proposal(
    P: LogProbMatrix,
    alpha: float,
    rows: Optional[Sequence[int]] = None,
) -> Proposal:
    """Power-mean proposal: phi_j = ((1/m) sum_i P_ij^(2a))^(1/2a).

    Computed entirely in the log domain.  ``rows`` restricts the mean to a
    subset of documents (the localized variant used by hierarchical
    clustering); default is all rows.
    """
    if alpha <= 0:
        raise ParamError("alpha must be > 0 (exponent 1/(2*alpha) undefined at 0)")
    logp = P.values
    if rows is not None:
        rows = np.asarray(rows, dtype=np.intp)
        if rows.size == 0:
            raise ParamError("rows subset must be nonempty")
        logp = logp[rows]
    m = logp.shape[0]
    log_phi = (logsumexp(2.0 * alpha * logp, axis=0) - np.log(m)) / (2.0 * alpha)
    return Proposal(log_phi=log_phi)


def naive_proposal(P: LogProbMatrix) -> Proposal:
    """Plain column mean of probabilities: phi_j = (1/n) sum_i P_ij."""
    n = P.n_docs
    log_phi = logsumexp(P.values, axis=0) - np.log(n)
    return Proposal(log_phi=log_phi)


def compute_weights(P: LogProbMatrix, phi: Proposal, alpha: float) -> WeightMatrix:
    """W_ij = exp(alpha * (log P_ij - log phi_j)); strictly positive, finite."""
    if not 0.0 <= alpha <= 1.0:
        raise ParamError(f"alpha must be in [0, 1], got {alpha}")
    if phi.n_texts != P.n_texts:
        raise ParamError(
            f"proposal length {phi.n_texts} does not match n_texts {P.n_texts}"
        )
    with np.errstate(over="ignore", under="ignore"):
        w = np.exp(alpha * (P.values - phi.log_phi[None, :]))
    inf_mask = np.isinf(w)
    if inf_mask.any():
        i, j = np.argwhere(inf_mask)[0]
        raise WeightOverflowError(f"importance weight overflow at row {i}, column {j}")
    zero_mask = w <= 0.0
    if zero_mask.any():
        i, j = np.argwhere(zero_mask)[0]
        raise WeightUnderflowError(f"importance weight underflow at row {i}, column {j}")
    return WeightMatrix(values=w)


@dataclass
class Preprocessed:
    """Everything the engine needs, computed from one matrix + params."""

    P: LogProbMatrix
    phi: Proposal
    W: WeightMatrix
    clipped_count: int = 0


def preprocess(
    P: LogProbMatrix,
    params: Params,
    *,
    clip: bool = True,
    naive: bool = False,
) -> Preprocessed:
    """Clip, estimate the proposal, and form importance weights.

    ``clip=False`` and ``naive=True`` are the ablation switches.  With
    alpha = 0 the weights are identically 1 and the proposal degenerates to
    the constant phi = 1, so no estimate is needed.
    """
    params.validate(n_docs=P.n_docs)
    clipped_count = 0
    if clip:
        P, clipped_count = clip_log_probs(P, params.clip_sigmas)
    if params.alpha == 0.0:
        phi = Proposal(log_phi=np.zeros(P.n_texts))
    elif naive:
        phi = naive_proposal(P)
    else:
        phi = estimate_proposal(P, params.alpha)
    W = compute_weights(P, phi, params.alpha)
    return Preprocessed(P=P, phi=phi, W=W, clipped_count=clipped_count)

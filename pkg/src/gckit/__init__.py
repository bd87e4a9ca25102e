"""gckit: generative clustering of documents via importance-sampled KL.

The toolkit consumes a dense matrix of log-probabilities log p(y_j | x_i)
produced by any generative language model and clusters the documents by
regularized-importance-sampled KL divergence, flat or hierarchically; the
hierarchy yields prefix-code document indexes for generative retrieval.
"""

from .core import (
    ColumnStats,
    LogProbMatrix,
    Params,
    Proposal,
    WeightMatrix,
    clip_log_probs,
    column_stats,
    compute_weights,
    estimate_proposal,
    naive_proposal,
    preprocess,
)
from .engine import (
    Assignment,
    CentroidSet,
    RunResult,
    assign_all,
    cluster,
    cluster_best_of,
    clustering,
    distortion_row,
    init_kmeanspp,
    init_random,
    kmeans_rows_baseline,
    update_centroids,
)
from .hierarchy import (
    HierNode,
    PrefixCode,
    ResampleWeights,
    assign_prefix_codes,
    bootstrap_texts,
    build_tree,
    cluster_subset,
    resample_weights,
)
from .matrixio import load_matrix, store_matrix
from .metrics import accuracy, ari, linear_assignment, nmi
from .synth import (
    SyntheticInstance,
    estimator_error_sweep,
    exact_kl,
    generate_instance,
    second_moment,
)

__version__ = "0.1.0"

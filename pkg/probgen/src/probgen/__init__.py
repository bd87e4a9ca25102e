"""probgen: log-probability matrices from a seq2seq language model.

Samples texts from a corpus (uniform document, then one stochastic
generation) and scores every (document, text) pair by its summed token
log-likelihood, writing the LPM1 matrix + JSONL sidecars consumed by the
clustering toolkit.
"""

from .corpus import Record, read_jsonl, write_jsonl
from .lpm import read_lpm, write_lpm
from .model import load_model
from .sampling import SampleSettings, sample_texts
from .scoring import ScoredCorpus, ScoreResult, ScoreSettings, score_matrix

__version__ = "0.1.0"

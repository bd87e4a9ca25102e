"""Pairwise sequence log-likelihoods: matrix entry (i, j) is the sum of
conditional token log-probabilities of text j given document i.

Scoring walks the (document, text) grid in document-major order and
batches pairs; the batch size changes throughput only.  Logits are cast
to float32 before the log-softmax so that half-precision inference
perturbs values but not the reduction itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .corpus import Record

DEFAULT_MAX_DOC_TOKENS = 512
DEFAULT_MAX_TEXT_TOKENS = 128


@dataclass
class ScoreSettings:
    prefix: str = "text2query:"
    batch: int = 16
    max_doc_tokens: int = DEFAULT_MAX_DOC_TOKENS
    max_text_tokens: int = DEFAULT_MAX_TEXT_TOKENS


@dataclass
class ScoreResult:
    values: np.ndarray                    # (n_docs, n_texts) float64, <= 0
    truncated_docs: int = 0
    truncated_texts: int = 0
    warnings: list[str] = field(default_factory=list)


@dataclass
class ScoredCorpus:
    """One scoring run's artifact set plus the settings that produced it."""

    docs_path: str
    texts_path: str
    matrix_path: str
    model: str
    precision: str
    settings: ScoreSettings
    truncated_docs: int = 0
    truncated_texts: int = 0
    warnings: list[str] = field(default_factory=list)

    def as_metadata(self) -> dict:
        return {
            "model": self.model,
            "precision": self.precision,
            "batch": self.settings.batch,
            "prefix": self.settings.prefix,
            "max_doc_tokens": self.settings.max_doc_tokens,
            "max_text_tokens": self.settings.max_text_tokens,
            "docs": self.docs_path,
            "texts": self.texts_path,
            "matrix": self.matrix_path,
            "truncated_docs": self.truncated_docs,
            "truncated_texts": self.truncated_texts,
            "warnings": self.warnings,
        }


def _token_ids(tokenizer, text: str, max_length: int):
    ids = tokenizer(text, truncation=True, max_length=max_length).input_ids
    full = tokenizer(text).input_ids
    return ids, len(full) > len(ids)


def score_matrix(
    docs: list[Record],
    texts: list[Record],
    model,
    tokenizer,
    settings: ScoreSettings,
) -> ScoreResult:
    if settings.batch < 1:
        raise ValueError("batch must be >= 1")
    eos = tokenizer.eos_token_id
    pad = tokenizer.pad_token_id
    start = model.config.decoder_start_token_id
    if eos is None or pad is None or start is None:
        raise ValueError("model/tokenizer must define eos, pad and decoder start tokens")

    result = ScoreResult(values=np.zeros((len(docs), len(texts))))

    doc_ids = []
    for d in docs:
        ids, truncated = _token_ids(
            tokenizer, settings.prefix + " " + d.text, settings.max_doc_tokens)
        if truncated:
            result.truncated_docs += 1
            result.warnings.append(f"document {d.id!r} truncated to {len(ids)} tokens")
        doc_ids.append(ids)
    text_ids = []
    for t in texts:
        ids, truncated = _token_ids(tokenizer, t.text, settings.max_text_tokens)
        if truncated:
            result.truncated_texts += 1
            result.warnings.append(f"text {t.id!r} truncated to {len(ids)} tokens")
        if not ids or ids[-1] != eos:
            ids = ids + [eos]            # the sequence ends by emitting eos
        text_ids.append(ids)

    pairs = [(i, j) for i in range(len(docs)) for j in range(len(texts))]
    for lo in range(0, len(pairs), settings.batch):
        chunk = pairs[lo:lo + settings.batch]
        try:
            scores = _score_chunk(model, chunk, doc_ids, text_ids, pad, start)
        except torch.cuda.OutOfMemoryError as exc:
            raise RuntimeError(
                f"out of memory scoring batch of {len(chunk)}; lower --batch") from exc
        for (i, j), s in zip(chunk, scores):
            result.values[i, j] = s
    result.values = np.minimum(result.values, 0.0)
    return result


def _score_chunk(model, chunk, doc_ids, text_ids, pad, start):
    enc_len = max(len(doc_ids[i]) for i, _ in chunk)
    lab_len = max(len(text_ids[j]) for _, j in chunk)
    B = len(chunk)
    input_ids = torch.full((B, enc_len), pad, dtype=torch.long)
    attention = torch.zeros((B, enc_len), dtype=torch.long)
    labels = torch.full((B, lab_len), pad, dtype=torch.long)
    label_mask = torch.zeros((B, lab_len), dtype=torch.bool)
    for b, (i, j) in enumerate(chunk):
        di, tj = doc_ids[i], text_ids[j]
        input_ids[b, :len(di)] = torch.tensor(di)
        attention[b, :len(di)] = 1
        labels[b, :len(tj)] = torch.tensor(tj)
        label_mask[b, :len(tj)] = True
    decoder_input = torch.cat(
        [torch.full((B, 1), start, dtype=torch.long), labels[:, :-1]], dim=1)
    with torch.no_grad():
        logits = model(
            input_ids=input_ids,
            attention_mask=attention,
            decoder_input_ids=decoder_input,
        ).logits
    logprobs = torch.log_softmax(logits.float(), dim=-1)
    token_scores = logprobs.gather(2, labels.unsqueeze(-1)).squeeze(-1)
    token_scores = token_scores.masked_fill(~label_mask, 0.0)
    return token_scores.sum(dim=1).double().tolist()

"""Model loading shared by sampling and scoring."""

from __future__ import annotations

import torch
from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

DTYPES = {"f32": torch.float32, "bf16": torch.bfloat16}


def load_model(model_id: str, precision: str = "f32"):
    """Load a seq2seq model + tokenizer from a hub id or local path."""
    if precision not in DTYPES:
        raise ValueError(f"precision must be one of {sorted(DTYPES)}, got {precision!r}")
    try:
        tokenizer = AutoTokenizer.from_pretrained(model_id)
        model = AutoModelForSeq2SeqLM.from_pretrained(model_id)
    except Exception as exc:
        raise RuntimeError(f"failed to load model {model_id!r}: {exc}") from exc
    model = model.to(DTYPES[precision])
    model.eval()
    return model, tokenizer

"""Text sampling: uniform document choice, then one stochastic generation.

Generation uses plain multinomial sampling at temperature 1.0 with no
top-k/top-p truncation, so the drawn texts are i.i.d. samples from the
model's own conditional distribution; truncating the sampler would bias
the proposal the texts later serve as.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .corpus import Record

DEFAULT_PREFIX = "text2query:"
DEFAULT_MAX_NEW_TOKENS = 64


@dataclass
class SampleSettings:
    prefix: str = DEFAULT_PREFIX
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS
    seed: int = 0


def sample_texts(
    docs: list[Record],
    J: int,
    model,
    tokenizer,
    settings: SampleSettings,
    rng: np.random.Generator,
) -> list[Record]:
    """J texts, each generated from a uniformly chosen document.

    Deterministic given the numpy generator state (per-draw torch seeds
    are derived from it).  Duplicate texts are retained.
    """
    if J < 1:
        raise ValueError("J must be >= 1")
    if not docs:
        raise ValueError("empty corpus")
    texts = []
    for j in range(J):
        i = int(rng.integers(len(docs)))
        torch_seed = int(rng.integers(2**31))
        enc = tokenizer(
            [settings.prefix + " " + docs[i].text], return_tensors="pt",
            truncation=True, max_length=512,
        )
        torch.manual_seed(torch_seed)
        try:
            with torch.no_grad():
                out = model.generate(
                    **enc,
                    do_sample=True,
                    temperature=1.0,
                    top_k=0,
                    max_new_tokens=settings.max_new_tokens,
                )
        except Exception as exc:
            raise RuntimeError(
                f"generation failed for document {docs[i].id!r}: {exc}") from exc
        text = tokenizer.decode(out[0], skip_special_tokens=True)
        texts.append(Record(id=f"y{j}", text=text))
    return texts

"""Shared fixture: a tiny seq2seq model built locally.

The sandbox has no model-hub access, so the tests construct a miniature
T5 (random weights, word-level tokenizer over the toy vocabulary) and
save it to disk; everything downstream loads it through the same
AutoModelForSeq2SeqLM / AutoTokenizer path a published checkpoint would
use.
"""

import pytest
import torch
from tokenizers import Tokenizer, models, pre_tokenizers
from transformers import PreTrainedTokenizerFast, T5Config, T5ForConditionalGeneration

from probgen.corpus import Record

WORDS = [
    "text2query:", "the", "a", "cat", "dog", "bird", "runs", "sleeps", "flies",
    "big", "small", "old", "house", "tree", "river", "query", "about", "animals",
    "buildings", "nature", "fast", "slow", "quiet", "loud", "red", "green",
]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    vocab = {"<pad>": 0, "</s>": 1, "<unk>": 2}
    for w in WORDS:
        vocab[w] = len(vocab)
    tok = Tokenizer(models.WordLevel(vocab, unk_token="<unk>"))
    tok.pre_tokenizer = pre_tokenizers.Whitespace()
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tok, unk_token="<unk>", pad_token="<pad>", eos_token="</s>")

    config = T5Config(
        vocab_size=len(vocab), d_model=32, d_ff=64, d_kv=8, num_heads=2,
        num_layers=2, num_decoder_layers=2, decoder_start_token_id=0,
        pad_token_id=0, eos_token_id=1,
    )
    torch.manual_seed(1234)
    model = T5ForConditionalGeneration(config)
    out = tmp_path_factory.mktemp("tiny-model")
    model.save_pretrained(out)
    fast.save_pretrained(out)
    return str(out)


@pytest.fixture(scope="session")
def toy_docs():
    texts = [
        "the cat sleeps in the big house",
        "a dog runs fast about the river",
        "the bird flies about the old tree",
        "a small cat runs about the house",
        "the old dog sleeps by the tree",
        "a quiet bird sleeps in the green house",
        "the red house by the river",
        "a loud dog runs about animals",
    ]
    return [Record(id=f"doc{i}", text=t) for i, t in enumerate(texts)]

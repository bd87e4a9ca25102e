"""probgen command line: `sample` texts from a corpus, `score` every pair.

sample writes texts.jsonl; score writes an LPM1 matrix plus docs.jsonl /
texts.jsonl sidecars and a metadata JSON recording the model id,
generation/scoring settings, and any truncation warnings.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .corpus import read_jsonl, write_jsonl
from .lpm import write_lpm
from .model import load_model
from .sampling import SampleSettings, sample_texts
from .scoring import ScoredCorpus, ScoreSettings, score_matrix


def cmd_sample(args) -> int:
    docs = read_jsonl(args.docs)
    model, tokenizer = load_model(args.model)
    settings = SampleSettings(
        prefix=args.prefix, max_new_tokens=args.max_new_tokens, seed=args.seed)
    rng = np.random.default_rng(args.seed)
    texts = sample_texts(docs, args.j, model, tokenizer, settings, rng)
    write_jsonl(texts, args.out)
    meta = {
        "model": args.model,
        "prefix": args.prefix,
        "max_new_tokens": args.max_new_tokens,
        "seed": args.seed,
        "j": args.j,
        "sampling": "multinomial, temperature 1.0, no truncation",
    }
    Path(str(args.out) + ".meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    return 0


def cmd_score(args) -> int:
    docs = read_jsonl(args.docs)
    texts = read_jsonl(args.texts)
    model, tokenizer = load_model(args.model, precision=args.precision)
    settings = ScoreSettings(
        prefix=args.prefix, batch=args.batch,
        max_doc_tokens=args.max_doc_tokens, max_text_tokens=args.max_text_tokens)
    result = score_matrix(docs, texts, model, tokenizer, settings)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_lpm(result.values, out)
    write_jsonl(docs, out.parent / "docs.jsonl")
    write_jsonl(texts, out.parent / "texts.jsonl")
    corpus = ScoredCorpus(
        docs_path=str(out.parent / "docs.jsonl"),
        texts_path=str(out.parent / "texts.jsonl"),
        matrix_path=str(out),
        model=args.model,
        precision=args.precision,
        settings=settings,
        truncated_docs=result.truncated_docs,
        truncated_texts=result.truncated_texts,
        warnings=result.warnings,
    )
    meta = corpus.as_metadata()
    meta["n_docs"] = len(docs)
    meta["n_texts"] = len(texts)
    Path(str(out) + ".meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="probgen", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sample = sub.add_parser("sample", help="generate texts from the corpus")
    p_sample.add_argument("--docs", required=True)
    p_sample.add_argument("--j", type=int, required=True)
    p_sample.add_argument("--model", required=True, help="model id or local path")
    p_sample.add_argument("--prefix", default="text2query:")
    p_sample.add_argument("--max-new-tokens", type=int, default=64)
    p_sample.add_argument("--seed", type=int, default=0)
    p_sample.add_argument("--out", required=True)
    p_sample.set_defaults(func=cmd_sample)

    p_score = sub.add_parser("score", help="score every (doc, text) pair")
    p_score.add_argument("--docs", required=True)
    p_score.add_argument("--texts", required=True)
    p_score.add_argument("--model", required=True)
    p_score.add_argument("--precision", default="f32", choices=["f32", "bf16"])
    p_score.add_argument("--batch", type=int, default=16)
    p_score.add_argument("--prefix", default="text2query:")
    p_score.add_argument("--max-doc-tokens", type=int, default=512)
    p_score.add_argument("--max-text-tokens", type=int, default=128)
    p_score.add_argument("--out", required=True)
    p_score.set_defaults(func=cmd_score)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, FileNotFoundError) as exc:
        print(f"probgen: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

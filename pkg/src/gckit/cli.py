"""Command-line surface: cluster, hcluster, eval, synth, baseline.

Every subcommand accepts --config pointing at a flat JSON document whose
keys mirror the long option names (unknown keys are rejected); explicit
command-line flags win over config values.  Run metadata embeds the
resolved semantic config, so re-running with --config metadata.json
reproduces the artifacts bit for bit.  Exit codes: 0 success, 2
configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import engine, hierarchy, matrixio, metrics, synth
from .core import Params
from .errors import DataError, GckitError, ParamError

logger = logging.getLogger("gckit")

EXIT_CONFIG = 2
EXIT_DATA = 3

REQUIRED = {
    "cluster": ("input", "k", "out"),
    "hcluster": ("input", "k", "out"),
    "eval": ("truth", "pred"),
    "synth": ("k_true", "n_docs", "m", "j", "out"),
    "baseline": ("input", "k", "out"),
}


class CliConfigError(Exception):
    pass


def _default_threads() -> int:
    env = os.environ.get("GCKIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise CliConfigError(f"GCKIT_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def _apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser,
                  argv: list[str]) -> None:
    """Overlay a JSON config under explicit CLI flags."""
    if not getattr(args, "config", None):
        return
    path = Path(args.config)
    if not path.exists():
        raise CliConfigError(f"config file not found: {path}")
    doc = json.loads(path.read_text(encoding="utf-8"))
    if isinstance(doc, dict) and isinstance(doc.get("config"), dict):
        doc = doc["config"]                 # accept run-metadata files directly
    if not isinstance(doc, dict):
        raise CliConfigError("config must be a JSON object")
    known = {a.dest for a in parser._actions}
    explicit = _explicit_flags(parser, argv)
    for key, value in doc.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("config", "help"):
            raise CliConfigError(f"unknown config key {key!r}")
        if dest not in explicit:
            setattr(args, dest, value)


def _explicit_flags(parser: argparse.ArgumentParser, argv: list[str]) -> set[str]:
    """Dests the user actually typed (so they override config values)."""
    explicit = set()
    for action in parser._actions:
        for opt in action.option_strings:
            if any(tok == opt or tok.startswith(opt + "=") for tok in argv):
                explicit.add(action.dest)
    return explicit


def _params_from_args(args, n_docs=None) -> Params:
    params = Params(
        K=int(args.k),
        alpha=float(args.alpha),
        restarts=int(args.restarts),
        clip_sigmas=float(args.clip_sigmas),
        max_iters=int(args.max_iters),
        seed=int(args.seed),
    )
    params.validate(n_docs=n_docs)
    return params


def _semantic_config(args, keys) -> dict:
    # --threads deliberately excluded: thread count never changes results
    out = {}
    for key in keys:
        val = getattr(args, key)
        out[key.replace("_", "-")] = val
    return out


def _add_common_cluster_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="path to the LPM1 matrix")
    p.add_argument("--format", default="binary", choices=["binary", "csv"])
    p.add_argument("--k", type=int, help="number of clusters")
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", default="random", choices=["random", "kmeanspp"])
    p.add_argument("--clip-sigmas", type=float, default=5.0)
    p.add_argument("--no-clip", action="store_true", help="disable probability clipping")
    p.add_argument("--naive-proposal", action="store_true",
                   help="plain column-mean proposal instead of the power mean")
    p.add_argument("--max-iters", type=int, default=300)
    p.add_argument("--out", help="output directory")


_CLUSTER_KEYS = ["input", "format", "k", "alpha", "restarts", "seed", "init",
                 "clip_sigmas", "no_clip", "naive_proposal", "max_iters", "out"]


def cmd_cluster(args) -> int:
    P = matrixio.load_matrix(args.input, format=args.format)
    params = _params_from_args(args, n_docs=P.n_docs)
    params.J = P.n_texts
    result = engine.cluster_best_of(
        P, params, args.init,
        clip=not args.no_clip, naive=args.naive_proposal, threads=args.threads,
    )
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    engine.write_assignment_jsonl(result, P.doc_ids, outdir / "assignment.jsonl")
    engine.write_run_metadata(
        result, params, outdir / "run.json",
        extra={"config": _semantic_config(args, _CLUSTER_KEYS)},
    )
    logger.info("wrote %s", outdir / "assignment.jsonl")
    return 0


def cmd_hcluster(args) -> int:
    P = matrixio.load_matrix(args.input, format=args.format)
    params = _params_from_args(args, n_docs=P.n_docs)
    params.J = P.n_texts
    tree = hierarchy.build_tree(
        P, params, args.leaf_threshold,
        init=args.init, localized=not args.no_localized_phi,
        clip=not args.no_clip, naive=args.naive_proposal,
    )
    codes = hierarchy.assign_prefix_codes(tree, doc_ids=P.doc_ids)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    hierarchy.write_codes_jsonl(codes, outdir / "codes.jsonl")
    summary = hierarchy.tree_summary(tree)
    summary["localized_phi"] = not args.no_localized_phi
    summary["config"] = _semantic_config(
        args, _CLUSTER_KEYS + ["leaf_threshold", "no_localized_phi"]
    )
    (outdir / "tree.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    logger.info("wrote %s", outdir / "codes.jsonl")
    return 0


def cmd_eval(args) -> int:
    truth = np.array(
        [int(line) for line in Path(args.truth).read_text().split()], dtype=np.intp
    )
    pred = []
    with Path(args.pred).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                pred.append(int(json.loads(line)["cluster"]))
    pred = np.array(pred, dtype=np.intp)
    if truth.size != pred.size:
        raise DataError(
            f"truth has {truth.size} labels, predictions have {pred.size}"
        )
    acc = metrics.accuracy(truth, pred) * 100.0
    nmi = metrics.nmi(truth, pred) * 100.0
    ari = metrics.ari(truth, pred) * 100.0
    print('{"acc": %.4f, "nmi": %.4f, "ari": %.4f}' % (acc, nmi, ari))
    return 0


_SYNTH_KEYS = ["k_true", "n_docs", "m", "concentration", "noise", "j", "seed", "out"]


def cmd_synth(args) -> int:
    rng = np.random.default_rng(args.seed)
    instance = synth.generate_instance(
        K_true=args.k_true, n_docs=args.n_docs, M=args.m,
        concentration=args.concentration, noise=args.noise, J=args.j, rng=rng,
    )
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    matrixio.store_matrix(instance.P, outdir / "matrix.lpm")
    matrixio.write_sidecars(
        outdir / "matrix.lpm", instance.P.doc_ids, instance.P.text_ids
    )
    (outdir / "truth.txt").write_text(
        "\n".join(str(int(v)) for v in instance.true_labels) + "\n", encoding="utf-8"
    )
    payload = {
        "config": _semantic_config(args, _SYNTH_KEYS),
        "true_labels": instance.true_labels.tolist(),
        "cluster_dists": instance.cluster_dists.tolist(),
        "doc_dists": instance.doc_dists.tolist(),
        "sampled_text_ids": instance.sampled_text_ids.tolist(),
    }
    (outdir / "instance.json").write_text(json.dumps(payload) + "\n", encoding="utf-8")
    logger.info("wrote %s", outdir / "matrix.lpm")
    return 0


_BASELINE_KEYS = ["input", "format", "k", "restarts", "seed", "max_iters", "out"]


def cmd_baseline(args) -> int:
    P = matrixio.load_matrix(args.input, format=args.format)
    params = Params(
        K=int(args.k), restarts=int(args.restarts),
        max_iters=int(args.max_iters), seed=int(args.seed),
    )
    params.validate(n_docs=P.n_docs)
    result = engine.kmeans_rows_baseline(P.values, params.K, params)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    engine.write_assignment_jsonl(result, P.doc_ids, outdir / "assignment.jsonl")
    engine.write_run_metadata(
        result, params, outdir / "run.json",
        extra={"config": _semantic_config(args, _BASELINE_KEYS)},
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gckit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat JSON config; CLI flags override")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: all cores or GCKIT_THREADS)")
        p.add_argument("--verbose", action="store_true")

    p_cluster = sub.add_parser("cluster", help="flat generative clustering")
    _add_common_cluster_flags(p_cluster)
    common(p_cluster)
    p_cluster.set_defaults(func=cmd_cluster)

    p_h = sub.add_parser("hcluster", help="hierarchical clustering + prefix codes")
    _add_common_cluster_flags(p_h)
    p_h.add_argument("--leaf-threshold", type=int, default=None,
                     help="max documents per leaf (default: K)")
    p_h.add_argument("--no-localized-phi", action="store_true",
                     help="cluster sub-clusters under the global proposal")
    common(p_h)
    p_h.set_defaults(func=cmd_hcluster)

    p_eval = sub.add_parser("eval", help="ACC/NMI/ARI against true labels")
    p_eval.add_argument("--truth", help="one integer label per line")
    p_eval.add_argument("--pred", help="assignment JSONL")
    common(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_synth = sub.add_parser("synth", help="generate a planted-cluster instance")
    p_synth.add_argument("--k-true", type=int)
    p_synth.add_argument("--n-docs", type=int)
    p_synth.add_argument("--m", type=int, help="finite text-space size")
    p_synth.add_argument("--concentration", type=float, default=1.0)
    p_synth.add_argument("--noise", type=float, default=0.1)
    p_synth.add_argument("--j", type=int, help="number of sampled texts")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out")
    common(p_synth)
    p_synth.set_defaults(func=cmd_synth)

    p_base = sub.add_parser("baseline", help="Euclidean k-means on matrix rows")
    p_base.add_argument("--input")
    p_base.add_argument("--format", default="binary", choices=["binary", "csv"])
    p_base.add_argument("--k", type=int)
    p_base.add_argument("--restarts", type=int, default=10)
    p_base.add_argument("--seed", type=int, default=0)
    p_base.add_argument("--max-iters", type=int, default=300)
    p_base.add_argument("--out")
    common(p_base)
    p_base.set_defaults(func=cmd_baseline)

    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        sub = next(
            p for a in parser._actions if isinstance(a, argparse._SubParsersAction)
            for name, p in a.choices.items() if name == args.command
        )
        _apply_config(args, sub, list(argv))
        missing = [f"--{name.replace('_', '-')}" for name in REQUIRED[args.command]
                   if getattr(args, name) is None]
        if missing:
            raise CliConfigError(f"missing required options: {', '.join(missing)}")
        if getattr(args, "threads", None) in (None, 0):
            args.threads = _default_threads()
        return args.func(args)
    except (CliConfigError, ParamError) as exc:
        print(f"gckit: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"gckit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DataError, GckitError) as exc:
        print(f"gckit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

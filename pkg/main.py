#!/usr/bin/env python3
"""
Residex - residual-compressed late-interaction retrieval
Main entry point for the command-line interface
"""

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from analysis import TokenAnnotation, analyze
from config import (
    BENCH_REPS,
    DEBUG_MODE,
    DEFAULT_SEED,
    INDEX_BITS,
    INDEX_CHUNK_SIZE,
    KMEANS_ITERS,
    SAMPLE_MULT,
    SEARCH_CAND_MULT,
    SEARCH_K,
    SEARCH_NPROBE,
    THREADS,
    log_configuration,
)
from evaluation import bench_latency, build_sweep, evaluate, parse_int_list, parse_metric, summarize, write_bench
from formats import read_embeddings, read_qrels, read_results, read_tokens, read_vocab, write_results
from indexer import build_index, index_stats, load_index, save_index
from oracle import oracle_batch
from searcher import SearchParams, search_batch
from synth import PROFILES, synth, write_synth
from utils.errors import ResidexError
from utils.logger import logger, set_level

__version__ = "1.0.0"

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


class ResidexArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with status 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    seed: int
    threads: int
    log_level: str
    options: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        skip = {"command", "handler", "seed", "threads", "log_level"}
        options = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
        return cls(
            command=args.command,
            seed=getattr(args, "seed", DEFAULT_SEED),
            threads=args.threads,
            log_level=args.log_level,
            options=options,
        )

    def as_dict(self) -> Dict[str, Any]:
        flat = {"command": self.command, "seed": self.seed, "threads": self.threads, "log_level": self.log_level}
        for key, value in self.options.items():
            flat[key] = str(value) if isinstance(value, Path) else value
        return flat


# ---------------------------
# Subcommands
# ---------------------------

def cmd_index(args) -> None:
    embeddings = read_embeddings(args.embeddings)
    index, ivf = build_index(
        embeddings,
        bits=args.bits,
        seed=args.seed,
        chunk_size=args.chunk_size,
        sample_mult=args.sample_mult,
        kmeans_iters=args.kmeans_iters,
        threads=args.threads,
    )
    save_index(index, ivf, args.out)
    stats = index_stats(index)
    logger.info(f"Index: {stats.bytes_per_vector:.2f} bytes/vector on disk, "
                f"{stats.core_bytes_per_vector} core, {stats.core_ratio:.2f}x vs 16-bit")


def cmd_stats(args) -> None:
    index, _ = load_index(args.index)
    for line in index_stats(index).lines():
        print(line)


def _params(args) -> SearchParams:
    return SearchParams(nprobe=args.nprobe, ncandidates=args.ncandidates, k=args.k)


def cmd_search(args) -> None:
    index, ivf = load_index(args.index)
    queries = read_embeddings(args.queries)
    results = search_batch(queries, index, ivf, _params(args), threads=args.threads)
    write_results(results, args.out)
    logger.info(f"Wrote {len(results)} ranked list(s) to {args.out}")


def cmd_oracle(args) -> None:
    queries = read_embeddings(args.queries)
    if args.index is not None:
        target, _ = load_index(args.index)
    else:
        target = read_embeddings(args.embeddings)
    results = oracle_batch(queries, target, args.k, clamp=args.clamp)
    write_results(results, args.out)
    logger.info(f"Wrote {len(results)} oracle list(s) to {args.out}")


def cmd_eval(args) -> None:
    results = read_results(args.results)
    qrels = read_qrels(args.qrels)
    for text in args.metric:
        metric, k = parse_metric(text)
        report = evaluate(results, qrels, metric, k)
        print(report.line())
        logger.info(f"{report.name} = {report.average:.4f} over {report.n_queries} quer(ies), "
                    f"{report.n_skipped} skipped")


def cmd_bench(args) -> None:
    queries = read_embeddings(args.queries)
    qrels = read_qrels(args.qrels) if args.qrels else None
    sweep = build_sweep(parse_int_list(args.probes), parse_int_list(args.cand_mults), k=args.k)
    rows = []
    for directory in args.index:
        index, ivf = load_index(directory)
        rows += bench_latency(index, ivf, queries, sweep, repetitions=args.reps, qrels=qrels,
                              threads=args.threads, label=Path(directory).name)
    write_bench(rows, args.out)
    summarize(rows)


def cmd_analyze(args) -> None:
    index, _ = load_index(args.index)
    vocab = read_vocab(args.vocab) if args.vocab else None
    annot = TokenAnnotation.from_offsets(read_tokens(args.tokens), index.n_embeddings, vocab=vocab)
    analyze(index.codes, annot, dim=index.codec.dim, k=index.codec.n_centroids, out_dir=args.out,
            seed=args.seed, iters=args.kmeans_iters)


def cmd_synth(args) -> None:
    result = synth(
        profile=args.profile,
        n_passages=args.n_passages,
        tokens_per_passage=args.tokens_per_passage,
        dim=args.dim,
        n_clusters=args.n_clusters,
        noise=args.noise,
        seed=args.seed,
        n_queries=args.n_queries,
        query_len=args.query_len,
        spread=args.spread,
    )
    write_synth(result, args.out)


# ---------------------------
# Argument parsing
# ---------------------------

def _global_flags(parser: argparse.ArgumentParser, suppress: bool):
    # on subcommands the defaults are suppressed so a flag given before the
    # subcommand is not overwritten
    parser.add_argument("--threads", type=int, default=argparse.SUPPRESS if suppress else THREADS,
                        help="worker threads, 0 = one per CPU")
    parser.add_argument("--log-level", type=str.upper, choices=LOG_LEVELS,
                        default=argparse.SUPPRESS if suppress else ("DEBUG" if DEBUG_MODE else "INFO"))


def build_parser() -> argparse.ArgumentParser:
    parser = ResidexArgumentParser(prog="residex", description="Residual-compressed late-interaction retrieval")
    parser.add_argument("--version", action="version", version=f"residex {__version__}")
    _global_flags(parser, suppress=False)

    common = ResidexArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("index", parents=[common], help="build a compressed index")
    p.add_argument("--embeddings", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--bits", type=int, choices=(1, 2), default=INDEX_BITS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--chunk-size", type=int, default=INDEX_CHUNK_SIZE)
    p.add_argument("--sample-mult", type=float, default=SAMPLE_MULT)
    p.add_argument("--kmeans-iters", type=int, default=KMEANS_ITERS)
    p.set_defaults(handler=cmd_index)

    p = sub.add_parser("stats", parents=[common], help="byte accounting of an index")
    p.add_argument("--index", required=True, type=Path)
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("search", parents=[common], help="two-stage search")
    p.add_argument("--index", required=True, type=Path)
    p.add_argument("--queries", required=True, type=Path)
    p.add_argument("--nprobe", type=int, default=SEARCH_NPROBE)
    p.add_argument("--ncandidates", type=int, default=None,
                   help=f"defaults to nprobe * {SEARCH_CAND_MULT}")
    p.add_argument("--k", type=int, default=SEARCH_K)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(handler=cmd_search)

    p = sub.add_parser("oracle", parents=[common], help="exhaustive reference ranking")
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--embeddings", type=Path, help="score the uncompressed corpus")
    target.add_argument("--index", type=Path, help="score the decoded index")
    p.add_argument("--queries", required=True, type=Path)
    p.add_argument("--k", type=int, default=SEARCH_K)
    p.add_argument("--clamp", action="store_true", help="clamp per-row maxima at 0")
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(handler=cmd_oracle)

    p = sub.add_parser("eval", parents=[common], help="ranking metrics against qrels")
    p.add_argument("--results", required=True, type=Path)
    p.add_argument("--qrels", required=True, type=Path)
    p.add_argument("--metric", action="append", required=True, help="mrr@K, success@K or recall@K; repeatable")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("bench", parents=[common], help="latency sweep")
    p.add_argument("--index", required=True, type=Path, nargs="+", help="one or more index directories")
    p.add_argument("--queries", required=True, type=Path)
    p.add_argument("--qrels", type=Path)
    p.add_argument("--probes", default="1,2,4")
    p.add_argument("--cand-mults", default="4096,16384")
    p.add_argument("--k", type=int, default=SEARCH_K)
    p.add_argument("--reps", type=int, default=BENCH_REPS)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("analyze", parents=[common], help="semantic-space statistics")
    p.add_argument("--index", required=True, type=Path)
    p.add_argument("--tokens", required=True, type=Path)
    p.add_argument("--vocab", type=Path)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--kmeans-iters", type=int, default=KMEANS_ITERS)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--profile", choices=PROFILES, default="clustered")
    p.add_argument("--n-passages", type=int, default=100)
    p.add_argument("--tokens-per-passage", type=int, default=32)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--n-clusters", type=int, default=16)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--spread", type=float, default=0.25)
    p.add_argument("--n-queries", type=int, default=20)
    p.add_argument("--query-len", type=int, default=8)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(handler=cmd_synth)

    return parser


def _fail(error: Exception, exit_code: int, unexpected: bool = False) -> int:
    if unexpected:
        logger.exception(f"Unexpected error: {error}")
    else:
        logger.error(f"{type(error).__name__}: {error}")
    print(json.dumps({"error": type(error).__name__, "exit_code": exit_code, "message": str(error)}), file=sys.stderr)
    return exit_code


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1

    set_level(args.log_level)
    log_configuration(logger, RunConfig.from_args(args))
    logger.info(f"=== Running {args.command} ===")

    try:
        args.handler(args)
    except ResidexError as e:
        return _fail(e, e.exit_code)
    except OSError as e:
        return _fail(e, 2)
    except Exception as e:
        return _fail(e, 1, unexpected=True)
    logger.info(f"=== {args.command} complete ===")
    return 0


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        logger.info("Residex stopped by user.")
        sys.exit(130)

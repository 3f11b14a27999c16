#!/usr/bin/env python3
"""
Latency benchmark
Sweeps nprobe x ncandidates over one or more indexes, timing single-threaded
per-query search and optionally a parallel throughput pass.
"""

import time
from collections import defaultdict
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
from tqdm import tqdm

from config import BENCH_REPS, SEARCH_K, SHOW_PROGRESS
from evaluation.metrics import mrr_at_k, success_at_k
from formats import EmbeddingSet, Qrels
from indexer import CompressedIndex, InvertedLists
from searcher import SearchParams, search, search_batch
from utils.errors import EmptyIntersection, InvalidParams, IoFailure
from utils.logger import logger

BENCH_COLUMNS = (
    "index", "bits", "nprobe", "ncandidates", "k", "repetitions", "n_queries",
    "mean_ms", "min_ms", "max_ms", "mrr_at_10", "success_at_5", "qps_parallel",
)


@dataclass
class BenchRow:
    index: str
    bits: int
    nprobe: int
    ncandidates: int
    k: int
    repetitions: int
    n_queries: int
    mean_ms: float
    min_ms: float
    max_ms: float
    mrr_at_10: Optional[float] = None
    success_at_5: Optional[float] = None
    qps_parallel: Optional[float] = None

    def tsv(self) -> str:
        values = []
        for column in BENCH_COLUMNS:
            value = getattr(self, column)
            if value is None:
                values.append("-")
            elif isinstance(value, float):
                values.append(f"{value:.4f}")
            else:
                values.append(str(value))
        return "\t".join(values)


def build_sweep(probes: Iterable[int], cand_mults: Iterable[int], k: int = SEARCH_K) -> List[SearchParams]:
    """One point per (nprobe, nprobe * multiplier) pair, probes outermost"""
    cand_mults = list(cand_mults)
    return [SearchParams(nprobe=p, ncandidates=p * m, k=k) for p in probes for m in cand_mults]


def parse_int_list(text: str) -> List[int]:
    """'1,2,4' -> [1, 2, 4]"""
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise InvalidParams(f"expected a comma-separated list of integers, got {text!r}") from None
    if any(v < 1 for v in values):
        raise InvalidParams(f"list values must be positive: {text!r}")
    return values


def _quality(results, qrels: Optional[Qrels]):
    if not qrels:
        return None, None
    try:
        return mrr_at_k(results, qrels, 10).average, success_at_k(results, qrels, 5).average
    except EmptyIntersection:
        logger.warning("Benchmark queries do not overlap the qrels; quality columns left empty")
        return None, None


def bench_latency(index: CompressedIndex,
                  ivf: InvertedLists,
                  queries: EmbeddingSet,
                  sweep: Sequence[SearchParams],
                  repetitions: int = BENCH_REPS,
                  qrels: Optional[Qrels] = None,
                  threads: int = 1,
                  label: str = "index") -> List[BenchRow]:
    """
    Time every sweep point over `repetitions` passes of the query set.

    Each timed interval covers candidate generation and rescoring of one
    query; loading is excluded. With threads > 1 an extra untimed-per-query
    pass measures parallel throughput.
    """
    if repetitions < 1:
        raise InvalidParams(f"repetitions must be at least 1, got {repetitions}")
    rows: List[BenchRow] = []
    if not sweep or queries.n_passages == 0:
        return rows

    for params in tqdm(sweep, desc=f"Bench {label}", disable=not SHOW_PROGRESS):
        params.validate(index.codec.n_centroids)
        timings = []
        results = {}
        for _ in range(repetitions):
            for qid, Q in queries:
                start = time.perf_counter()
                results[qid] = search(Q, index, ivf, params)
                timings.append(time.perf_counter() - start)
        timings_ms = np.asarray(timings) * 1000.0
        mrr, success = _quality(results, qrels)

        qps = None
        if threads > 1:
            start = time.perf_counter()
            search_batch(queries, index, ivf, params, threads=threads)
            elapsed = time.perf_counter() - start
            qps = queries.n_passages / elapsed if elapsed > 0 else float("inf")

        row = BenchRow(
            index=label,
            bits=index.codec.bits,
            nprobe=params.nprobe,
            ncandidates=params.ncandidates,
            k=params.k,
            repetitions=repetitions,
            n_queries=queries.n_passages,
            mean_ms=float(timings_ms.mean()),
            min_ms=float(timings_ms.min()),
            max_ms=float(timings_ms.max()),
            mrr_at_10=mrr,
            success_at_5=success,
            qps_parallel=qps,
        )
        logger.info(f"[{label}] nprobe={row.nprobe} ncandidates={row.ncandidates}: "
                    f"mean {row.mean_ms:.3f} ms (min {row.min_ms:.3f}, max {row.max_ms:.3f})")
        rows.append(row)

    for warning in latency_monotonicity_warnings(rows):
        logger.warning(warning)
    return rows


def latency_monotonicity_warnings(rows: Sequence[BenchRow]) -> List[str]:
    """Sweep points where mean latency drops as ncandidates grows at fixed nprobe"""
    groups = defaultdict(list)
    for row in rows:
        groups[(row.index, row.bits, row.nprobe)].append(row)
    warnings = []
    for (label, bits, nprobe), group in groups.items():
        group.sort(key=lambda r: r.ncandidates)
        for smaller, larger in zip(group, group[1:]):
            if larger.ncandidates > smaller.ncandidates and larger.mean_ms < smaller.mean_ms:
                warnings.append(f"[{label}] latency not monotone at nprobe={nprobe}: "
                                f"{smaller.ncandidates} candidates {smaller.mean_ms:.3f} ms > "
                                f"{larger.ncandidates} candidates {larger.mean_ms:.3f} ms")
    return warnings


def write_bench(rows: Sequence[BenchRow], path: Union[str, Path]):
    try:
        with open(path, "w", encoding="utf-8") as f:
            f.write("\t".join(BENCH_COLUMNS) + "\n")
            for row in rows:
                f.write(row.tsv() + "\n")
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e
    logger.info(f"Wrote {len(rows)} benchmark row(s) to {path}")


def summarize(rows: Sequence[BenchRow]):
    """Log the fastest sweep point and, when measured, the best-quality one"""
    if not rows:
        logger.info("=== Benchmark summary: no sweep points ===")
        return
    logger.info(f"=== Benchmark summary: {len(rows)} sweep point(s) ===")
    fastest = min(rows, key=lambda r: r.mean_ms)
    logger.info(f"Fastest: {asdict(fastest)}")
    scored = [r for r in rows if r.mrr_at_10 is not None]
    if scored:
        best = max(scored, key=lambda r: (r.mrr_at_10, -r.mean_ms))
        logger.info(f"Best MRR@10: {asdict(best)}")

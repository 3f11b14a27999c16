#!/usr/bin/env python3
"""
Ranking metrics over qrels
Per-query values are macro-averaged over the queries present in both the
results and the qrels.
"""

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Set, Tuple

from formats import Qrels, RankedResults
from utils.errors import EmptyIntersection, InvalidParams
from utils.logger import logger

QueryMetric = Callable[[List[int], Set[int]], float]


@dataclass
class MetricReport:
    metric: str
    k: int
    average: float
    n_queries: int
    n_skipped: int = 0
    per_query: Dict[int, float] = field(default_factory=dict, repr=False)

    @property
    def name(self) -> str:
        return f"{self.metric}@{self.k}"

    def line(self) -> str:
        return f"{self.name}\t{self.average:.6f}\t{self.n_queries}"


def _reciprocal_rank(ranked: List[int], relevant: Set[int]) -> float:
    for rank, pid in enumerate(ranked, start=1):
        if pid in relevant:
            return 1.0 / rank
    return 0.0


def _success(ranked: List[int], relevant: Set[int]) -> float:
    return 1.0 if any(pid in relevant for pid in ranked) else 0.0


def _recall(ranked: List[int], relevant: Set[int]) -> float:
    return len(relevant.intersection(ranked)) / len(relevant)


METRICS: Dict[str, QueryMetric] = {
    "mrr": _reciprocal_rank,
    "success": _success,
    "recall": _recall,
}


def evaluate(results: RankedResults, qrels: Qrels, metric: str, k: int) -> MetricReport:
    """
    Macro-average `metric` at cutoff k.

    Queries absent from the qrels are skipped with a warning; an empty
    overlap raises EmptyIntersection.
    """
    if metric not in METRICS:
        raise InvalidParams(f"unknown metric {metric!r}; choose from {sorted(METRICS)}")
    if k < 1:
        raise InvalidParams(f"metric cutoff must be positive, got {k}")
    per_query_fn = METRICS[metric]

    per_query: Dict[int, float] = {}
    skipped = 0
    for qid, hits in results.items():
        relevant = qrels.get(qid)
        if not relevant:
            skipped += 1
            continue
        per_query[qid] = per_query_fn([pid for pid, _ in hits[:k]], relevant)

    if skipped:
        logger.warning(f"{skipped} quer(ies) have no qrels entry and were skipped for {metric}@{k}")
    if not per_query:
        raise EmptyIntersection("no query appears in both the results and the qrels")

    average = math.fsum(per_query.values()) / len(per_query)
    return MetricReport(metric=metric, k=k, average=average, n_queries=len(per_query),
                        n_skipped=skipped, per_query=per_query)


def mrr_at_k(results: RankedResults, qrels: Qrels, k: int) -> MetricReport:
    return evaluate(results, qrels, "mrr", k)


def success_at_k(results: RankedResults, qrels: Qrels, k: int) -> MetricReport:
    return evaluate(results, qrels, "success", k)


def recall_at_k(results: RankedResults, qrels: Qrels, k: int) -> MetricReport:
    return evaluate(results, qrels, "recall", k)


_METRIC_PATTERN = re.compile(r"^(mrr|success|recall)@(\d+)$")


def parse_metric(text: str) -> Tuple[str, int]:
    """'MRR@10' -> ('mrr', 10)"""
    match = _METRIC_PATTERN.match(text.strip().lower())
    if not match:
        raise InvalidParams(f"cannot parse metric {text!r}; expected e.g. mrr@10, success@5, recall@50")
    k = int(match.group(2))
    if k < 1:
        raise InvalidParams(f"metric cutoff must be positive in {text!r}")
    return match.group(1), k


def overlap_at_k(results: RankedResults, reference: RankedResults, k: int) -> float:
    """Mean fraction of each reference top-k that also appears in the results' top-k"""
    if k < 1:
        raise InvalidParams(f"k must be positive, got {k}")
    shared = [qid for qid in reference if qid in results and reference[qid]]
    if not shared:
        raise EmptyIntersection("no query appears in both rankings")
    fractions = []
    for qid in shared:
        expected = {pid for pid, _ in reference[qid][:k]}
        found = {pid for pid, _ in results[qid][:k]}
        fractions.append(len(expected & found) / len(expected))
    return math.fsum(fractions) / len(fractions)

"""
Evaluation for Residex: ranking metrics and the latency benchmark
"""

from evaluation.bench import (
    BenchRow,
    bench_latency,
    build_sweep,
    latency_monotonicity_warnings,
    parse_int_list,
    summarize,
    write_bench,
)
from evaluation.metrics import (
    MetricReport,
    evaluate,
    mrr_at_k,
    overlap_at_k,
    parse_metric,
    recall_at_k,
    success_at_k,
)

__all__ = [
    'MetricReport', 'evaluate', 'mrr_at_k', 'success_at_k', 'recall_at_k', 'parse_metric', 'overlap_at_k',
    'BenchRow', 'build_sweep', 'bench_latency', 'latency_monotonicity_warnings', 'parse_int_list',
    'write_bench', 'summarize',
]

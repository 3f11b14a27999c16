"""Tests for the latency benchmark harness."""

import pytest

from evaluation import BenchRow, bench_latency, build_sweep, latency_monotonicity_warnings, parse_int_list, write_bench
import evaluation.bench as bench
from evaluation.bench import BENCH_COLUMNS
from indexer import build_index
from searcher import SearchParams
from synth import synth
from utils.errors import InvalidParams


def _row(nprobe, ncandidates, mean_ms, label="idx"):
    return BenchRow(index=label, bits=2, nprobe=nprobe, ncandidates=ncandidates, k=10, repetitions=3,
                    n_queries=5, mean_ms=mean_ms, min_ms=mean_ms, max_ms=mean_ms)


class TestSweep:

    def test_six_points(self):
        sweep = build_sweep([1, 2, 4], [4096, 16384])
        assert [(p.nprobe, p.ncandidates) for p in sweep] == [
            (1, 4096), (1, 16384), (2, 8192), (2, 32768), (4, 16384), (4, 65536),
        ]

    def test_parse_int_list(self):
        assert parse_int_list("1,2,4") == [1, 2, 4]
        with pytest.raises(InvalidParams):
            parse_int_list("1,x")
        with pytest.raises(InvalidParams):
            parse_int_list("0,1")


class TestBenchLatency:

    def test_one_row_per_point(self, clustered, clustered_index):
        index, ivf = clustered_index
        sweep = build_sweep([1, 2, 4], [8, 16], k=5)
        rows = bench_latency(index, ivf, clustered.queries, sweep, repetitions=1, qrels=clustered.qrels)
        assert len(rows) == 6
        for row, params in zip(rows, sweep):
            assert (row.nprobe, row.ncandidates, row.k) == (params.nprobe, params.ncandidates, params.k)
            assert 0.0 < row.min_ms <= row.mean_ms <= row.max_ms
            assert 0.0 <= row.success_at_5 <= 1.0
            assert 0.0 <= row.mrr_at_10 <= 1.0
            assert row.qps_parallel is None

    def test_three_repetitions(self, clustered, clustered_index, monkeypatch):
        index, ivf = clustered_index
        calls = []
        real_search = bench.search

        def counting_search(*args, **kwargs):
            calls.append(1)
            return real_search(*args, **kwargs)

        monkeypatch.setattr(bench, "search", counting_search)
        rows = bench_latency(index, ivf, clustered.queries, [SearchParams(nprobe=1, ncandidates=8, k=5)], repetitions=3)
        assert len(calls) == 3 * len(clustered.queries)
        assert rows[0].repetitions == 3
        assert rows[0].mrr_at_10 is None

    def test_parallel_throughput(self, clustered, clustered_index):
        index, ivf = clustered_index
        rows = bench_latency(index, ivf, clustered.queries, [SearchParams(nprobe=1, ncandidates=8, k=5)],
                             repetitions=1, threads=2)
        assert rows[0].qps_parallel > 0

    def test_empty_sweep(self, clustered, clustered_index):
        index, ivf = clustered_index
        assert bench_latency(index, ivf, clustered.queries, []) == []

    def test_bad_repetitions(self, clustered, clustered_index):
        index, ivf = clustered_index
        with pytest.raises(InvalidParams):
            bench_latency(index, ivf, clustered.queries, [SearchParams(nprobe=1, ncandidates=8, k=5)], repetitions=0)


class TestReporting:

    def test_monotonicity_warnings(self):
        rows = [_row(1, 4096, 2.0), _row(1, 16384, 1.5), _row(2, 8192, 1.0), _row(2, 32768, 3.0)]
        warnings = latency_monotonicity_warnings(rows)
        assert len(warnings) == 1
        assert "nprobe=1" in warnings[0]

    def test_write_bench(self, tmp_path):
        path = tmp_path / "bench.tsv"
        write_bench([_row(1, 4096, 2.5)], path)
        header, line = path.read_text().splitlines()
        assert header.split("\t") == list(BENCH_COLUMNS)
        assert line.split("\t") == ["idx", "2", "1", "4096", "10", "3", "5", "2.5000", "2.5000", "2.5000", "-", "-", "-"]


class TestLargeIndex:
    """Smoke run of the full sweep on an index of about 100k embeddings."""

    def test_full_sweep(self, tmp_path):
        data = synth(profile="clustered", n_passages=4400, tokens_per_passage=32, dim=32, n_clusters=64,
                     seed=21, n_queries=4, query_len=8)
        assert data.corpus.n_embeddings >= 100_000
        index, ivf = build_index(data.corpus, bits=2, seed=0)
        sweep = build_sweep([1, 2, 4], [2 ** 12, 2 ** 14], k=10)
        rows = bench_latency(index, ivf, data.queries, sweep, repetitions=3, qrels=data.qrels)
        assert [(row.nprobe, row.ncandidates) for row in rows] == [(p.nprobe, p.ncandidates) for p in sweep]
        assert all(row.repetitions == 3 and row.n_queries == 4 for row in rows)
        assert all(0.0 < row.min_ms <= row.mean_ms <= row.max_ms for row in rows)
        write_bench(rows, tmp_path / "bench.tsv")
        assert len((tmp_path / "bench.tsv").read_text().splitlines()) == 1 + 6

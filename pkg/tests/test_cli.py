"""End-to-end tests for the command-line interface."""

import json

import pytest

from indexer.storage import FILES
from main import __version__, build_parser, main


def _run_pipeline(root):
    data, index, results = root / "data", root / "idx", root / "results.tsv"
    assert main(["synth", "--out", str(data), "--n-passages", "30", "--dim", "16", "--n-clusters", "8",
                 "--n-queries", "6", "--seed", "5"]) == 0
    assert main(["index", "--embeddings", str(data / "corpus.emb"), "--out", str(index), "--threads", "2"]) == 0
    assert main(["search", "--index", str(index), "--queries", str(data / "queries.emb"), "--out", str(results),
                 "--nprobe", "2", "--k", "5"]) == 0
    return data, index, results


class TestArguments:

    def test_version(self, capsys):
        assert main(["--version"]) == 0
        assert __version__ in capsys.readouterr().out

    def test_unknown_flag(self):
        assert main(["--bogus"]) == 1

    def test_missing_subcommand(self):
        assert main([]) == 1

    def test_global_flags_after_subcommand(self, tmp_path):
        args = build_parser().parse_args(["stats", "--index", str(tmp_path), "--threads", "3", "--log-level", "debug"])
        assert args.threads == 3
        assert args.log_level == "DEBUG"

    def test_global_flags_before_subcommand(self, tmp_path):
        args = build_parser().parse_args(["--threads", "3", "stats", "--index", str(tmp_path)])
        assert args.threads == 3

    def test_search_defaults(self, tmp_path):
        args = build_parser().parse_args(["search", "--index", "i", "--queries", "q", "--out", "o"])
        assert (args.nprobe, args.ncandidates, args.k) == (2, None, 10)


class TestFailures:

    def test_missing_input_file(self, tmp_path, capsys):
        code = main(["index", "--embeddings", str(tmp_path / "nope.emb"), "--out", str(tmp_path / "idx")])
        assert code == 2
        payload = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert payload["error"] == "IoFailure"
        assert payload["exit_code"] == 2

    def test_validation_failure(self, tmp_path, capsys):
        bad = tmp_path / "bad.emb"
        bad.write_bytes(b"not an embedding file at all")
        assert main(["index", "--embeddings", str(bad), "--out", str(tmp_path / "idx")]) == 1
        payload = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert payload["error"] == "MalformedHeader"

    def test_undecodable_qrels(self, tmp_path, capsys):
        results, qrels = tmp_path / "r.tsv", tmp_path / "q.tsv"
        results.write_text("0\t1\t5\t1.0\n")
        qrels.write_bytes(b"0\t5\n\xff\xfe\t1\n")
        assert main(["eval", "--results", str(results), "--qrels", str(qrels), "--metric", "mrr@10"]) == 1
        payload = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert payload["error"] == "MalformedLine"
        assert "line 2" in payload["message"]

    def test_unexpected_error_still_reports(self, tmp_path, capsys, monkeypatch):
        def broken(args):
            raise RuntimeError("boom")

        monkeypatch.setattr("main.cmd_stats", broken)
        assert main(["stats", "--index", str(tmp_path)]) == 1
        payload = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert payload == {"error": "RuntimeError", "exit_code": 1, "message": "boom"}

    def test_bad_metric(self, tmp_path):
        results, qrels = tmp_path / "r.tsv", tmp_path / "q.tsv"
        results.write_text("0\t1\t5\t1.0\n")
        qrels.write_text("0\t5\n")
        assert main(["eval", "--results", str(results), "--qrels", str(qrels), "--metric", "ndcg@10"]) == 1


class TestPipeline:

    def test_runs_are_reproducible(self, tmp_path):
        _, index_a, results_a = _run_pipeline(tmp_path / "a")
        _, index_b, results_b = _run_pipeline(tmp_path / "b")
        for name in FILES:
            assert (index_a / name).read_bytes() == (index_b / name).read_bytes()
        assert results_a.read_bytes() == results_b.read_bytes()

    def test_eval_and_stats(self, tmp_path, capsys):
        data, index, results = _run_pipeline(tmp_path)
        capsys.readouterr()
        assert main(["eval", "--results", str(results), "--qrels", str(data / "qrels.tsv"),
                     "--metric", "mrr@10", "--metric", "success@5"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert [line.split("\t")[0] for line in lines] == ["mrr@10", "success@5"]
        assert all(0.0 <= float(line.split("\t")[1]) <= 1.0 for line in lines)

        assert main(["stats", "--index", str(index)]) == 0
        stats = dict(line.split("\t") for line in capsys.readouterr().out.splitlines())
        # dim 16 at 2 bits: 4-byte centroid id + 4 residual bytes
        assert stats["core_bytes_per_vector"] == "8"
        assert stats["core_ratio"] == "4.00"

    def test_oracle_bench_analyze(self, tmp_path):
        data, index, _ = _run_pipeline(tmp_path)
        oracle = tmp_path / "oracle.tsv"
        assert main(["oracle", "--embeddings", str(data / "corpus.emb"), "--queries", str(data / "queries.emb"),
                     "--k", "5", "--out", str(oracle)]) == 0
        assert len(oracle.read_text().splitlines()) == 6 * 5

        bench = tmp_path / "bench.tsv"
        assert main(["bench", "--index", str(index), "--queries", str(data / "queries.emb"),
                     "--qrels", str(data / "qrels.tsv"), "--probes", "1,2", "--cand-mults", "8,16",
                     "--k", "5", "--reps", "1", "--out", str(bench)]) == 0
        assert len(bench.read_text().splitlines()) == 1 + 4

        stats_dir = tmp_path / "stats"
        assert main(["analyze", "--index", str(index), "--tokens", str(data / "tokens.tsv"),
                     "--kmeans-iters", "3", "--out", str(stats_dir)]) == 0
        assert (stats_dir / "exemplars.tsv").exists()

    @pytest.mark.parametrize("flag", ["--embeddings", "--index"])
    def test_oracle_targets(self, tmp_path, flag):
        data, index, _ = _run_pipeline(tmp_path)
        target = data / "corpus.emb" if flag == "--embeddings" else index
        out = tmp_path / "oracle.tsv"
        assert main(["oracle", flag, str(target), "--queries", str(data / "queries.emb"), "--out", str(out)]) == 0
        assert out.exists()

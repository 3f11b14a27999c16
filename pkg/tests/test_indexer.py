"""Tests for index construction, the index directory and byte accounting."""

import json

import numpy as np
import pytest

from formats import EmbeddingSet
from indexer import build_index, core_bytes_per_vector, index_stats, invert, load_index, sample_passages, save_index
from indexer.storage import FILES
from utils.errors import EmptyCorpus, InvalidParams, IoFailure, MalformedIndex


def _unit(m):
    m = np.asarray(m, dtype=np.float64)
    return (m / np.linalg.norm(m, axis=1, keepdims=True)).astype(np.float32)


def _assert_same_index(a, b):
    index_a, ivf_a = a
    index_b, ivf_b = b
    assert np.array_equal(index_a.codec.centroids, index_b.codec.centroids)
    assert np.array_equal(index_a.codec.cutoffs, index_b.codec.cutoffs)
    assert np.array_equal(index_a.codec.weights, index_b.codec.weights)
    assert index_a.codec.bits == index_b.codec.bits
    assert np.array_equal(index_a.passage_ids, index_b.passage_ids)
    assert np.array_equal(index_a.doclens, index_b.doclens)
    assert np.array_equal(index_a.codes, index_b.codes)
    assert np.array_equal(index_a.residuals, index_b.residuals)
    assert np.array_equal(ivf_a.list_offsets, ivf_b.list_offsets)
    assert np.array_equal(ivf_a.postings, ivf_b.postings)


class TestBuildIndex:

    def test_four_separated_vectors(self):
        vectors = _unit(np.eye(4) + 0.01)
        corpus = EmbeddingSet.from_passages([(i, vectors[i:i + 1]) for i in range(4)])
        index, ivf = build_index(corpus, bits=1, seed=0)
        assert index.codec.n_centroids & (index.codec.n_centroids - 1) == 0
        assert index.n_embeddings == 4
        assert sorted(ivf.postings.tolist()) == [0, 1, 2, 3]
        for c in range(ivf.n_centroids):
            for e in ivf.postings_for(c):
                assert index.codes[e] == c
        # each vector decodes to its centroid plus its own quantized residual
        for e in range(4):
            decoded = index.decode_embeddings(np.array([e]))[0]
            c = index.codes[e]
            residual = vectors[e] - index.codec.centroids[c]
            quantized = index.codec.weights[index.codec.bucketize(residual[None, :])[0]]
            assert np.allclose(decoded - index.codec.centroids[c], quantized)

    def test_single_vector_corpus(self):
        corpus = EmbeddingSet.from_passages([(7, _unit([[1.0, 2.0, 3.0, 4.0]]))])
        index, ivf = build_index(corpus, bits=2, seed=0)
        assert index.codec.n_centroids == 1
        assert ivf.postings.tolist() == [0]
        assert ivf.list_offsets.tolist() == [0, 1]

    def test_chunk_size_does_not_change_output(self, clustered):
        corpus = clustered.corpus
        reference = build_index(corpus, bits=2, seed=0, chunk_size=corpus.n_passages)
        for chunk_size in (1, 7):
            _assert_same_index(build_index(corpus, bits=2, seed=0, chunk_size=chunk_size), reference)

    def test_threads_do_not_change_output(self, clustered):
        one = build_index(clustered.corpus, bits=1, seed=0, chunk_size=3, threads=1)
        four = build_index(clustered.corpus, bits=1, seed=0, chunk_size=3, threads=4)
        _assert_same_index(one, four)

    def test_offsets_and_inversion(self, clustered_index):
        index, ivf = clustered_index
        assert int(index.offsets[-1]) == index.n_embeddings
        assert np.array_equal(np.diff(index.offsets.astype(np.int64)), index.doclens.astype(np.int64))
        assert np.array_equal(np.sort(ivf.postings), np.arange(index.n_embeddings))
        for c in range(ivf.n_centroids):
            members = ivf.postings_for(c)
            assert np.array_equal(members, np.flatnonzero(index.codes == c))

    def test_passage_positions(self, clustered_index):
        index, _ = clustered_index
        positions = index.passage_positions(np.arange(index.n_embeddings))
        assert np.array_equal(positions, np.repeat(np.arange(index.n_passages), index.doclens.astype(np.int64)))

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            build_index(EmbeddingSet.from_passages([]))

    def test_bad_bits(self, clustered):
        with pytest.raises(InvalidParams):
            build_index(clustered.corpus, bits=3)


class TestSamplePassages:

    def test_size_is_ceil_sqrt(self):
        assert len(sample_passages(100, seed=0)) == 10
        assert len(sample_passages(101, seed=0)) == 11
        assert len(sample_passages(1, seed=0)) == 1

    def test_multiplier(self):
        assert len(sample_passages(100, seed=0, sample_mult=2.0)) == 20
        assert len(sample_passages(4, seed=0, sample_mult=10.0)) == 4

    def test_seeded_sorted_unique(self):
        a = sample_passages(1000, seed=3)
        assert np.array_equal(a, sample_passages(1000, seed=3))
        assert np.all(np.diff(a) > 0)


class TestInvert:

    def test_lists_ascending(self):
        ivf = invert(np.array([2, 0, 2, 1, 0]), 4)
        assert ivf.list_offsets.tolist() == [0, 2, 3, 5, 5]
        assert ivf.postings_for(0).tolist() == [1, 4]
        assert ivf.postings_for(2).tolist() == [0, 2]
        assert ivf.postings_for(3).tolist() == []


class TestStorage:

    def test_round_trip(self, clustered_index, tmp_path):
        index, ivf = clustered_index
        save_index(index, ivf, tmp_path / "idx")
        _assert_same_index(load_index(tmp_path / "idx"), (index, ivf))

    def test_files_identical_across_chunkings(self, clustered, tmp_path):
        for chunk_size, name in ((1, "a"), (clustered.corpus.n_passages, "b")):
            index, ivf = build_index(clustered.corpus, bits=2, seed=0, chunk_size=chunk_size)
            save_index(index, ivf, tmp_path / name)
        for file in FILES:
            assert (tmp_path / "a" / file).read_bytes() == (tmp_path / "b" / file).read_bytes()

    def test_meta(self, clustered_index, tmp_path):
        index, ivf = clustered_index
        save_index(index, ivf, tmp_path / "idx")
        meta = json.loads((tmp_path / "idx" / "meta.json").read_text())
        assert meta["dim"] == index.codec.dim
        assert meta["bits"] == 2
        assert meta["n_embeddings"] == index.n_embeddings
        assert meta["seed"] == 0

    def test_truncated_residuals(self, clustered_index, tmp_path):
        index, ivf = clustered_index
        save_index(index, ivf, tmp_path / "idx")
        path = tmp_path / "idx" / "residuals.bin"
        path.write_bytes(path.read_bytes()[:-1])
        with pytest.raises(MalformedIndex) as exc:
            load_index(tmp_path / "idx")
        assert exc.value.file == "residuals.bin"
        assert "length" in exc.value.invariant

    def test_missing_ivf(self, clustered_index, tmp_path):
        index, ivf = clustered_index
        save_index(index, ivf, tmp_path / "idx")
        (tmp_path / "idx" / "ivf.bin").unlink()
        with pytest.raises(MalformedIndex) as exc:
            load_index(tmp_path / "idx")
        assert exc.value.file == "ivf.bin"

    def test_postings_under_wrong_centroid(self, clustered_index, tmp_path):
        index, ivf = clustered_index
        save_index(index, ivf, tmp_path / "idx")
        path = tmp_path / "idx" / "ivf.bin"
        raw = bytearray(path.read_bytes())
        postings_start = 8 * (ivf.n_centroids + 1)
        # swap the first posting with the last one
        first = raw[postings_start:postings_start + 4]
        raw[postings_start:postings_start + 4] = raw[-4:]
        raw[-4:] = first
        path.write_bytes(bytes(raw))
        if index.codes[ivf.postings[0]] != index.codes[ivf.postings[-1]]:
            with pytest.raises(MalformedIndex):
                load_index(tmp_path / "idx")

    def test_code_out_of_range(self, clustered_index, tmp_path):
        index, ivf = clustered_index
        save_index(index, ivf, tmp_path / "idx")
        path = tmp_path / "idx" / "codes.bin"
        raw = bytearray(path.read_bytes())
        raw[0:4] = (index.codec.n_centroids).to_bytes(4, "little")
        path.write_bytes(bytes(raw))
        with pytest.raises(MalformedIndex) as exc:
            load_index(tmp_path / "idx")
        assert exc.value.file == "codes.bin"

    def test_zero_passages(self, clustered_index, tmp_path):
        index, ivf = clustered_index
        save_index(index, ivf, tmp_path / "idx")
        meta_path = tmp_path / "idx" / "meta.json"
        meta = json.loads(meta_path.read_text())
        meta.update(n_passages=0, n_embeddings=0)
        meta_path.write_text(json.dumps(meta))
        (tmp_path / "idx" / "doclens.bin").write_bytes((0).to_bytes(8, "little"))
        with pytest.raises(MalformedIndex) as exc:
            load_index(tmp_path / "idx")
        assert exc.value.file == "doclens.bin"
        assert "no passages" in exc.value.invariant

    def test_missing_directory(self, tmp_path):
        with pytest.raises(IoFailure):
            load_index(tmp_path / "nowhere")


class TestIndexStats:

    def test_core_bytes(self):
        assert core_bytes_per_vector(128, 2) == 36
        assert core_bytes_per_vector(128, 1) == 20
        assert core_bytes_per_vector(2, 1) == 5

    def test_ratios_at_dim_128(self):
        rng = np.random.default_rng(0)
        corpus = EmbeddingSet.from_passages([(i, _unit(rng.standard_normal((4, 128)))) for i in range(16)])
        for bits, core, ratio in ((2, 36, 7.11), (1, 20, 12.8)):
            index, _ = build_index(corpus, bits=bits, seed=0)
            stats = index_stats(index)
            assert stats.core_bytes_per_vector == core
            assert stats.baseline_bytes_per_vector == 256
            assert round(stats.core_ratio, 2) == ratio
            assert stats.total_ratio < stats.core_ratio

    def test_component_sizes_match_files(self, clustered_index, tmp_path):
        index, ivf = clustered_index
        save_index(index, ivf, tmp_path / "idx")
        stats = index_stats(index)
        for name, size in stats.component_bytes.items():
            assert (tmp_path / "idx" / name).stat().st_size == size
        assert stats.total_bytes == sum(stats.component_bytes.values())

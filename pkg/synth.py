#!/usr/bin/env python3
"""
Synthetic corpora
Seeded generator of passages, queries, exact qrels and token annotations
for testing and benchmarking without a trained encoder.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Union

import numpy as np

from config import DEFAULT_SEED
from formats import EmbeddingSet, Qrels, write_embeddings, write_qrels, write_tokens
from utils.errors import InvalidParams, IoFailure
from utils.logger import logger

PROFILES = ("clustered", "random")

CORPUS_FILE = "corpus.emb"
QUERIES_FILE = "queries.emb"
QRELS_FILE = "qrels.tsv"
TOKENS_FILE = "tokens.tsv"


@dataclass
class SynthCorpus:
    corpus: EmbeddingSet
    queries: EmbeddingSet
    qrels: Qrels
    # token behind every corpus embedding, in embedding-id order
    token_ids: np.ndarray


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    return (matrix / np.linalg.norm(matrix, axis=1, keepdims=True)).astype(np.float32)


def _validate(profile, n_passages, tokens_per_passage, dim, n_clusters, noise, spread, n_queries, query_len):
    if profile not in PROFILES:
        raise InvalidParams(f"profile must be one of {PROFILES}, got {profile!r}")
    for name, value in (("n_passages", n_passages), ("tokens_per_passage", tokens_per_passage), ("dim", dim),
                        ("n_clusters", n_clusters), ("n_queries", n_queries), ("query_len", query_len)):
        if value < 1:
            raise InvalidParams(f"{name} must be positive, got {value}")
    if not 0.0 <= noise < 1.0:
        raise InvalidParams(f"noise must be in [0, 1), got {noise}")
    if spread < 0.0:
        raise InvalidParams(f"spread must be non-negative, got {spread}")


def synth(profile: str = "clustered",
          n_passages: int = 100,
          tokens_per_passage: int = 32,
          dim: int = 32,
          n_clusters: int = 16,
          noise: float = 0.1,
          seed: int = DEFAULT_SEED,
          n_queries: int = 20,
          query_len: int = 8,
          spread: float = 0.25) -> SynthCorpus:
    """
    Generate a corpus and queries with exact relevance.

    clustered: every token draws one of n_clusters unit directions (its
    token id) and is that direction jittered by `spread`, renormalized.
    random: rows are uniform unit vectors; token ids are still drawn so the
    two profiles annotate alike.

    Passage lengths are uniform in [ceil(tokens_per_passage / 2),
    tokens_per_passage]. Each query copies min(query_len, length) distinct
    rows of one source passage, jittered by `noise`; noise=0 copies them
    exactly. The source passage is the query's only relevant passage.
    """
    _validate(profile, n_passages, tokens_per_passage, dim, n_clusters, noise, spread, n_queries, query_len)
    rng = np.random.default_rng(seed)

    low = max(1, (tokens_per_passage + 1) // 2)
    doclens = rng.integers(low, tokens_per_passage + 1, size=n_passages)
    total = int(doclens.sum())
    token_ids = rng.integers(n_clusters, size=total)

    if profile == "clustered":
        directions = _unit_rows(rng.standard_normal((n_clusters, dim)))
        jitter = rng.standard_normal((total, dim)) * (spread / np.sqrt(dim))
        vectors = _unit_rows(directions[token_ids] + jitter)
    else:
        vectors = _unit_rows(rng.standard_normal((total, dim)))

    corpus = EmbeddingSet(dim=dim, passage_ids=np.arange(n_passages), doclens=doclens, vectors=vectors)

    query_rows = []
    query_lens = []
    qrels: Qrels = {}
    for qid in range(n_queries):
        source = int(rng.integers(n_passages))
        rows = corpus.matrix(source)
        picked = np.sort(rng.choice(rows.shape[0], size=min(query_len, rows.shape[0]), replace=False))
        Q = rows[picked].copy()
        if noise > 0.0:
            Q = _unit_rows(Q.astype(np.float64) + rng.standard_normal(Q.shape) * (noise / np.sqrt(dim)))
        query_rows.append(Q)
        query_lens.append(len(picked))
        qrels[qid] = {source}

    queries = EmbeddingSet(dim=dim, passage_ids=np.arange(n_queries), doclens=query_lens,
                           vectors=np.concatenate(query_rows, axis=0))
    logger.info(f"Synthesized {profile} corpus: {n_passages} passage(s), {total} embedding(s), dim={dim}, "
                f"{n_clusters} direction(s); {n_queries} quer(ies), noise={noise}, seed={seed}")
    return SynthCorpus(corpus=corpus, queries=queries, qrels=qrels, token_ids=token_ids)


def write_synth(result: SynthCorpus, out_dir: Union[str, Path]) -> Dict[str, Path]:
    """Write the corpus, queries, qrels and token sidecar into out_dir"""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IoFailure(f"cannot create {out_dir}: {e}") from e
    paths = {
        "corpus": out_dir / CORPUS_FILE,
        "queries": out_dir / QUERIES_FILE,
        "qrels": out_dir / QRELS_FILE,
        "tokens": out_dir / TOKENS_FILE,
    }
    write_embeddings(result.corpus, paths["corpus"])
    write_embeddings(result.queries, paths["queries"])
    write_qrels(result.qrels, paths["qrels"])
    write_tokens(result.token_ids, paths["tokens"])
    logger.info(f"Wrote synthetic corpus to {out_dir}")
    return paths

#!/usr/bin/env python3
"""
Exhaustive reference scorer
Scores every passage against every query row with plain loops. Deliberately
independent of the searcher: no inverted lists, no candidate pruning.
"""

from typing import List, Sequence, Tuple, Union

import numpy as np

from formats import EmbeddingSet, RankedResults
from indexer import CompressedIndex
from utils.errors import DimensionMismatch, InvalidParams
from utils.logger import logger


def _passage_score(Q: np.ndarray, D: np.ndarray, clamp: bool) -> float:
    total = 0.0
    for q in Q:
        best = float(np.max(D @ q))
        if clamp:
            best = max(best, 0.0)
        total += best
    return total


def _rank_all(Q: np.ndarray, passages: Sequence[Tuple[int, np.ndarray]], dim: int, k: int, clamp: bool) -> List[Tuple[int, float]]:
    if k < 1:
        raise InvalidParams(f"k must be positive, got {k}")
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[1] != dim or Q.shape[0] == 0:
        raise DimensionMismatch(f"expected a non-empty query of dim {dim}, got shape {Q.shape}")
    scored = []
    for pid, D in passages:
        scored.append((int(pid), _passage_score(Q, np.asarray(D, dtype=np.float64), clamp)))
    scored.sort(key=lambda hit: (-hit[1], hit[0]))
    return scored[:k]


def brute_force_search(Q: np.ndarray, corpus: EmbeddingSet, k: int, clamp: bool = False) -> List[Tuple[int, float]]:
    """Top k passages of an uncompressed corpus by exact MaxSim"""
    return _rank_all(Q, corpus, corpus.dim, k, clamp)


def brute_force_decoded(Q: np.ndarray, index: CompressedIndex, k: int, clamp: bool = False) -> List[Tuple[int, float]]:
    """Top k passages of a compressed index by MaxSim over the decoded vectors"""
    passages = ((int(index.passage_ids[p]), index.decode_passage(p)) for p in range(index.n_passages))
    return _rank_all(Q, passages, index.codec.dim, k, clamp)


def decoded_corpus(index: CompressedIndex) -> EmbeddingSet:
    """The index decoded back into an embedding set (rows are not unit norm)"""
    return EmbeddingSet(
        dim=index.codec.dim,
        passage_ids=index.passage_ids,
        doclens=index.doclens,
        vectors=index.codec.decompress(index.codes, index.residuals),
    )


def oracle_batch(queries: EmbeddingSet, target: Union[EmbeddingSet, CompressedIndex], k: int,
                 clamp: bool = False) -> RankedResults:
    """Oracle ranking for every query, against raw embeddings or a decoded index"""
    if isinstance(target, CompressedIndex):
        scorer = brute_force_decoded
        logger.info(f"Oracle over {target.n_passages} decoded passage(s) for {queries.n_passages} quer(ies)")
    else:
        scorer = brute_force_search
        logger.info(f"Oracle over {target.n_passages} raw passage(s) for {queries.n_passages} quer(ies)")
    return {qid: scorer(Q, target, k, clamp) for qid, Q in queries}

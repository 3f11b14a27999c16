#!/usr/bin/env python3
"""
Two-stage retrieval
Candidate generation from the inverted lists with approximate MaxSim lower
bounds, then exact MaxSim over the fully decoded candidates.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import List, NamedTuple, Tuple

import numpy as np

from config import THREADS, resolve_threads
from formats import EmbeddingSet, RankedResults
from indexer import CompressedIndex, InvertedLists
from searcher.params import SearchParams
from utils.errors import DimensionMismatch
from utils.logger import logger


class Candidates(NamedTuple):
    positions: np.ndarray     # passage positions in the index, ascending
    passage_ids: np.ndarray
    scores: np.ndarray        # approximate (lower-bound) scores


def _as_matrix(Q: np.ndarray, dim: int) -> np.ndarray:
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[1] != dim:
        raise DimensionMismatch(f"expected query rows of dim {dim}, got shape {Q.shape}")
    return Q


def maxsim(Q: np.ndarray, D: np.ndarray) -> float:
    """Sum over query rows of the best dot product against any passage row"""
    Q = np.asarray(Q, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    if Q.ndim != 2 or D.ndim != 2 or Q.shape[1] != D.shape[1]:
        raise DimensionMismatch(f"cannot score Q{Q.shape} against D{D.shape}")
    if Q.shape[0] == 0 or D.shape[0] == 0:
        raise DimensionMismatch("query and passage need at least one row each")
    return float((Q @ D.T).max(axis=1).sum())


def probe_centroids(Q: np.ndarray, centroids: np.ndarray, nprobe: int) -> np.ndarray:
    """Per query row, the nprobe centroids with the largest dot product (lower id on ties)"""
    scores = Q @ np.asarray(centroids, dtype=np.float64).T
    return np.argsort(-scores, axis=1, kind="stable")[:, :nprobe]


def generate_candidates(Q: np.ndarray, index: CompressedIndex, ivf: InvertedLists, nprobe: int) -> Candidates:
    """
    Approximate MaxSim over the embeddings found through the inverted lists.

    For every query row the postings of its nprobe nearest centroids are
    decoded and max-reduced per passage; a passage with nothing gathered for
    a row contributes 0, and gathered maxima are clamped at 0, so each
    passage's score is a lower bound on its clamped decoded MaxSim.
    """
    Q = _as_matrix(Q, index.codec.dim)
    probes = probe_centroids(Q, index.codec.centroids, nprobe)
    per_row = [np.concatenate([ivf.postings_for(int(c)) for c in row]) for row in probes]

    gathered = np.unique(np.concatenate(per_row)) if per_row else np.zeros(0, dtype=np.uint32)
    if gathered.size == 0:
        empty = np.zeros(0, dtype=np.int64)
        return Candidates(empty, np.zeros(0, dtype=np.uint64), np.zeros(0))

    decoded = index.decode_embeddings(gathered).astype(np.float64)
    owners = index.passage_positions(gathered)
    positions = np.unique(owners)
    slots = np.searchsorted(positions, owners)

    scores = np.zeros(positions.size, dtype=np.float64)
    for q, eids in zip(Q, per_row):
        if eids.size == 0:
            continue
        cols = np.searchsorted(gathered, eids)
        row_max = np.zeros(positions.size, dtype=np.float64)
        np.maximum.at(row_max, slots[cols], decoded[cols] @ q)
        scores += row_max

    logger.debug(f"Candidate generation: {gathered.size} embedding(s) gathered, {positions.size} passage(s) touched")
    return Candidates(positions, index.passage_ids[positions], scores)


def _rank(passage_ids: np.ndarray, scores: np.ndarray, limit: int) -> np.ndarray:
    """Order by score descending, then passage id ascending"""
    return np.lexsort((passage_ids, -scores))[:limit]


def search(Q: np.ndarray, index: CompressedIndex, ivf: InvertedLists, params: SearchParams) -> List[Tuple[int, float]]:
    """Rank passages for one query: top ncandidates by approximate score, rescored exactly"""
    params.validate(index.codec.n_centroids)
    Q = _as_matrix(Q, index.codec.dim)
    candidates = generate_candidates(Q, index, ivf, params.nprobe)

    chosen = _rank(candidates.passage_ids, candidates.scores, params.ncandidates)
    positions = candidates.positions[chosen]
    passage_ids = candidates.passage_ids[chosen]
    exact = np.array([maxsim(Q, index.decode_passage(int(p))) for p in positions], dtype=np.float64)

    final = _rank(passage_ids, exact, params.k)
    return [(int(passage_ids[i]), float(exact[i])) for i in final]


def search_batch(queries: EmbeddingSet, index: CompressedIndex, ivf: InvertedLists,
                 params: SearchParams, threads: int = THREADS) -> RankedResults:
    """Search every query independently; results keep the input query order"""
    params.validate(index.codec.n_centroids)
    if queries.n_passages == 0:
        return {}
    workers = min(resolve_threads(threads), queries.n_passages)
    logger.info(f"Searching {queries.n_passages} quer(ies) with nprobe={params.nprobe}, "
                f"ncandidates={params.ncandidates}, k={params.k} on {workers} thread(s)")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        ranked = list(pool.map(lambda item: search(item[1], index, ivf, params), queries))
    return {int(qid): hits for qid, hits in zip(queries.passage_ids, ranked)}

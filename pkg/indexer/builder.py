#!/usr/bin/env python3
"""
Index Construction
Centroid selection over a passage sample, chunked passage encoding, and index inversion
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from tqdm import tqdm

from codec import Codec, floor_power_of_two, reconstruction_error, select_num_centroids, train_codec, train_kmeans
from config import (
    DEFAULT_SEED,
    INDEX_BITS,
    INDEX_CHUNK_SIZE,
    KMEANS_ITERS,
    SAMPLE_MULT,
    SHOW_PROGRESS,
    THREADS,
    resolve_threads,
)
from formats import EmbeddingSet
from utils.errors import EmptyCorpus, InvalidParams
from utils.logger import logger


@dataclass
class CompressedIndex:
    """
    Compressed passages in embedding-id order.

    Embedding e belongs to passage position p iff offsets[p] <= e < offsets[p + 1].
    """
    codec: Codec
    passage_ids: np.ndarray
    doclens: np.ndarray
    codes: np.ndarray
    residuals: np.ndarray
    seed: int = DEFAULT_SEED
    sample_mult: float = SAMPLE_MULT
    offsets: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.passage_ids = np.asarray(self.passage_ids, dtype=np.uint64)
        self.doclens = np.asarray(self.doclens, dtype=np.uint32)
        self.codes = np.asarray(self.codes, dtype=np.uint32)
        self.residuals = np.asarray(self.residuals, dtype=np.uint8).reshape(-1, self.codec.code_bytes)
        self.offsets = np.zeros(len(self.doclens) + 1, dtype=np.uint64)
        np.cumsum(self.doclens, dtype=np.uint64, out=self.offsets[1:])

    @property
    def n_passages(self) -> int:
        return len(self.passage_ids)

    @property
    def n_embeddings(self) -> int:
        return int(self.offsets[-1])

    def passage_positions(self, embedding_ids: np.ndarray) -> np.ndarray:
        """Passage position owning each embedding id"""
        return np.searchsorted(self.offsets, np.asarray(embedding_ids, dtype=np.uint64), side="right").astype(np.int64) - 1

    def decode_embeddings(self, embedding_ids: np.ndarray) -> np.ndarray:
        return self.codec.decompress(self.codes[embedding_ids], self.residuals[embedding_ids])

    def decode_passage(self, position: int) -> np.ndarray:
        start, end = int(self.offsets[position]), int(self.offsets[position + 1])
        return self.codec.decompress(self.codes[start:end], self.residuals[start:end])


@dataclass
class InvertedLists:
    """Centroid -> ascending embedding ids, in compressed sparse row layout"""
    list_offsets: np.ndarray
    postings: np.ndarray

    def __post_init__(self):
        self.list_offsets = np.asarray(self.list_offsets, dtype=np.uint64)
        self.postings = np.asarray(self.postings, dtype=np.uint32)

    @property
    def n_centroids(self) -> int:
        return len(self.list_offsets) - 1

    def postings_for(self, centroid: int) -> np.ndarray:
        return self.postings[int(self.list_offsets[centroid]):int(self.list_offsets[centroid + 1])]


def invert(codes: np.ndarray, n_centroids: int) -> InvertedLists:
    """Counting-sort embedding ids by centroid; a stable sort keeps each list ascending"""
    codes = np.asarray(codes, dtype=np.uint32)
    postings = np.argsort(codes, kind="stable").astype(np.uint32)
    counts = np.bincount(codes, minlength=n_centroids)
    list_offsets = np.zeros(n_centroids + 1, dtype=np.uint64)
    np.cumsum(counts, dtype=np.uint64, out=list_offsets[1:])
    return InvertedLists(list_offsets=list_offsets, postings=postings)


def sample_passages(n_passages: int, seed: int, sample_mult: float = SAMPLE_MULT) -> np.ndarray:
    """Seeded sample of ceil(mult * sqrt(n)) passage positions without replacement, ascending"""
    if sample_mult <= 0:
        raise InvalidParams(f"sample_mult must be positive, got {sample_mult}")
    size = min(n_passages, max(1, math.ceil(sample_mult * math.sqrt(n_passages))))
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n_passages, size=size, replace=False))


def _chunks(embeddings: EmbeddingSet, chunk_size: int) -> List[Tuple[int, int]]:
    """Embedding-id ranges covering chunk_size passages each"""
    ranges = []
    for first in range(0, embeddings.n_passages, chunk_size):
        last = min(first + chunk_size, embeddings.n_passages)
        ranges.append((int(embeddings.offsets[first]), int(embeddings.offsets[last])))
    return ranges


def build_index(embeddings: EmbeddingSet,
                bits: int = INDEX_BITS,
                seed: int = DEFAULT_SEED,
                chunk_size: int = INDEX_CHUNK_SIZE,
                sample_mult: float = SAMPLE_MULT,
                kmeans_iters: int = KMEANS_ITERS,
                threads: int = THREADS) -> Tuple[CompressedIndex, InvertedLists]:
    """
    Build a compressed index and its inverted lists.

    Output is fully determined by the embeddings, bits, seed, sample_mult
    and kmeans_iters; chunk_size and threads only change how work is split.
    """
    if embeddings.n_passages == 0:
        raise EmptyCorpus("cannot index an empty corpus")
    if bits not in (1, 2):
        raise InvalidParams(f"bits must be 1 or 2, got {bits}")
    if chunk_size < 1:
        raise InvalidParams(f"chunk_size must be positive, got {chunk_size}")
    embeddings.validate()

    logger.info("=== Building index ===")
    logger.info(f"Corpus: {embeddings.n_passages} passage(s), {embeddings.n_embeddings} embedding(s), dim={embeddings.dim}")

    # 1) Centroid selection over a passage sample
    positions = sample_passages(embeddings.n_passages, seed, sample_mult)
    sample = np.concatenate([embeddings.matrix(i) for i in positions], axis=0)
    k = min(select_num_centroids(embeddings.n_embeddings), floor_power_of_two(sample.shape[0]))
    logger.info(f"Sampled {len(positions)} passage(s) ({sample.shape[0]} vectors); training {k} centroids")
    centroids = train_kmeans(sample, k, iters=kmeans_iters, seed=seed)

    # 2) Residual quantizer on the same sample
    codec = train_codec(sample, centroids, bits)
    error = reconstruction_error(sample, codec)
    logger.info(f"Codec trained: {bits}-bit residuals, cutoffs={np.round(codec.cutoffs, 4).tolist()}, "
                f"MSE centroid-only={error.centroid_only:.6f} with-residual={error.with_residual:.6f}")

    # 3) Passage encoding, chunk by chunk; map() keeps chunk order
    ranges = _chunks(embeddings, chunk_size)
    workers = min(resolve_threads(threads), len(ranges))
    logger.info(f"Encoding {len(ranges)} chunk(s) of up to {chunk_size} passage(s) on {workers} thread(s)")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        encoded = list(tqdm(pool.map(lambda r: codec.compress(embeddings.vectors[r[0]:r[1]]), ranges),
                            total=len(ranges), desc="Encoding", disable=not SHOW_PROGRESS))
    codes = np.concatenate([c for c, _ in encoded])
    residuals = np.concatenate([r for _, r in encoded], axis=0)

    index = CompressedIndex(
        codec=codec,
        passage_ids=embeddings.passage_ids,
        doclens=embeddings.doclens,
        codes=codes,
        residuals=residuals,
        seed=seed,
        sample_mult=sample_mult,
    )

    # 4) Index inversion
    ivf = invert(index.codes, codec.n_centroids)
    logger.info(f"Inverted {index.n_embeddings} embedding(s) into {ivf.n_centroids} list(s); "
                f"largest list holds {int(np.diff(ivf.list_offsets.astype(np.int64)).max())}")
    return index, ivf

#!/usr/bin/env python3
"""
Centroid Selection
k-means++ seeding followed by a fixed number of Lloyd iterations, via scikit-learn
"""

import numpy as np
from sklearn.cluster import KMeans
from sklearn.metrics.pairwise import euclidean_distances

from config import DEFAULT_SEED, KMEANS_ITERS
from utils.errors import InsufficientSample, InvalidParams
from utils.logger import logger

MIN_CENTROIDS = 16
MAX_CENTROIDS = 2 ** 32


def floor_power_of_two(n: int) -> int:
    """Largest power of two <= n (n >= 1)"""
    return 1 << (int(n).bit_length() - 1)


def select_num_centroids(n_embeddings: int) -> int:
    """
    Number of centroids for a corpus of n_embeddings vectors.

    Rounds 16 * sqrt(n) down to a power of two, clamps to [16, 2**32] and
    then to the largest power of two not above n_embeddings. Evaluated in
    integers: 2**p <= 16 * sqrt(n)  <=>  4**p <= 256 * n.
    """
    if n_embeddings < 1:
        raise InvalidParams(f"n_embeddings must be positive, got {n_embeddings}")
    bound = 256 * n_embeddings
    p = 0
    while 4 ** (p + 1) <= bound:
        p += 1
    k = min(max(2 ** p, MIN_CENTROIDS), MAX_CENTROIDS)
    return min(k, floor_power_of_two(n_embeddings))


def squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """(n, k) squared Euclidean distances in float64, clipped at zero"""
    return euclidean_distances(
        np.asarray(points, dtype=np.float64),
        np.asarray(centroids, dtype=np.float64),
        squared=True,
    )


def fit_kmeans(sample: np.ndarray, k: int, iters: int = KMEANS_ITERS, seed: int = DEFAULT_SEED) -> KMeans:
    """
    Fit a seeded k-means model over a sample of token embeddings.

    One k-means++ initialisation, at most `iters` Lloyd steps, stopping
    early only when assignments stop changing. Empty clusters are moved to
    the points farthest from their centroid.
    """
    if k < 1:
        raise InvalidParams(f"k must be positive, got {k}")
    if iters < 1:
        raise InvalidParams(f"iters must be positive, got {iters}")
    points = np.asarray(sample, dtype=np.float64)
    if points.ndim != 2:
        raise InvalidParams("k-means sample must be a 2-D matrix")
    if points.shape[0] < k:
        raise InsufficientSample(f"k-means needs at least k={k} points, got {points.shape[0]}")

    model = KMeans(
        n_clusters=k,
        init="k-means++",
        n_init=1,
        max_iter=iters,
        tol=0.0,
        algorithm="lloyd",
        random_state=seed,
    )
    model.fit(points)
    logger.debug(f"k-means k={k}: {model.n_iter_} iteration(s), inertia {model.inertia_:.4f}")
    return model


def train_kmeans(sample: np.ndarray, k: int, iters: int = KMEANS_ITERS, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Train k centroids over sample; deterministic for a fixed seed"""
    return fit_kmeans(sample, k, iters=iters, seed=seed).cluster_centers_.astype(np.float32)

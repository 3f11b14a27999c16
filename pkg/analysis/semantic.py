#!/usr/bin/env python3
"""
Semantic-space analysis
Measures how tokens spread over centroids: distinct non-stopword tokens per
cluster and distinct clusters per token, with eCDFs and a baseline that
clusters random unit vectors carrying the same token multiplicities.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple, Union

import numpy as np

from codec import train_kmeans
from codec.kmeans import squared_distances
from config import DEFAULT_SEED, KMEANS_ITERS
from utils.errors import EmptyInput, IoFailure, LengthMismatch
from utils.logger import logger

STOPWORD_FRACTION = 0.01

PathLike = Union[str, Path]


@dataclass
class TokenAnnotation:
    """token_ids[e] is the token behind embedding e; vocab optionally maps ids to strings"""
    token_ids: np.ndarray
    vocab: Dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        self.token_ids = np.asarray(self.token_ids, dtype=np.int64)

    @classmethod
    def from_offsets(cls, tokens: Mapping[int, int], n_embeddings: int,
                     vocab: Optional[Dict[int, str]] = None) -> "TokenAnnotation":
        """Build from an offset -> token mapping that must cover 0..n_embeddings-1 exactly"""
        if len(tokens) != n_embeddings or any(o < 0 or o >= n_embeddings for o in tokens):
            raise LengthMismatch(f"token annotations cover {len(tokens)} offset(s); the index has {n_embeddings} embeddings")
        token_ids = np.empty(n_embeddings, dtype=np.int64)
        for offset, token in tokens.items():
            token_ids[offset] = token
        return cls(token_ids=token_ids, vocab=dict(vocab or {}))

    def __len__(self) -> int:
        return len(self.token_ids)

    def label(self, token: int) -> str:
        return self.vocab.get(int(token), str(int(token)))


@dataclass
class ClusterTokenStats:
    tokens_per_cluster: Dict[int, int]
    clusters_per_token: Dict[int, int]
    stopwords: Set[int]

    def tokens_per_cluster_values(self) -> List[int]:
        return list(self.tokens_per_cluster.values())

    def clusters_per_token_values(self) -> List[int]:
        return list(self.clusters_per_token.values())


@dataclass
class Exemplar:
    cluster: int
    size: int
    distinct_tokens: int
    # (token, occurrences in this cluster, other clusters the token appears in)
    top_tokens: List[Tuple[int, int, List[int]]]


def _distinct_pairs(codes: np.ndarray, token_ids: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unique (cluster, token) incidences with their embedding counts"""
    pairs = np.stack([codes.astype(np.int64), token_ids.astype(np.int64)], axis=1)
    unique, counts = np.unique(pairs, axis=0, return_counts=True)
    return unique[:, 0], unique[:, 1], counts


def _check_lengths(codes: np.ndarray, annot: TokenAnnotation):
    if len(codes) != len(annot):
        raise LengthMismatch(f"{len(codes)} centroid code(s) but {len(annot)} token annotation(s)")


def stopword_set(codes: np.ndarray, annot: TokenAnnotation, fraction: float = STOPWORD_FRACTION) -> Set[int]:
    """
    The top `fraction` of tokens by number of distinct clusters they appear
    in; ties go to the lower token id. int(fraction * n_tokens) tokens.
    """
    codes = np.asarray(codes)
    _check_lengths(codes, annot)
    _, tokens, _ = _distinct_pairs(codes, annot.token_ids)
    token_values, spread = np.unique(tokens, return_counts=True)
    n_stop = int(fraction * token_values.size)
    if n_stop == 0:
        return set()
    order = np.lexsort((token_values, -spread))[:n_stop]
    return {int(t) for t in token_values[order]}


def cluster_token_stats(codes: np.ndarray, annot: TokenAnnotation,
                        stopwords: Optional[Set[int]] = None) -> ClusterTokenStats:
    """
    Distinct non-stopword tokens per cluster and distinct clusters per
    non-stopword token. Clusters left without any non-stopword token are
    not reported.

    The stopword set defaults to the one derived from these codes; pass
    another run's set to exclude the same tokens from both.
    """
    codes = np.asarray(codes)
    _check_lengths(codes, annot)
    if len(codes) == 0:
        raise EmptyInput("no embeddings to analyze")
    if stopwords is None:
        stopwords = stopword_set(codes, annot)
    stopwords = set(stopwords)
    clusters, tokens, _ = _distinct_pairs(codes, annot.token_ids)
    if stopwords:
        keep = ~np.isin(tokens, np.fromiter(stopwords, dtype=np.int64))
        clusters, tokens = clusters[keep], tokens[keep]

    cluster_values, per_cluster = np.unique(clusters, return_counts=True)
    token_values, per_token = np.unique(tokens, return_counts=True)
    return ClusterTokenStats(
        tokens_per_cluster={int(c): int(n) for c, n in zip(cluster_values, per_cluster)},
        clusters_per_token={int(t): int(n) for t, n in zip(token_values, per_token)},
        stopwords=stopwords,
    )


def ecdf(values: Sequence[float]) -> List[Tuple[float, float]]:
    """(value, fraction of observations <= value) at every distinct value"""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise EmptyInput("eCDF of an empty histogram")
    distinct, counts = np.unique(values, return_counts=True)
    fractions = np.cumsum(counts) / values.size
    fractions[-1] = 1.0
    return [(float(v), float(f)) for v, f in zip(distinct, fractions)]


def fraction_at_most(values: Sequence[float], threshold: float) -> float:
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise EmptyInput("fraction of an empty histogram")
    return float(np.count_nonzero(values <= threshold) / values.size)


def random_codes(n_embeddings: int, dim: int, k: int, seed: int = DEFAULT_SEED,
                 iters: int = KMEANS_ITERS) -> np.ndarray:
    """Cluster assignments of n seeded random unit vectors into k clusters"""
    rng = np.random.default_rng(seed)
    vectors = rng.standard_normal((n_embeddings, dim))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    vectors = vectors.astype(np.float32)
    centroids = train_kmeans(vectors, k, iters=iters, seed=seed)
    return np.argmin(squared_distances(vectors, centroids), axis=1).astype(np.uint32)


def random_baseline(annot: TokenAnnotation, dim: int, k: int, seed: int = DEFAULT_SEED,
                    iters: int = KMEANS_ITERS, stopwords: Optional[Set[int]] = None) -> ClusterTokenStats:
    """
    Token statistics with every embedding replaced by a random unit vector;
    tokens stay put. `stopwords` should be the structured run's set.
    """
    logger.info(f"Random baseline: {len(annot)} random vector(s), dim={dim}, k={k}, seed={seed}")
    codes = random_codes(len(annot), dim, k, seed=seed, iters=iters)
    return cluster_token_stats(codes, annot, stopwords=stopwords)


def cluster_exemplars(codes: np.ndarray, annot: TokenAnnotation, n_clusters: int = 10,
                      top_tokens: int = 5) -> List[Exemplar]:
    """
    The n_clusters largest clusters (lower id on ties) with their most frequent tokens
    and, for each such token, the other clusters it also appears in.
    """
    codes = np.asarray(codes).astype(np.int64)
    _check_lengths(codes, annot)
    clusters, tokens, counts = _distinct_pairs(codes, annot.token_ids)

    token_clusters: Dict[int, List[int]] = {}
    for c, t in zip(clusters, tokens):
        token_clusters.setdefault(int(t), []).append(int(c))

    occupied, sizes = np.unique(codes, return_counts=True)
    picked = occupied[np.lexsort((occupied, -sizes))[:n_clusters]]

    exemplars = []
    for cluster in picked:
        mask = clusters == cluster
        ranked = np.lexsort((tokens[mask], -counts[mask]))[:top_tokens]
        rows = []
        for i in ranked:
            token = int(tokens[mask][i])
            others = [c for c in token_clusters[token] if c != cluster]
            rows.append((token, int(counts[mask][i]), others))
        exemplars.append(Exemplar(
            cluster=int(cluster),
            size=int(counts[mask].sum()),
            distinct_tokens=int(mask.sum()),
            top_tokens=rows,
        ))
    return exemplars


def write_ecdf(points: Sequence[Tuple[float, float]], path: PathLike):
    try:
        with open(path, "w", encoding="utf-8") as f:
            f.write("value\tfraction\n")
            for value, fraction in points:
                f.write(f"{value:g}\t{fraction:.6f}\n")
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def write_exemplars(exemplars: Sequence[Exemplar], annot: TokenAnnotation, path: PathLike, max_others: int = 8):
    try:
        with open(path, "w", encoding="utf-8") as f:
            f.write("cluster\tsize\tdistinct_tokens\ttoken\tcount\tother_clusters\n")
            for ex in exemplars:
                for token, count, others in ex.top_tokens:
                    shown = ",".join(str(c) for c in others[:max_others])
                    if len(others) > max_others:
                        shown += f",...(+{len(others) - max_others})"
                    f.write(f"{ex.cluster}\t{ex.size}\t{ex.distinct_tokens}\t{annot.label(token)}\t{count}\t{shown or '-'}\n")
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def write_summary(structured: ClusterTokenStats, baseline: ClusterTokenStats, path: PathLike,
                  thresholds: Sequence[int] = (1, 2, 4, 8, 16, 32)):
    """Paired fractions of clusters with at most T distinct tokens"""
    try:
        with open(path, "w", encoding="utf-8") as f:
            f.write("threshold\tstructured\trandom\n")
            for t in thresholds:
                f.write(f"{t}\t{fraction_at_most(structured.tokens_per_cluster_values(), t):.6f}\t"
                        f"{fraction_at_most(baseline.tokens_per_cluster_values(), t):.6f}\n")
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def analyze(codes: np.ndarray, annot: TokenAnnotation, dim: int, k: int, out_dir: PathLike,
            seed: int = DEFAULT_SEED, iters: int = KMEANS_ITERS) -> Tuple[ClusterTokenStats, ClusterTokenStats]:
    """Structured and random-baseline statistics, written as eCDF TSVs plus an exemplar report"""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IoFailure(f"cannot create {out_dir}: {e}") from e

    logger.info("=== Semantic-space analysis ===")
    structured = cluster_token_stats(codes, annot)
    logger.info(f"{len(structured.tokens_per_cluster)} non-empty cluster(s), "
                f"{len(structured.clusters_per_token)} non-stopword token(s), {len(structured.stopwords)} stopword(s)")
    baseline = random_baseline(annot, dim, k, seed=seed, iters=iters, stopwords=structured.stopwords)

    write_ecdf(ecdf(structured.tokens_per_cluster_values()), out_dir / "tokens_per_cluster.tsv")
    write_ecdf(ecdf(structured.clusters_per_token_values()), out_dir / "clusters_per_token.tsv")
    write_ecdf(ecdf(baseline.tokens_per_cluster_values()), out_dir / "random_tokens_per_cluster.tsv")
    write_ecdf(ecdf(baseline.clusters_per_token_values()), out_dir / "random_clusters_per_token.tsv")
    write_summary(structured, baseline, out_dir / "summary.tsv")
    write_exemplars(cluster_exemplars(codes, annot), annot, out_dir / "exemplars.tsv")

    median = float(np.median(structured.tokens_per_cluster_values()))
    logger.info(f"Clusters with <= {median:g} distinct tokens: "
                f"structured {fraction_at_most(structured.tokens_per_cluster_values(), median):.3f}, "
                f"random {fraction_at_most(baseline.tokens_per_cluster_values(), median):.3f}")
    return structured, baseline

#!/usr/bin/env python3
"""
Index byte accounting
"""

from dataclasses import dataclass
from typing import Dict, List

from codec import code_bytes
from codec.residual import CODEC_HEADER
from indexer.builder import CompressedIndex
from indexer.storage import (
    CODEC_FILE,
    CODES_FILE,
    DOCLENS_FILE,
    IVF_FILE,
    META_FILE,
    PIDS_FILE,
    RESIDUALS_FILE,
    meta_bytes,
)

CENTROID_ID_BYTES = 4


@dataclass
class IndexStats:
    dim: int
    bits: int
    n_passages: int
    n_embeddings: int
    component_bytes: Dict[str, int]
    total_bytes: int
    core_bytes_per_vector: int
    bytes_per_vector: float
    baseline_bytes_per_vector: int
    core_ratio: float
    total_ratio: float

    def lines(self) -> List[str]:
        """Report as `key<TAB>value` lines"""
        rows = [(f"bytes[{name}]", str(size)) for name, size in self.component_bytes.items()]
        rows += [
            ("total_bytes", str(self.total_bytes)),
            ("core_bytes_per_vector", str(self.core_bytes_per_vector)),
            ("bytes_per_vector", f"{self.bytes_per_vector:.4f}"),
            ("baseline_bytes_per_vector", str(self.baseline_bytes_per_vector)),
            ("core_ratio", f"{self.core_ratio:.2f}"),
            ("total_ratio", f"{self.total_ratio:.2f}"),
        ]
        return [f"{key}\t{value}" for key, value in rows]


def core_bytes_per_vector(dim: int, bits: int) -> int:
    """Stored bytes per vector: a u32 centroid id plus the packed residual"""
    return CENTROID_ID_BYTES + code_bytes(dim, bits)


def index_stats(index: CompressedIndex) -> IndexStats:
    """
    Exact on-disk byte accounting of an index, compared against the 16-bit
    uncompressed baseline of 2 * d bytes per vector.
    """
    codec = index.codec
    d, b = codec.dim, codec.bits
    n, n_emb, n_c = index.n_passages, index.n_embeddings, codec.n_centroids
    components = {
        META_FILE: len(meta_bytes(index)),
        CODEC_FILE: CODEC_HEADER.size + 4 * (n_c * d + (2 ** b - 1) + 2 ** b),
        DOCLENS_FILE: 8 + 4 * n,
        PIDS_FILE: 8 * n,
        CODES_FILE: CENTROID_ID_BYTES * n_emb,
        RESIDUALS_FILE: code_bytes(d, b) * n_emb,
        IVF_FILE: 8 * (n_c + 1) + 4 * n_emb,
    }
    total = sum(components.values())
    core = core_bytes_per_vector(d, b)
    baseline = 2 * d
    return IndexStats(
        dim=d,
        bits=b,
        n_passages=n,
        n_embeddings=n_emb,
        component_bytes=components,
        total_bytes=total,
        core_bytes_per_vector=core,
        bytes_per_vector=total / n_emb,
        baseline_bytes_per_vector=baseline,
        core_ratio=baseline / core,
        total_ratio=baseline * n_emb / total,
    )

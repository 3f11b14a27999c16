#!/usr/bin/env python3
"""
Embedding interchange format
Reads and writes the little-endian binary embedding file shared by passages and queries
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Sequence, Tuple, Union

import numpy as np

from utils.errors import (
    DimensionMismatch,
    IoFailure,
    MalformedHeader,
    MalformedInput,
    NonUnitNorm,
    TruncatedFile,
)
from utils.logger import logger

MAGIC = b"LIEMB1\0\0"
VERSION = 1

# magic | u32 version | u32 dim | u8 precision | 3 pad | u64 n_passages
HEADER = struct.Struct("<8sIIB3xQ")
# u64 passage_id | u32 length
PASSAGE_HEADER = struct.Struct("<QI")

PRECISIONS = {"fp32": 0, "fp16": 1}
DTYPES = {"fp32": np.dtype("<f4"), "fp16": np.dtype("<f2")}

# Norm deviation bands: up to NORM_TOLERANCE accepted as is, up to
# NORM_RENORMALIZE repaired with a warning, beyond that rejected.
NORM_TOLERANCE = 1e-3
NORM_RENORMALIZE = 1e-2

PathLike = Union[str, Path]


@dataclass
class EmbeddingSet:
    """
    Variable-length token matrices, one per passage (or query), stored flat.

    vectors holds every row in passage order; doclens[i] rows belong to
    passage_ids[i]. Query files use the same type with query ids in the
    passage id slot.
    """
    dim: int
    passage_ids: np.ndarray
    doclens: np.ndarray
    vectors: np.ndarray
    precision: str = "fp32"
    offsets: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.passage_ids = np.asarray(self.passage_ids, dtype=np.uint64)
        self.doclens = np.asarray(self.doclens, dtype=np.int64)
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        self.offsets = np.zeros(len(self.doclens) + 1, dtype=np.int64)
        np.cumsum(self.doclens, out=self.offsets[1:])

    @classmethod
    def from_passages(cls, passages: Sequence[Tuple[int, np.ndarray]], precision: str = "fp32") -> "EmbeddingSet":
        """Build a set from (passage_id, M x d matrix) pairs"""
        if not passages:
            return cls(dim=0, passage_ids=[], doclens=[], vectors=np.zeros((0, 0)), precision=precision)
        dims = {np.asarray(m).shape[1] for _, m in passages}
        if len(dims) != 1:
            raise DimensionMismatch(f"passages have mixed dimensions {sorted(dims)}")
        matrices = [np.asarray(m, dtype=np.float32) for _, m in passages]
        return cls(
            dim=dims.pop(),
            passage_ids=[pid for pid, _ in passages],
            doclens=[m.shape[0] for m in matrices],
            vectors=np.concatenate(matrices, axis=0),
            precision=precision,
        )

    @property
    def n_passages(self) -> int:
        return len(self.passage_ids)

    @property
    def n_embeddings(self) -> int:
        return int(self.offsets[-1])

    def matrix(self, i: int) -> np.ndarray:
        """Token matrix of the i-th passage (by position, not id)"""
        return self.vectors[self.offsets[i]:self.offsets[i + 1]]

    def __len__(self) -> int:
        return self.n_passages

    def __iter__(self) -> Iterator[Tuple[int, np.ndarray]]:
        for i in range(self.n_passages):
            yield int(self.passage_ids[i]), self.matrix(i)

    def subset(self, positions: Sequence[int]) -> "EmbeddingSet":
        """New set holding the passages at the given positions, in that order"""
        if len(positions) == 0:
            return EmbeddingSet(self.dim, [], [], np.zeros((0, self.dim)), self.precision)
        return EmbeddingSet.from_passages(
            [(int(self.passage_ids[i]), self.matrix(i)) for i in positions],
            precision=self.precision,
        )

    def validate(self, tolerance: float = NORM_TOLERANCE):
        """Check the set invariants, raising on the first violation"""
        if self.n_passages == 0:
            raise MalformedInput("embedding set has no passages")
        if self.dim <= 0 or self.vectors.ndim != 2 or self.vectors.shape[1] != self.dim:
            raise DimensionMismatch(f"vectors do not match dim={self.dim}")
        if self.precision not in PRECISIONS:
            raise MalformedInput(f"unknown precision tag {self.precision!r}")
        if np.any(self.doclens < 1):
            raise MalformedInput("every passage needs at least one vector")
        _check_increasing(self.passage_ids)
        deviation = np.abs(np.linalg.norm(self.vectors.astype(np.float64), axis=1) - 1.0)
        bad = ~(deviation <= tolerance)
        if np.any(bad):
            row = int(np.argmax(bad))
            raise NonUnitNorm(f"row {row} has norm deviation {deviation[row]:.3g} > {tolerance:g}")


def _check_increasing(passage_ids: np.ndarray):
    # exact integer comparison; float64 loses precision near 2**64
    ids = [int(p) for p in passage_ids]
    for prev, cur in zip(ids, ids[1:]):
        if cur <= prev:
            raise MalformedInput(f"passage ids must be strictly increasing ({prev} then {cur})")


def _normalize_rows(vectors: np.ndarray, source: str) -> np.ndarray:
    """Enforce unit norm: reject far-off rows, renormalize the narrow band"""
    norms = np.linalg.norm(vectors.astype(np.float64), axis=1)
    deviation = np.abs(norms - 1.0)
    rejected = ~(deviation <= NORM_RENORMALIZE)
    if np.any(rejected):
        row = int(np.argmax(rejected))
        raise NonUnitNorm(f"{source}: row {row} has norm {norms[row]:.6g}")
    repair = deviation > NORM_TOLERANCE
    if np.any(repair):
        logger.warning(f"{source}: renormalizing {int(repair.sum())} vector(s) with norm deviation above {NORM_TOLERANCE:g}")
        vectors = vectors.copy()
        vectors[repair] = (vectors[repair] / norms[repair, None]).astype(np.float32)
    return vectors


def read_embeddings(path: PathLike) -> EmbeddingSet:
    """
    Read and validate an embedding file.

    fp16 payloads are widened to fp32 on load; the precision tag of the
    file is kept on the returned set.
    """
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e

    if len(buf) < HEADER.size:
        raise MalformedHeader(f"{path}: file shorter than the {HEADER.size}-byte header")
    magic, version, dim, precision_code, n_passages = HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise MalformedHeader(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise MalformedHeader(f"{path}: unsupported version {version}")
    if dim == 0:
        raise DimensionMismatch(f"{path}: dim must be positive")
    precision = {code: name for name, code in PRECISIONS.items()}.get(precision_code)
    if precision is None:
        raise MalformedHeader(f"{path}: unknown precision code {precision_code}")
    if n_passages == 0:
        raise MalformedInput(f"{path}: file holds no passages")

    dtype = DTYPES[precision]
    pos = HEADER.size
    passage_ids: List[int] = []
    doclens: List[int] = []
    chunks: List[np.ndarray] = []
    for i in range(n_passages):
        if pos + PASSAGE_HEADER.size > len(buf):
            raise TruncatedFile(f"{path}: passage {i} header cut off at byte {pos}")
        pid, length = PASSAGE_HEADER.unpack_from(buf, pos)
        pos += PASSAGE_HEADER.size
        if length == 0:
            raise MalformedInput(f"{path}: passage {pid} has no vectors")
        if passage_ids and pid <= passage_ids[-1]:
            raise MalformedInput(f"{path}: passage ids must be strictly increasing ({passage_ids[-1]} then {pid})")
        nbytes = length * dim * dtype.itemsize
        if pos + nbytes > len(buf):
            raise TruncatedFile(f"{path}: passage {pid} needs {nbytes} payload bytes, {len(buf) - pos} left")
        chunks.append(np.frombuffer(buf, dtype=dtype, count=length * dim, offset=pos).reshape(length, dim))
        pos += nbytes
        passage_ids.append(pid)
        doclens.append(length)
    if pos != len(buf):
        raise MalformedHeader(f"{path}: {len(buf) - pos} trailing bytes after {n_passages} passages")

    vectors = np.concatenate(chunks, axis=0).astype(np.float32)
    vectors = _normalize_rows(vectors, str(path))
    logger.debug(f"Read {n_passages} passage(s), {vectors.shape[0]} vector(s), dim={dim}, {precision} from {path}")
    return EmbeddingSet(dim=dim, passage_ids=passage_ids, doclens=doclens, vectors=vectors, precision=precision)


def write_embeddings(embeddings: EmbeddingSet, path: PathLike):
    """Write an embedding set; fp32 sets round-trip bit-exactly"""
    embeddings.validate()
    dtype = DTYPES[embeddings.precision]
    path = Path(path)
    try:
        with open(path, "wb") as f:
            f.write(HEADER.pack(MAGIC, VERSION, embeddings.dim, PRECISIONS[embeddings.precision], embeddings.n_passages))
            for pid, matrix in embeddings:
                f.write(PASSAGE_HEADER.pack(pid, matrix.shape[0]))
                f.write(np.ascontiguousarray(matrix, dtype=dtype).tobytes())
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e
    logger.debug(f"Wrote {embeddings.n_passages} passage(s) to {path}")

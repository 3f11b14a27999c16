#!/usr/bin/env python3
"""
Residual Compression
Each vector is stored as the id of its nearest centroid plus a b-bit
per-dimension quantization of the residual v - C_t.
"""

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Tuple, Union

import numpy as np

from codec.kmeans import squared_distances
from utils.errors import CorruptCode, DimensionMismatch, InsufficientSample, InvalidParams, IoFailure, MalformedIndex
from utils.logger import logger

CODEC_MAGIC = b"LICDC1\0\0"
# magic | u32 dim | u32 bits | u64 n_centroids
CODEC_HEADER = struct.Struct("<8sIIQ")

SUPPORTED_BITS = (1, 2)

# rows per block for centroid assignment
_BLOCK = 8192


def code_bytes(dim: int, bits: int) -> int:
    """Packed residual length: ceil(b * d / 8)"""
    return (bits * dim + 7) // 8


@dataclass
class CompressedVector:
    centroid_id: int
    residual_code: bytes


class ReconstructionError(NamedTuple):
    centroid_only: float
    with_residual: float


def fit_buckets(residual_sample, bits: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Fit the global scalar quantizer shared by every dimension and centroid.

    Cutoffs are the i / 2**b quantiles of the sample; each weight is the
    mean of the sample values in its bucket. An empty bucket takes the
    midpoint of its interval, outer intervals being closed off at one
    sample standard deviation beyond the outermost cutoff.
    """
    if bits not in SUPPORTED_BITS:
        raise InvalidParams(f"bits must be one of {SUPPORTED_BITS}, got {bits}")
    sample = np.asarray(residual_sample, dtype=np.float64).ravel()
    n_buckets = 2 ** bits
    if sample.size < n_buckets:
        raise InsufficientSample(f"need at least {n_buckets} residual values for {bits}-bit buckets, got {sample.size}")

    cutoffs = np.quantile(sample, np.arange(1, n_buckets) / n_buckets).astype(np.float32)
    buckets = np.searchsorted(cutoffs.astype(np.float64), sample, side="right")
    counts = np.bincount(buckets, minlength=n_buckets)
    sums = np.bincount(buckets, weights=sample, minlength=n_buckets)
    spread = float(sample.std())

    weights = np.empty(n_buckets, dtype=np.float64)
    for i in range(n_buckets):
        if counts[i]:
            weights[i] = sums[i] / counts[i]
        else:
            lower = float(cutoffs[i - 1]) if i > 0 else float(cutoffs[0]) - spread
            upper = float(cutoffs[i]) if i < n_buckets - 1 else float(cutoffs[-1]) + spread
            weights[i] = (lower + upper) / 2.0

    if np.all(sample == sample[0]):
        logger.warning(f"Degenerate residual sample: all {sample.size} values equal {sample[0]:g}; "
                       f"every residual decodes to that value")
    return cutoffs, weights.astype(np.float32)


@dataclass(frozen=True)
class Codec:
    """The compression dictionary: centroids plus the residual quantizer"""
    centroids: np.ndarray
    bits: int
    cutoffs: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "centroids", np.ascontiguousarray(self.centroids, dtype=np.float32))
        object.__setattr__(self, "cutoffs", np.asarray(self.cutoffs, dtype=np.float32))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float32))

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    @property
    def n_centroids(self) -> int:
        return self.centroids.shape[0]

    @property
    def code_bytes(self) -> int:
        return code_bytes(self.dim, self.bits)

    def validate(self):
        n = self.n_centroids
        if self.centroids.ndim != 2 or n < 1 or n & (n - 1) or n > 2 ** 32:
            raise InvalidParams(f"centroid count must be a power of two in [1, 2**32], got {n}")
        if self.bits not in SUPPORTED_BITS:
            raise InvalidParams(f"bits must be one of {SUPPORTED_BITS}, got {self.bits}")
        if self.cutoffs.shape != (2 ** self.bits - 1,) or self.weights.shape != (2 ** self.bits,):
            raise InvalidParams("cutoff/weight counts do not match bits")
        if np.any(np.diff(self.cutoffs) < 0) or np.any(np.diff(self.weights) < 0):
            raise InvalidParams("cutoffs and weights must be ascending")

    def _check_dim(self, vectors: np.ndarray):
        if vectors.ndim != 2 or vectors.shape[1] != self.dim:
            raise DimensionMismatch(f"expected vectors of dim {self.dim}, got shape {vectors.shape}")

    def nearest_centroids(self, vectors: np.ndarray) -> np.ndarray:
        """argmin_t ||v - C_t||^2 per row, lowest id on ties"""
        vectors = np.asarray(vectors, dtype=np.float32)
        self._check_dim(vectors)
        ids = np.empty(vectors.shape[0], dtype=np.uint32)
        for start in range(0, vectors.shape[0], _BLOCK):
            ids[start:start + _BLOCK] = np.argmin(squared_distances(vectors[start:start + _BLOCK], self.centroids), axis=1)
        return ids

    def bucketize(self, residuals: np.ndarray) -> np.ndarray:
        """Bucket index per component; monotone non-decreasing in the value"""
        return np.searchsorted(self.cutoffs, residuals, side="right").astype(np.uint8)

    def pack(self, buckets: np.ndarray) -> np.ndarray:
        """Dimension j occupies bits [b*j, b*(j+1)), little-endian bit order"""
        shifts = np.arange(self.bits, dtype=np.uint8)
        bitplanes = (buckets[:, :, None] >> shifts) & 1
        return np.packbits(bitplanes.reshape(buckets.shape[0], -1), axis=1, bitorder="little")

    def unpack(self, packed: np.ndarray) -> np.ndarray:
        packed = np.asarray(packed, dtype=np.uint8)
        if packed.ndim != 2 or packed.shape[1] != self.code_bytes:
            raise CorruptCode(f"packed residuals must be {self.code_bytes} bytes per vector, got shape {packed.shape}")
        flat = np.unpackbits(packed, axis=1, count=self.dim * self.bits, bitorder="little")
        bitplanes = flat.reshape(packed.shape[0], self.dim, self.bits)
        return (bitplanes << np.arange(self.bits, dtype=np.uint8)).sum(axis=2, dtype=np.uint8)

    def compress(self, vectors: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Encode a batch: (u32 centroid ids, packed residuals of code_bytes each)"""
        vectors = np.asarray(vectors, dtype=np.float32)
        ids = self.nearest_centroids(vectors)
        residuals = vectors - self.centroids[ids]
        return ids, self.pack(self.bucketize(residuals))

    def decompress(self, ids: np.ndarray, packed: np.ndarray) -> np.ndarray:
        """C_t + w(code_j) per dimension; no renormalization"""
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= self.n_centroids):
            raise CorruptCode(f"centroid id out of range [0, {self.n_centroids})")
        buckets = self.unpack(packed)
        if buckets.shape[0] != ids.shape[0]:
            raise CorruptCode(f"{ids.shape[0]} centroid ids but {buckets.shape[0]} residual codes")
        return self.centroids[ids] + self.weights[buckets]

    def encode(self, v: np.ndarray) -> CompressedVector:
        ids, packed = self.compress(np.asarray(v, dtype=np.float32).reshape(1, -1))
        return CompressedVector(centroid_id=int(ids[0]), residual_code=packed[0].tobytes())

    def decode(self, cv: CompressedVector) -> np.ndarray:
        if len(cv.residual_code) != self.code_bytes:
            raise CorruptCode(f"residual code is {len(cv.residual_code)} bytes, expected {self.code_bytes}")
        packed = np.frombuffer(cv.residual_code, dtype=np.uint8).reshape(1, -1)
        return self.decompress(np.array([cv.centroid_id]), packed)[0]


def train_codec(sample: np.ndarray, centroids: np.ndarray, bits: int) -> Codec:
    """Fit the residual quantizer on the residuals of the k-means sample"""
    sample = np.asarray(sample, dtype=np.float32)
    provisional = Codec(centroids=centroids, bits=bits, cutoffs=np.zeros(2 ** bits - 1), weights=np.zeros(2 ** bits))
    residuals = sample - provisional.centroids[provisional.nearest_centroids(sample)]
    cutoffs, weights = fit_buckets(residuals, bits)
    codec = Codec(centroids=centroids, bits=bits, cutoffs=cutoffs, weights=weights)
    codec.validate()
    return codec


def reconstruction_error(vectors: np.ndarray, codec: Codec) -> ReconstructionError:
    """Mean squared error per component of centroid-only vs centroid + residual reconstruction"""
    vectors = np.asarray(vectors, dtype=np.float32)
    ids, packed = codec.compress(vectors)
    centroid_only = np.mean((vectors.astype(np.float64) - codec.centroids[ids]) ** 2)
    with_residual = np.mean((vectors.astype(np.float64) - codec.decompress(ids, packed)) ** 2)
    return ReconstructionError(float(centroid_only), float(with_residual))


def save_codec(codec: Codec, path: Union[str, Path]):
    try:
        with open(path, "wb") as f:
            f.write(CODEC_HEADER.pack(CODEC_MAGIC, codec.dim, codec.bits, codec.n_centroids))
            f.write(codec.centroids.astype("<f4").tobytes())
            f.write(codec.cutoffs.astype("<f4").tobytes())
            f.write(codec.weights.astype("<f4").tobytes())
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def load_codec(path: Union[str, Path]) -> Codec:
    name = Path(path).name
    try:
        buf = Path(path).read_bytes()
    except FileNotFoundError:
        raise MalformedIndex(name, "file is missing") from None
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    if len(buf) < CODEC_HEADER.size:
        raise MalformedIndex(name, "shorter than header")
    magic, dim, bits, n_centroids = CODEC_HEADER.unpack_from(buf, 0)
    if magic != CODEC_MAGIC:
        raise MalformedIndex(name, f"bad magic {magic!r}")
    if bits not in SUPPORTED_BITS or dim == 0:
        raise MalformedIndex(name, f"unsupported dim={dim} bits={bits}")
    n_floats = n_centroids * dim + (2 ** bits - 1) + 2 ** bits
    if len(buf) != CODEC_HEADER.size + 4 * n_floats:
        raise MalformedIndex(name, f"length {len(buf)} does not match {n_centroids} centroids of dim {dim}")
    floats = np.frombuffer(buf, dtype="<f4", offset=CODEC_HEADER.size)
    split = n_centroids * dim
    codec = Codec(
        centroids=floats[:split].reshape(n_centroids, dim),
        bits=bits,
        cutoffs=floats[split:split + 2 ** bits - 1],
        weights=floats[split + 2 ** bits - 1:],
    )
    try:
        codec.validate()
    except InvalidParams as e:
        raise MalformedIndex(name, str(e)) from None
    return codec

#!/usr/bin/env python3
"""
Index Storage
Saves and loads the index directory; every invariant is checked on load
"""

import json
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from codec import code_bytes, load_codec, save_codec
from indexer.builder import CompressedIndex, InvertedLists
from utils.errors import IoFailure, MalformedIndex
from utils.logger import logger

FORMAT_VERSION = 1

META_FILE = "meta.json"
CODEC_FILE = "codec.bin"
DOCLENS_FILE = "doclens.bin"
PIDS_FILE = "pids.bin"
CODES_FILE = "codes.bin"
RESIDUALS_FILE = "residuals.bin"
IVF_FILE = "ivf.bin"

FILES = (META_FILE, CODEC_FILE, DOCLENS_FILE, PIDS_FILE, CODES_FILE, RESIDUALS_FILE, IVF_FILE)

PathLike = Union[str, Path]


def index_meta(index: CompressedIndex) -> Dict:
    return {
        "format_version": FORMAT_VERSION,
        "dim": index.codec.dim,
        "bits": index.codec.bits,
        "n_centroids": index.codec.n_centroids,
        "n_passages": index.n_passages,
        "n_embeddings": index.n_embeddings,
        "seed": index.seed,
        "sample_mult": index.sample_mult,
    }


def meta_bytes(index: CompressedIndex) -> bytes:
    return (json.dumps(index_meta(index), indent=2, sort_keys=True) + "\n").encode("utf-8")


def _write(path: Path, *parts: bytes):
    try:
        with open(path, "wb") as f:
            for part in parts:
                f.write(part)
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def _read(directory: Path, name: str) -> bytes:
    try:
        return (directory / name).read_bytes()
    except FileNotFoundError:
        raise MalformedIndex(name, "file is missing") from None
    except OSError as e:
        raise IoFailure(f"cannot read {directory / name}: {e}") from e


def save_index(index: CompressedIndex, ivf: InvertedLists, directory: PathLike):
    """Write the index directory (all binary files little-endian)"""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IoFailure(f"cannot create {directory}: {e}") from e

    n = np.array([index.n_passages], dtype="<u8").tobytes()
    _write(directory / META_FILE, meta_bytes(index))
    save_codec(index.codec, directory / CODEC_FILE)
    _write(directory / DOCLENS_FILE, n, index.doclens.astype("<u4").tobytes())
    _write(directory / PIDS_FILE, index.passage_ids.astype("<u8").tobytes())
    _write(directory / CODES_FILE, index.codes.astype("<u4").tobytes())
    _write(directory / RESIDUALS_FILE, index.residuals.tobytes())
    _write(directory / IVF_FILE, ivf.list_offsets.astype("<u8").tobytes(), ivf.postings.astype("<u4").tobytes())
    logger.info(f"Saved index ({index.n_passages} passages, {index.n_embeddings} embeddings) to {directory}")


def _load_meta(directory: Path) -> Dict:
    try:
        meta = json.loads(_read(directory, META_FILE).decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as e:
        raise MalformedIndex(META_FILE, f"not valid JSON: {e}") from None
    required = ("format_version", "dim", "bits", "n_centroids", "n_passages", "n_embeddings", "seed", "sample_mult")
    missing = [key for key in required if key not in meta]
    if missing:
        raise MalformedIndex(META_FILE, f"missing keys {missing}")
    if meta["format_version"] != FORMAT_VERSION:
        raise MalformedIndex(META_FILE, f"unsupported format_version {meta['format_version']}")
    return meta


def load_index(directory: PathLike) -> Tuple[CompressedIndex, InvertedLists]:
    """Load an index directory, validating every invariant before returning"""
    directory = Path(directory)
    if not directory.is_dir():
        raise IoFailure(f"index directory {directory} does not exist")
    meta = _load_meta(directory)

    codec = load_codec(directory / CODEC_FILE)
    if (codec.dim, codec.bits, codec.n_centroids) != (meta["dim"], meta["bits"], meta["n_centroids"]):
        raise MalformedIndex(CODEC_FILE, "dim/bits/n_centroids disagree with meta.json")

    raw = _read(directory, DOCLENS_FILE)
    if len(raw) < 8:
        raise MalformedIndex(DOCLENS_FILE, "missing passage count")
    n_passages = int(np.frombuffer(raw, dtype="<u8", count=1)[0])
    if len(raw) != 8 + 4 * n_passages or n_passages != meta["n_passages"]:
        raise MalformedIndex(DOCLENS_FILE, f"length {len(raw)} does not hold {meta['n_passages']} u32 lengths")
    if n_passages == 0:
        raise MalformedIndex(DOCLENS_FILE, "index holds no passages")
    doclens = np.frombuffer(raw, dtype="<u4", offset=8).astype(np.uint32)
    if np.any(doclens == 0):
        raise MalformedIndex(DOCLENS_FILE, "every passage needs at least one embedding")
    n_embeddings = int(doclens.sum(dtype=np.uint64))
    if n_embeddings != meta["n_embeddings"]:
        raise MalformedIndex(DOCLENS_FILE, f"lengths sum to {n_embeddings}, meta.json says {meta['n_embeddings']}")

    raw = _read(directory, PIDS_FILE)
    if len(raw) != 8 * n_passages:
        raise MalformedIndex(PIDS_FILE, f"length {len(raw)} != {8 * n_passages}")
    passage_ids = np.frombuffer(raw, dtype="<u8").astype(np.uint64)
    if n_passages > 1 and np.any(passage_ids[1:] <= passage_ids[:-1]):
        raise MalformedIndex(PIDS_FILE, "passage ids are not strictly increasing")

    raw = _read(directory, CODES_FILE)
    if len(raw) != 4 * n_embeddings:
        raise MalformedIndex(CODES_FILE, f"length {len(raw)} != {4 * n_embeddings}")
    codes = np.frombuffer(raw, dtype="<u4").astype(np.uint32)
    if n_embeddings and int(codes.max()) >= codec.n_centroids:
        raise MalformedIndex(CODES_FILE, f"centroid code >= {codec.n_centroids}")

    raw = _read(directory, RESIDUALS_FILE)
    expected = n_embeddings * code_bytes(codec.dim, codec.bits)
    if len(raw) != expected:
        raise MalformedIndex(RESIDUALS_FILE, f"length {len(raw)} != {expected}")
    residuals = np.frombuffer(raw, dtype=np.uint8).reshape(n_embeddings, -1).copy()

    ivf = _load_ivf(directory, codes, codec.n_centroids)

    index = CompressedIndex(
        codec=codec,
        passage_ids=passage_ids,
        doclens=doclens,
        codes=codes,
        residuals=residuals,
        seed=int(meta["seed"]),
        sample_mult=float(meta["sample_mult"]),
    )
    logger.info(f"Loaded index from {directory}: {n_passages} passages, {n_embeddings} embeddings, "
                f"{codec.n_centroids} centroids, {codec.bits}-bit residuals")
    return index, ivf


def _load_ivf(directory: Path, codes: np.ndarray, n_centroids: int) -> InvertedLists:
    raw = _read(directory, IVF_FILE)
    n_offsets = n_centroids + 1
    n_embeddings = codes.shape[0]
    if len(raw) != 8 * n_offsets + 4 * n_embeddings:
        raise MalformedIndex(IVF_FILE, f"length {len(raw)} != {8 * n_offsets + 4 * n_embeddings}")
    list_offsets = np.frombuffer(raw, dtype="<u8", count=n_offsets).astype(np.uint64)
    postings = np.frombuffer(raw, dtype="<u4", offset=8 * n_offsets).astype(np.uint32)

    if list_offsets[0] != 0 or int(list_offsets[-1]) != n_embeddings or np.any(list_offsets[1:] < list_offsets[:-1]):
        raise MalformedIndex(IVF_FILE, "list offsets are not a monotone prefix sum ending at n_embeddings")
    sizes = np.diff(list_offsets.astype(np.int64))
    if not np.array_equal(sizes, np.bincount(codes, minlength=n_centroids)):
        raise MalformedIndex(IVF_FILE, "list sizes disagree with centroid codes")
    if n_embeddings:
        if int(postings.max()) >= n_embeddings:
            raise MalformedIndex(IVF_FILE, "posting outside embedding id range")
        owner = np.repeat(np.arange(n_centroids, dtype=np.uint32), sizes)
        if not np.array_equal(codes[postings], owner):
            raise MalformedIndex(IVF_FILE, "posting listed under the wrong centroid")
        # strictly ascending within each list
        within = owner[1:] == owner[:-1]
        if np.any(postings[1:][within] <= postings[:-1][within]):
            raise MalformedIndex(IVF_FILE, "postings not strictly ascending within a list")
    return InvertedLists(list_offsets=list_offsets, postings=postings)

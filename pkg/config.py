#!/usr/bin/env python3
"""
Configuration module for Residex
Handles all environment variables and default settings
"""

import os


def _int_env(name: str, default: int) -> int:
    try:
        return int(os.environ.get(name, str(default)))
    except ValueError:
        print(f"[WARN] Invalid {name} value; using default {default}")
        return default


def _float_env(name: str, default: float) -> float:
    try:
        return float(os.environ.get(name, str(default)))
    except ValueError:
        print(f"[WARN] Invalid {name} value; using default {default}")
        return default


# Reproducibility - seeds are never time-derived
DEFAULT_SEED = _int_env("DEFAULT_SEED", 0)

# Worker threads (0 = one per CPU)
THREADS = _int_env("THREADS", 0)

# Indexing Settings
INDEX_BITS = _int_env("INDEX_BITS", 2)
if INDEX_BITS not in (1, 2):
    print("[WARN] Invalid INDEX_BITS value; using default 2")
    INDEX_BITS = 2
INDEX_CHUNK_SIZE = _int_env("INDEX_CHUNK_SIZE", 1024)
SAMPLE_MULT = _float_env("SAMPLE_MULT", 1.0)
KMEANS_ITERS = _int_env("KMEANS_ITERS", 20)

# Search Settings
SEARCH_NPROBE = _int_env("SEARCH_NPROBE", 2)
# ncandidates defaults to nprobe * SEARCH_CAND_MULT
SEARCH_CAND_MULT = _int_env("SEARCH_CAND_MULT", 2 ** 12)
SEARCH_K = _int_env("SEARCH_K", 10)

# Benchmark Settings
BENCH_REPS = _int_env("BENCH_REPS", 3)

# Progress bars over encoding chunks and sweep points
SHOW_PROGRESS = os.environ.get("SHOW_PROGRESS", "false").lower() == "true"

# Debug Settings
DEBUG_MODE = os.environ.get("DEBUG_MODE", "false").lower() == "true"


def resolve_threads(threads: int) -> int:
    """Map the 0 = auto convention onto a concrete worker count"""
    if threads and threads > 0:
        return threads
    return os.cpu_count() or 1


def log_configuration(logger, run_config=None):
    """Log the current configuration settings"""
    logger.info("=== Residex Starting ===")
    logger.info(f"Seed: DEFAULT_SEED={DEFAULT_SEED}, THREADS={THREADS}")
    logger.info(f"Index Configuration: INDEX_BITS={INDEX_BITS}, INDEX_CHUNK_SIZE={INDEX_CHUNK_SIZE}, "
                f"SAMPLE_MULT={SAMPLE_MULT}, KMEANS_ITERS={KMEANS_ITERS}")
    logger.info(f"Search Configuration: SEARCH_NPROBE={SEARCH_NPROBE}, SEARCH_CAND_MULT={SEARCH_CAND_MULT}, "
                f"SEARCH_K={SEARCH_K}")
    logger.info(f"BENCH_REPS={BENCH_REPS}, SHOW_PROGRESS={SHOW_PROGRESS}")
    if run_config is not None:
        for key, value in run_config.as_dict().items():
            logger.info(f"  {key}={value}")
    logger.debug(f"DEBUG_MODE={DEBUG_MODE}")

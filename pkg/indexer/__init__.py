"""
Indexing pipeline for Residex
"""

from indexer.builder import CompressedIndex, InvertedLists, build_index, invert, sample_passages
from indexer.stats import IndexStats, core_bytes_per_vector, index_stats
from indexer.storage import load_index, save_index

__all__ = [
    'CompressedIndex', 'InvertedLists', 'build_index', 'invert', 'sample_passages',
    'save_index', 'load_index',
    'IndexStats', 'index_stats', 'core_bytes_per_vector',
]

"""
Interchange formats for Residex
"""

from formats.embeddings import EmbeddingSet, read_embeddings, write_embeddings
from formats.tsv import (
    Qrels,
    RankedResults,
    read_qrels,
    read_results,
    read_tokens,
    read_vocab,
    write_qrels,
    write_results,
    write_tokens,
)

__all__ = [
    'EmbeddingSet', 'read_embeddings', 'write_embeddings',
    'Qrels', 'RankedResults', 'read_qrels', 'write_qrels', 'read_results', 'write_results',
    'read_tokens', 'write_tokens', 'read_vocab',
]

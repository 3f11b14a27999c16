"""
Semantic-space analysis for Residex
"""

from analysis.semantic import (
    ClusterTokenStats,
    Exemplar,
    TokenAnnotation,
    analyze,
    cluster_exemplars,
    cluster_token_stats,
    ecdf,
    fraction_at_most,
    random_baseline,
    random_codes,
    stopword_set,
)

__all__ = [
    'TokenAnnotation', 'ClusterTokenStats', 'Exemplar', 'stopword_set', 'cluster_token_stats',
    'ecdf', 'fraction_at_most', 'random_codes', 'random_baseline', 'cluster_exemplars', 'analyze',
]

"""
Late-interaction search for Residex
"""

from searcher.params import SearchParams
from searcher.retrieval import Candidates, generate_candidates, maxsim, probe_centroids, search, search_batch

__all__ = ['SearchParams', 'Candidates', 'maxsim', 'probe_centroids', 'generate_candidates', 'search', 'search_batch']

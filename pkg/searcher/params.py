#!/usr/bin/env python3
"""
Search parameters
"""

from dataclasses import dataclass
from typing import Optional

from config import SEARCH_CAND_MULT, SEARCH_K, SEARCH_NPROBE
from utils.errors import InvalidParams


@dataclass(frozen=True)
class SearchParams:
    """
    nprobe centroids per query vector, ncandidates passages advanced to
    rescoring, k results returned. ncandidates defaults to nprobe * 2**12.
    """
    nprobe: int = SEARCH_NPROBE
    ncandidates: Optional[int] = None
    k: int = SEARCH_K

    def __post_init__(self):
        if self.ncandidates is None:
            object.__setattr__(self, "ncandidates", self.nprobe * SEARCH_CAND_MULT)

    def validate(self, n_centroids: Optional[int] = None):
        if self.nprobe < 1 or self.ncandidates < 1 or self.k < 1:
            raise InvalidParams(f"nprobe, ncandidates and k must be positive: {self}")
        if self.k > self.ncandidates:
            raise InvalidParams(f"k={self.k} exceeds ncandidates={self.ncandidates}")
        if n_centroids is not None and self.nprobe > n_centroids:
            raise InvalidParams(f"nprobe={self.nprobe} exceeds the index's {n_centroids} centroids")

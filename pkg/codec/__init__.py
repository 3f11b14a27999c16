"""
Residual compression codec for Residex
"""

from codec.kmeans import fit_kmeans, floor_power_of_two, select_num_centroids, train_kmeans
from codec.residual import (
    Codec,
    CompressedVector,
    code_bytes,
    fit_buckets,
    load_codec,
    reconstruction_error,
    save_codec,
    train_codec,
)

__all__ = [
    'fit_kmeans', 'floor_power_of_two', 'select_num_centroids', 'train_kmeans',
    'Codec', 'CompressedVector', 'code_bytes', 'fit_buckets', 'train_codec',
    'reconstruction_error', 'save_codec', 'load_codec',
]

"""
Shared fixtures: small seeded corpora and the indexes built over them
"""

import pytest

from indexer import build_index
from synth import synth, write_synth
from utils.logger import set_level


@pytest.fixture(autouse=True)
def _reset_log_level():
    yield
    set_level("INFO")


@pytest.fixture(scope="session")
def clustered():
    return synth(profile="clustered", n_passages=40, tokens_per_passage=16, dim=32,
                 n_clusters=16, noise=0.1, seed=0, n_queries=12, query_len=6)


@pytest.fixture(scope="session")
def clustered_index(clustered):
    """(index, ivf) over the clustered corpus, 2-bit residuals"""
    return build_index(clustered.corpus, bits=2, seed=0)


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory, clustered):
    out = tmp_path_factory.mktemp("synth")
    write_synth(clustered, out)
    return out

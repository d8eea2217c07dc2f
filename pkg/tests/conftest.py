import numpy as np
import pytest

from girglab import girg
from girglab import meanfield as mf


def make_graph(positions, weights, edges, k=1.0, d=None):
    """Build a Graph directly from arrays (tests of dynamics semantics)."""
    positions = np.asarray(positions, dtype=np.float64)
    n = positions.shape[0]
    d = positions.shape[1] if d is None else d
    weights = np.asarray(weights, dtype=np.float64)
    params = girg.GirgParams(d=d, tau=2.5, k=k, n=n, seed=0)
    if edges:
        eu = np.array([e[0] for e in edges], dtype=np.int64)
        ev = np.array([e[1] for e in edges], dtype=np.int64)
    else:
        eu = np.empty(0, dtype=np.int64)
        ev = np.empty(0, dtype=np.int64)
    offsets, neighbors = girg._csr_from_pairs(n, eu, ev)
    return girg.Graph(params, weights, positions, offsets, neighbors)


@pytest.fixture(scope="session")
def small_hs_params():
    """Modest half-space discretization shared by operator unit tests."""
    return mf.halfspace_params(2, 3.0, 40.0, w_cap=100.0, n_w=24, n_z=600)


@pytest.fixture(scope="session")
def small_hs_indicator(small_hs_params):
    return mf.halfspace_indicator(small_hs_params)

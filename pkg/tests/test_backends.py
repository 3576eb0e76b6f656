import numpy as np
import pytest

from perco import kernels, rng
from perco._accel import NUMBA_AVAILABLE, backend, set_backend
from perco.graph import build_window
from perco.percolation import clusters_at, phase_scan, sample_coupling
from perco.transport import subsampling_trial

pytestmark = pytest.mark.skipif(not NUMBA_AVAILABLE, reason="numba not installed")


def _both(fn):
    prev = set_backend("numba")
    try:
        a = fn()
        set_backend("numpy")
        b = fn()
    finally:
        set_backend(prev)
    return a, b


def test_set_backend_roundtrip():
    prev = set_backend("numpy")
    assert backend() == "numpy"
    set_backend(prev)
    assert backend() == prev
    with pytest.raises(ValueError):
        set_backend("fortran")


@pytest.mark.parametrize("family", ["tree_with_end", "grandparent", "unit_tree"])
def test_components_identical(family):
    w = build_window(family, 2, 10)
    cp = sample_coupling(w, 1)
    a, b = _both(lambda: clusters_at(w, cp, 0.5).root)
    assert np.array_equal(a, b)


def test_sweep_identical():
    w = build_window("grandparent", 2, 9)
    a, b = _both(lambda: [r.row() for r in phase_scan(w, [0.1, 0.3, 0.5, 0.9], 3, seed=4, collar=1)])
    assert a == b


def test_subsample_identical():
    a, b = _both(lambda: subsampling_trial("harmonic", 0.5, 3000, 500, seed=2).to_json())
    assert a == b


def test_enumeration_identical():
    w = build_window("grandparent", 2, 8)
    indptr, nbr, _ = w.csr

    def run():
        out = kernels.enumerate_connected(indptr, nbr, w.weight_units, int(w.level_offset(4)), 5, 10**6)
        return [np.asarray(x).tolist() if not isinstance(x, bool) else x for x in out]

    a, b = _both(run)
    assert a == b


def test_labeled_distances_identical():
    w = build_window("grandparent", 2, 8)
    indptr, nbr, eid = w.csr
    labels = 1 + (rng.uniforms(1, np.arange(w.n_edges, dtype=np.uint64)) * 4).astype(np.int64)
    a, b = _both(lambda: kernels.labeled_distances(indptr, nbr, eid, labels, 5))
    assert np.array_equal(a, b)

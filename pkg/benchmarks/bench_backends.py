"""Compare the numba kernels with the pure-numpy fallback.

    python benchmarks/bench_backends.py [--height 14] [--repeat 3]

Each kernel is run once per backend to warm up (JIT compile for numba), then
timed over ``--repeat`` runs; the best time is reported. Results of the two
backends are also compared for equality.
"""

import argparse
import time

import numpy as np

from perco import kernels, rng
from perco._accel import NUMBA_AVAILABLE, set_backend
from perco.graph import build_window
from perco.percolation import sample_coupling


def _best(fn, repeat):
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def cases(H):
    w = build_window("grandparent", 2, H, collar=1)
    labels = sample_coupling(w, 1).labels
    open_ = labels < 0.5
    eu, ev = w.edge_u[open_], w.edge_v[open_]
    order = np.argsort(labels, kind="stable")
    grid = np.linspace(0, 1, 41)
    snaps = np.searchsorted(labels[order], grid, side="left").astype(np.int64)
    heavy = w.depth <= w.collar
    key = rng.stream_key(5, rng.SUBSAMPLE)
    weights = 1.0 / np.arange(1, 10_001)
    indptr, nbr, _ = w.csr
    return {
        "components": lambda: kernels.components(w.n_vertices, eu, ev),
        "sweep (41 levels)": lambda: kernels.sweep(
            w.n_vertices, w.edge_u[order], w.edge_v[order], snaps, w.depth, w.weight_units, heavy, w.rim
        ),
        "uniforms (1e6)": lambda: rng.uniforms(key, np.arange(1_000_000, dtype=np.uint64)),
        "subsample (1e4 x 200)": lambda: kernels.subsample_sums(key, weights, 0.5, 200),
        "bfs": lambda: kernels.bfs(indptr, nbr, 0),
        "enumerate k=4": lambda: kernels.enumerate_connected(indptr, nbr, w.weight_units, int(w.level_offset(H // 2)), 4, 10**6),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--height", type=int, default=14)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not NUMBA_AVAILABLE:
        print("numba is not installed; nothing to compare")
        return 0
    print(f"grandparent q=2 H={args.height}")
    print(f"{'kernel':24s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speed-up':>9s}  equal")
    for name, fn in cases(args.height).items():
        set_backend("numba")
        t_nb, out_nb = _best(fn, args.repeat)
        set_backend("numpy")
        t_np, out_np = _best(fn, args.repeat)
        set_backend("numba")
        print(f"{name:24s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f}x  {_same(out_nb, out_np)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Percolation laboratory for weighted nonunimodular trees-with-an-end."""

__version__ = "0.1.0"

from .graph import GraphWindow, build_window, cocycle, orbit_count_ratio  # noqa: E402,F401
from .percolation import (  # noqa: E402,F401
    ClusterLabeling,
    EdgeCoupling,
    classify_heavy_proxy,
    cluster_weight,
    clusters_at,
    phase_scan,
    sample_coupling,
)

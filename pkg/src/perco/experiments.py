"""Experiment configuration, orchestration and result files.

Bulk records go to CSV, everything else to JSON. Exact weights are written as
integer numerators over a power of ``q`` and never as floats, so result files
are byte-identical across runs, backends and worker counts. The manifest
carries the wall time and therefore is the one file that differs run to run.
"""

import csv
import hashlib
import io
import json
import time
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, rng
from .geometry import cluster_metric_labels, labeled_annuli, verify_growth, weighted_cheeger_restricted
from .graph import FAMILIES, WindowTooLarge, build_window, canonical_family
from .parallel import map_replicas
from .percolation import PhaseScanRecord, clusters_at, phase_scan, sample_coupling, scan_crossovers
from .touching import merging_census, neighbor_graph, repulsion_statistics, touching_index
from .transport import builtin_scheme, check_tmtp, geodesic_transport, pick_interior, subsampling_trial

SUBCOMMANDS = ("window-info", "simulate", "phase-scan", "repulsion", "tmtp", "cheeger", "annuli", "merging", "subsample")
LABEL_MODES = ("from-cluster-metric", "ones", "random")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    subcommand: str
    family: str = "tree_with_end"
    q: int = 2
    H: int = 8
    collar: int = 0
    p: float | None = None
    p_grid: list[float] | None = None
    p1: float | None = None
    p2: float | None = None
    seed: int = 0
    replicas: int = 1
    kernels: list[str] = field(default_factory=lambda: ["to_parent", "to_children", "to_grandparent", "sphere_uniform:1"])
    k: int = 12
    root: str = "auto"
    N: int = 2
    n_max: int | None = None
    labels: str = "from-cluster-metric"
    c: float = 0.5
    terms: int = 10_000
    weights: str = "harmonic"
    out: str = "perco-out"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    def validate(self) -> "ExperimentConfig":
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        try:
            self.family = canonical_family(self.family)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.q < 2:
            raise ConfigError("q must be >= 2")
        if self.H < 1:
            raise ConfigError("height must be >= 1")
        if not 0 <= self.collar < self.H:
            raise ConfigError("collar must satisfy 0 <= collar < height")
        if self.replicas < 1:
            raise ConfigError("replicas must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        for name in ("p", "p1", "p2", "c"):
            v = getattr(self, name)
            if v is not None and not 0 <= v <= 1:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.p_grid is not None:
            g = list(self.p_grid)
            if not g or any(not 0 <= x <= 1 for x in g) or g != sorted(g):
                raise ConfigError("p_grid must be a nonempty sorted list in [0, 1]")
        needs_p = {"simulate", "repulsion"}
        if self.subcommand in needs_p and self.p is None and self.p_grid is None:
            raise ConfigError(f"{self.subcommand} needs --p or --p-grid")
        if self.subcommand == "phase-scan" and self.p_grid is None:
            raise ConfigError("phase-scan needs --p-grid")
        if self.subcommand == "merging":
            if self.p1 is None or self.p2 is None:
                raise ConfigError("merging needs --p1 and --p2")
            if self.p1 > self.p2:
                raise ConfigError("merging needs p1 <= p2")
        if self.subcommand == "annuli":
            if self.N < 1:
                raise ConfigError("N must be >= 1")
            if self.labels not in LABEL_MODES:
                raise ConfigError(f"labels must be one of {LABEL_MODES}")
            if self.labels == "from-cluster-metric" and self.p is None:
                raise ConfigError("--labels from-cluster-metric needs --p")
        if self.subcommand == "cheeger" and not 1 <= self.k <= 24:
            raise ConfigError("k must lie in 1..24")
        if self.subcommand == "subsample":
            if not 0 < self.c <= 1:
                raise ConfigError("c must lie in (0, 1]")
            if self.terms < 1:
                raise ConfigError("terms must be >= 1")
        if self.subcommand == "tmtp":
            for name in self.kernels:
                try:
                    scheme = builtin_scheme(name)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from None
                if not scheme.deterministic and self.p is None:
                    raise ConfigError(f"kernel {name} needs --p")
        if self.root != "auto":
            try:
                int(self.root)
            except ValueError:
                raise ConfigError("root must be 'auto' or a vertex index") from None
        return self

    def grid(self) -> list[float]:
        return list(self.p_grid) if self.p_grid is not None else [self.p]


@dataclass
class RunManifest:
    config: dict
    tool_version: str
    wall_time: float
    files: dict

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)


def digest(data: bytes) -> str:
    """64-bit checksum (BLAKE2b) as 16 hex digits."""
    return hashlib.blake2b(data, digest_size=8).hexdigest()


def _frac(x: Fraction) -> dict:
    return {"num": x.numerator, "den": x.denominator}


def _csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue().encode()


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n").encode()


def _json_default(o):
    if isinstance(o, Fraction):
        return _frac(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o)}")


def _root(cfg, window, radius):
    return pick_interior(window, radius) if cfg.root == "auto" else int(cfg.root)


def _run_window_info(cfg, window, threads):
    return {"window.json": _json_bytes(window.descriptor())}


def _run_scan(cfg, window, threads, name):
    records = phase_scan(window, cfg.grid(), cfg.replicas, cfg.seed, threads=threads)
    out = {f"{name}.csv": _csv_bytes(PhaseScanRecord.CSV_FIELDS, [r.row() for r in records])}
    if name == "phase_scan":
        out["crossovers.json"] = _json_bytes(scan_crossovers(records, window))
    return out


def _run_repulsion(cfg, window, threads):
    grid = cfg.grid()

    def one(r):
        coupling = sample_coupling(window, rng.replica_seed(cfg.seed, r))
        rows, degs = [], []
        for p in grid:
            lab = clusters_at(window, coupling, p)
            idx = touching_index(lab)
            table = repulsion_statistics(lab, index=idx)
            rows += [[repr(float(p)), r, *row] for row in table.rows()]
            ng = neighbor_graph(lab, "nonempty", index=idx)
            degs.append({"p": p, "replica": r, "heavy_degrees": sorted(int(d) for d in ng.heavy_degrees())})
        return rows, degs

    results = map_replicas(one, cfg.replicas, threads)
    rows = [row for res in results for row in res[0]]
    rows.sort(key=lambda row: (float(row[0]), row[1]))
    degs = sorted((d for res in results for d in res[1]), key=lambda d: (d["p"], d["replica"]))
    header = ["p", "replica", "C", "C_prime", "wC", "wC_prime", "wTau", "sizeTau"]
    summary = {"weight_den_exp": 0 if window.family == "unit_tree" else window.H, "neighbor_degrees": degs}
    return {"repulsion.csv": _csv_bytes(header, rows), "repulsion_summary.json": _json_bytes(summary)}


def _run_merging(cfg, window, threads):
    def one(r):
        coupling = sample_coupling(window, rng.replica_seed(cfg.seed, r))
        census = merging_census(window, coupling, cfg.p1, cfg.p2)
        ids = census.cluster_ids[census.heavy]
        return [[repr(cfg.p1), repr(cfg.p2), r, int(c), int(n)] for c, n in zip(ids, census.heavy_counts())]

    rows = [row for res in map_replicas(one, cfg.replicas, threads) for row in res]
    return {"merging.csv": _csv_bytes(["p1", "p2", "replica", "cluster", "count"], rows)}


def _run_tmtp(cfg, window, threads):
    reports = []
    for name in cfg.kernels:
        scheme = builtin_scheme(name)
        rho = None if cfg.root == "auto" else int(cfg.root)
        rep = check_tmtp(window, scheme, p=cfg.p, seed=cfg.seed, replicas=max(cfg.replicas, 2), rho=rho)
        reports.append(rep.to_json())
    return {"tmtp.json": _json_bytes({"window": window.descriptor(), "reports": reports})}


def _run_cheeger(cfg, window, threads):
    root = _root(cfg, window, 1) if cfg.root == "auto" else int(cfg.root)
    if cfg.root == "auto":
        root = window.level_offset(window.H // 2)
    rep = weighted_cheeger_restricted(window, root, cfg.k)
    growth = verify_growth(window, root, cfg.n_max)
    body = rep.to_json()
    body["growth"] = {
        "phi_ball": _frac(growth.phi_ball) if growth.phi_ball is not None else None,
        "passed": growth.passed,
        "rows": [{"n": row["n"], "sphere": _frac(row["sphere"]), "bound": _frac(row["bound"]), "pass": row["pass"]} for row in growth.rows],
    }
    return {"cheeger.json": _json_bytes(body)}


def _run_annuli(cfg, window, threads):
    if cfg.labels == "from-cluster-metric":
        coupling = sample_coupling(window, rng.replica_seed(cfg.seed, 0))
        lab = clusters_at(window, coupling, cfg.p)
        graph, labels = cluster_metric_labels(lab, lab.cluster_of(0), cfg.N)
        root = 0 if cfg.root == "auto" else graph.local_index(int(cfg.root))
    else:
        graph = window.graph
        if cfg.labels == "ones":
            labels = np.ones(len(graph.eu), dtype=np.int64)
        else:
            key = rng.stream_key(cfg.seed, rng.EDGE ^ 0x4C4142)
            u = rng.uniforms(key, np.arange(len(graph.eu), dtype=np.uint64))
            labels = 1 + np.minimum((u * cfg.N).astype(np.int64), cfg.N - 1)
        root = 0 if cfg.root == "auto" else int(cfg.root)
    prof = labeled_annuli(graph, labels, root, cfg.N, cfg.n_max)
    return {"annuli.json": _json_bytes(prof.to_json())}


def _run_subsample(cfg, window, threads):
    trial = subsampling_trial(cfg.weights, cfg.c, cfg.terms, cfg.replicas, cfg.seed)
    return {"subsample.json": _json_bytes(trial.to_json())}


_RUNNERS = {
    "window-info": _run_window_info,
    "simulate": lambda c, w, t: _run_scan(c, w, t, "simulate"),
    "phase-scan": lambda c, w, t: _run_scan(c, w, t, "phase_scan"),
    "repulsion": _run_repulsion,
    "tmtp": _run_tmtp,
    "cheeger": _run_cheeger,
    "annuli": _run_annuli,
    "merging": _run_merging,
    "subsample": _run_subsample,
}


def execute(cfg: ExperimentConfig, threads: int | None = None) -> dict[str, bytes]:
    """Run an experiment and return ``{file name: contents}`` without touching disk."""
    cfg.validate()
    window = build_window(cfg.family, cfg.q, cfg.H, cfg.collar)
    return _RUNNERS[cfg.subcommand](cfg, window, threads)


def run(cfg: ExperimentConfig, threads: int | None = None) -> RunManifest:
    """Run ``cfg``, write its result files and ``manifest.json`` under ``cfg.out``."""
    t0 = time.perf_counter()
    results = execute(cfg, threads)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for name, data in sorted(results.items()):
        (out / name).write_bytes(data)
        files[name] = digest(data)
    manifest = RunManifest(cfg.to_dict(), __version__, round(time.perf_counter() - t0, 6), files)
    (out / "manifest.json").write_text(manifest.to_json() + "\n")
    return manifest


__all__ = ["ExperimentConfig", "RunManifest", "ConfigError", "WindowTooLarge", "run", "execute", "FAMILIES", "geodesic_transport"]

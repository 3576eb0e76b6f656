"""``perco`` command line.

Exit codes: 0 success, 2 invalid configuration, 3 budget exceeded,
4 I/O failure.
"""

import argparse
import sys

from .experiments import SUBCOMMANDS, ConfigError, ExperimentConfig, run
from .graph import WindowTooLarge

EXIT_CONFIG, EXIT_BUDGET, EXIT_IO = 2, 3, 4


def parse_grid(text: str) -> list[float]:
    """``a:b:step`` (inclusive of ``b`` up to rounding) or a comma list."""
    if ":" in text:
        try:
            a, b, step = (float(x) for x in text.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None
        if step <= 0 or b < a:
            raise argparse.ArgumentTypeError("grid needs a <= b and step > 0")
        n = int(round((b - a) / step + 1e-9))
        return [round(a + i * step, 12) for i in range(n + 1)]
    return [float(x) for x in text.split(",")]


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--family", default="tree", choices=["tree", "grandparent", "unit-tree", "tree_with_end", "unit_tree"])
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--height", type=int, default=8)
    p.add_argument("--collar", type=int, default=0)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--p", type=float)
    g.add_argument("--p-grid", type=parse_grid)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--out", default="perco-out")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: $PERCO_THREADS or 1)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="perco", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    common = _common()
    parsers = {name: sub.add_parser(name, parents=[common]) for name in SUBCOMMANDS}
    parsers["tmtp"].add_argument("--kernels", default="to_parent,to_children,to_grandparent,sphere_uniform:1")
    parsers["tmtp"].add_argument("--root", default="auto")
    parsers["cheeger"].add_argument("--k", type=int, default=12)
    parsers["cheeger"].add_argument("--root", default="auto")
    parsers["cheeger"].add_argument("--n-max", type=int, default=None)
    parsers["annuli"].add_argument("--N", type=int, default=2)
    parsers["annuli"].add_argument("--labels", default="from-cluster-metric")
    parsers["annuli"].add_argument("--root", default="auto")
    parsers["annuli"].add_argument("--n-max", type=int, default=None)
    parsers["merging"].add_argument("--p1", type=float, required=True)
    parsers["merging"].add_argument("--p2", type=float, required=True)
    parsers["subsample"].add_argument("--c", type=float, default=0.5)
    parsers["subsample"].add_argument("--terms", type=int, default=10_000)
    parsers["subsample"].add_argument("--weights", default="harmonic")
    return parser


def config_from_args(args) -> ExperimentConfig:
    data = {
        "subcommand": args.subcommand,
        "family": args.family,
        "q": args.q,
        "H": args.height,
        "collar": args.collar,
        "p": args.p,
        "p_grid": args.p_grid,
        "seed": args.seed,
        "replicas": args.replicas,
        "out": args.out,
    }
    for name in ("root", "k", "N", "labels", "p1", "p2", "c", "terms", "weights"):
        if hasattr(args, name):
            data[name] = getattr(args, name)
    if hasattr(args, "n_max"):
        data["n_max"] = args.n_max
    if hasattr(args, "kernels"):
        data["kernels"] = [k for k in args.kernels.split(",") if k]
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args).validate()
        manifest = run(cfg, threads=args.threads)
    except ConfigError as exc:
        print(f"perco: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except WindowTooLarge as exc:
        print(f"perco: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except OSError as exc:
        print(f"perco: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    print(manifest.to_json())
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

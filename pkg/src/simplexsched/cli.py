"""Command line driver: ``run``, ``sweep``, ``compare`` and ``oracle``."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .harness import ExperimentConfig, Trace, compare_report, run_experiment
from .simplex import sim_run
from .topology import independent_set_matrix, max_uniform_rate, parse_graph_spec

CONFIG_FIELDS = [f.name for f in dataclasses.fields(ExperimentConfig)]


def _add_config_flags(p: argparse.ArgumentParser, skip=()) -> None:
    p.add_argument("--config", help="key=value config file; flags override it")
    for name in CONFIG_FIELDS:
        if name in skip:
            continue
        flags = [f"--{name}"]
        if "_" in name:
            flags.append(f"--{name.replace('_', '-')}")
        p.add_argument(*flags, dest=name, metavar="VALUE")


def _config_from_args(args, **extra) -> ExperimentConfig:
    overrides = {k: getattr(args, k) for k in CONFIG_FIELDS
                 if getattr(args, k, None) is not None}
    overrides.update(extra)
    if args.config:
        return ExperimentConfig.from_file(args.config, **overrides)
    return ExperimentConfig.from_mapping(overrides)


def _seed_path(output: str, seed: int) -> str:
    if not output:
        return ""
    if "{seed}" in output:
        return output.format(seed=seed)
    p = Path(output)
    return str(p.with_name(f"{p.stem}_seed{seed}{p.suffix}"))


def _run_one(cfg: ExperimentConfig) -> dict:
    return run_experiment(cfg).summary.as_dict()


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    summary = run_experiment(cfg).summary
    text = summary.to_text()
    print(text, end="")
    if args.summary:
        Path(args.summary).write_text(text)
    return 0


def cmd_sweep(args) -> int:
    base = _config_from_args(args, seed=1)
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    if not seeds:
        raise ValueError("no seeds given")
    cfgs = [dataclasses.replace(base, seed=s, output=_seed_path(base.output, s)) for s in seeds]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(_run_one, cfgs))
    else:
        rows = [_run_one(c) for c in cfgs]
    keys = list(rows[0])
    lines = [",".join(keys)] + [",".join(str(r[k]) for k in keys) for r in rows]
    print("\n".join(lines))
    if args.summary:
        Path(args.summary).write_text("\n".join(lines) + "\n")
    return 0


def cmd_compare(args) -> int:
    a, b = Trace.from_csv(args.trace_a), Trace.from_csv(args.trace_b)
    print(compare_report(a, b).format((Path(args.trace_a).stem, Path(args.trace_b).stem)))
    return 0


def cmd_oracle(args) -> int:
    g = parse_graph_spec(args.graph)
    rate = max_uniform_rate(g)
    print(f"links={g.n}")
    print(f"edges={len(g.edges)}")
    print(f"independent_sets={len(independent_set_matrix(g))}")
    print(f"max_uniform_rate={rate!r}")
    if args.load is not None:
        res = sim_run(g, [args.load * rate] * g.n)
        print(f"sim_gamma={float(res.gamma)!r}")
        print(f"sim_iterations={res.iterations}")
        cols, x = res.support()
        for col, w in zip(cols, x):
            if w > 0:
                print(f"support {''.join(map(str, col))} {float(w)!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simplexsched", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment and print its summary")
    _add_config_flags(p)
    p.add_argument("--summary", help="also write the summary to this file")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run one experiment per seed")
    _add_config_flags(p, skip=("seed",))
    p.add_argument("--seeds", default="1,2,3,4,5", help="comma separated seeds")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--summary", help="also write the summary table (CSV) here")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="side-by-side statistics of two traces")
    p.add_argument("trace_a")
    p.add_argument("trace_b")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("oracle", help="print exact reference quantities for a graph")
    p.add_argument("--graph", default="star:7")
    p.add_argument("--load", type=float, help="also solve the relaxation at this load")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"simplexsched {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

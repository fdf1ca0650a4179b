"""Command line entry point: ``d2dcache {run,generate-trace,hindsight,validate-config}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness, hindsight
from .workload import generate_trace, read_trace, write_trace


def cmd_run(args) -> int:
    cfg = harness.load_config(args.config)
    if args.replications is not None:
        cfg.replications = args.replications
    if args.workers is not None:
        cfg.workers = args.workers
    results = harness.run_experiment(cfg, args.output_dir)
    for row in harness.summary_rows(results):
        print(f"rep {row['replication']} {row['policy']:>8}: avg cost {row['running_avg']:.4f} "
              f"regret {row['regret']:.1f} (bound {row['regret_bound']:.1f})")
    return 0


def cmd_generate_trace(args) -> int:
    cfg = harness.load_config(args.config)
    net = cfg.build_network(args.replication)
    trace = generate_trace(cfg.generator_spec(args.replication), net)
    write_trace(trace, args.output)
    print(f"wrote {len(trace)} requests to {args.output}")
    return 0


def cmd_hindsight(args) -> int:
    cfg = harness.load_config(args.config)
    net = cfg.build_network(args.replication)
    trace = read_trace(args.trace)
    schedule = cfg.build_schedule()
    if schedule is None:
        profile = hindsight.aggregate(trace)
    else:
        profile = hindsight.aggregate_segments(trace, net, schedule.view_fn(net))
    res = hindsight.best_static(profile, net, method=args.method)
    lines = ["device,file,fraction"]
    for (i, n), v in np.ndenumerate(res.y):
        lines.append(f"{i},{n},{round(float(v), 12)!r}")
    Path(args.output).write_text("\n".join(lines) + "\n")
    print(f"total cost {res.cost:.6f} over {len(trace)} slots ({res.cost / len(trace):.6f} per slot)")
    return 0


def cmd_validate(args) -> int:
    harness.load_config(args.config)
    print(f"{args.config}: ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="d2dcache", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment and write CSV metrics")
    p.add_argument("config")
    p.add_argument("output_dir")
    p.add_argument("--replications", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("generate-trace", help="write the request trace a config would use")
    p.add_argument("config")
    p.add_argument("output")
    p.add_argument("--replication", type=int, default=0)
    p.set_defaults(func=cmd_generate_trace)

    p = sub.add_parser("hindsight", help="best static configuration for a trace")
    p.add_argument("config", help="config supplying the network")
    p.add_argument("trace")
    p.add_argument("output")
    p.add_argument("--replication", type=int, default=0, help="network placement index")
    p.add_argument("--method", choices=("lp", "subgradient"), default="lp")
    p.set_defaults(func=cmd_hindsight)

    p = sub.add_parser("validate-config", help="check a config file")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (harness.ConfigError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

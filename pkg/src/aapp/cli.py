"""Command-line entry point.

Subcommands: check (validate a script), schedule (one-shot decision over a
state file), simulate / compare (run the cluster simulator), serve (launch
the scheduling service).  Exit codes: 0 success, 1 input/config error,
2 not schedulable.
"""

from __future__ import annotations

import argparse
import csv
import random
import sys
from pathlib import Path

import yaml

from . import cluster as _cluster
from .cluster import ActivityState, ClusterConfig, Registry
from .dsl import ParseError, check_script, parse_script
from .scheduler import NotSchedulable, SchedulingError, schedule
from .service import SchedulerService, make_server
from .simulator import (
    ConfigError,
    compare_policies,
    load_sim_config,
    run_simulation,
)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_NOT_SCHEDULABLE = 2


def _load_script(path: str):
    text = Path(path).read_text(encoding="utf-8")
    return parse_script(text)


def _cmd_check(args) -> int:
    try:
        script = _load_script(args.script)
    except ParseError as exc:
        print(
            f"ERROR {args.script}:{exc.line}:{exc.col} {exc.message}",
            file=sys.stderr,
        )
        return EXIT_INPUT_ERROR
    except OSError as exc:
        print(f"ERROR {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    config = None
    if args.cluster:
        try:
            config = ClusterConfig.from_file(args.cluster)
        except (OSError, ValueError, KeyError) as exc:
            print(f"ERROR {args.cluster}: {exc}", file=sys.stderr)
            return EXIT_INPUT_ERROR
    for diag in check_script(script, config):
        print(diag.render(args.script), file=sys.stderr)
    return EXIT_OK


def _load_state_file(path: str, config, registry) -> ActivityState:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    state = ActivityState(config, registry)
    if data is None:
        return state
    if not isinstance(data, list):
        raise ValueError("state file must be a list of live instances")
    for entry in data:
        state.record_allocation(
            str(entry["worker"]), str(entry["activation"]), str(entry["function"])
        )
    return state


def _cmd_schedule(args) -> int:
    try:
        script = _load_script(args.script)
        config = ClusterConfig.from_file(args.cluster)
        registry = Registry.from_file(args.registry)
        state = _load_state_file(args.state, config, registry)
    except (OSError, ValueError, KeyError, TypeError, ParseError,
            _cluster.StateError) as exc:
        print(f"ERROR {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    rng = random.Random(args.seed) if args.seed is not None else None
    try:
        decision = schedule(
            args.function, state.snapshot(), script, registry, config, rng
        )
    except NotSchedulable as exc:
        print(f"not schedulable: {exc}", file=sys.stderr)
        return EXIT_NOT_SCHEDULABLE
    except (SchedulingError, _cluster.StateError) as exc:
        print(f"ERROR {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    print(
        f"worker={decision.worker} block={decision.block_index} "
        f"considered={decision.considered}"
    )
    return EXIT_OK


def _write_events(path: str, events) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for event in events:
            fh.write(event.line() + "\n")


def _write_metrics(path: str, metrics) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "index", "arrival_ms", "latency_ms", "outcome", "retries",
                "divide_worker", "divide_zone", "colocated",
            ]
        )
        for r in metrics.invocations:
            writer.writerow(
                [
                    r.index, r.arrival_ms,
                    "" if r.latency_ms is None else r.latency_ms,
                    r.outcome, r.retries, r.divide_worker or "",
                    r.divide_zone or "", int(r.colocated),
                ]
            )
        writer.writerow(["aggregate", "mean_latency_ms", f"{metrics.mean_latency:.3f}"])
        writer.writerow(
            ["aggregate", "median_latency_ms", f"{metrics.median_latency:.3f}"]
        )
        writer.writerow(["aggregate", "p95_latency_ms", f"{metrics.p95_latency:.3f}"])
        writer.writerow(
            ["aggregate", "stdev_latency_ms", f"{metrics.stdev_latency:.3f}"]
        )
        writer.writerow(["aggregate", "total_retries", metrics.total_retries])
        writer.writerow(
            ["aggregate", "colocation_fraction", f"{metrics.colocation_fraction:.4f}"]
        )
        writer.writerow(["aggregate", "rejected", metrics.rejected])
        writer.writerow(["aggregate", "failed", metrics.failed])


def _write_series(path: str, series) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["percentile", "latency_ms"])
        for pct, latency in series:
            writer.writerow([f"{pct:.4f}", latency])


def _cmd_simulate(args) -> int:
    try:
        cfg = load_sim_config(args.config)
        events, metrics = run_simulation(cfg, collect_events=bool(args.events))
    except (OSError, ValueError, KeyError, TypeError, ParseError,
            ConfigError) as exc:
        print(f"ERROR {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    if args.events:
        _write_events(args.events, events)
    if args.metrics:
        _write_metrics(args.metrics, metrics)
    if args.series:
        _write_series(args.series, metrics.sorted_latency_series())
    print(
        f"invocations={len(metrics.invocations)} "
        f"mean={metrics.mean_latency:.1f}ms median={metrics.median_latency:.1f}ms "
        f"p95={metrics.p95_latency:.1f}ms retries={metrics.total_retries} "
        f"colocation={metrics.colocation_fraction:.3f} "
        f"rejected={metrics.rejected} failed={metrics.failed}"
    )
    return EXIT_OK


def _cmd_compare(args) -> int:
    try:
        cfg = load_sim_config(args.config)
        named = []
        for spec in args.scripts.split(","):
            spec = spec.strip()
            if not spec:
                continue
            named.append((Path(spec).stem, _load_script(spec)))
        if not named:
            raise ValueError("--scripts must list at least one script")
        comparison = compare_policies(cfg, named)
    except (OSError, ValueError, KeyError, TypeError, ParseError,
            ConfigError) as exc:
        print(f"ERROR {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    print(comparison.table())
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "script", "mean_latency_ms", "median_latency_ms",
                    "p95_latency_ms", "stdev_latency_ms", "total_retries",
                    "colocation_fraction", "rejected", "failed",
                ]
            )
            for row in comparison.rows:
                writer.writerow(
                    [
                        row.name, f"{row.mean_latency:.3f}",
                        f"{row.median_latency:.3f}", f"{row.p95_latency:.3f}",
                        f"{row.stdev_latency:.3f}", row.total_retries,
                        f"{row.colocation_fraction:.4f}", row.rejected,
                        row.failed,
                    ]
                )
    return EXIT_OK


def _cmd_serve(args) -> int:
    try:
        script = _load_script(args.script)
        config = ClusterConfig.from_file(args.cluster)
        registry = Registry.from_file(args.registry)
    except (OSError, ValueError, KeyError, TypeError, ParseError) as exc:
        print(f"ERROR {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    service = SchedulerService(script, registry, config, seed=args.seed)
    server = make_server(service, args.host, args.port)
    host, port = server.server_address[:2]
    print(f"listening on http://{host}:{port}", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aapp",
        description="Affinity-aware serverless scheduling toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate a policy script")
    p.add_argument("--script", required=True)
    p.add_argument("--cluster", default=None)
    p.set_defaults(fn=_cmd_check)

    p = sub.add_parser("schedule", help="one-shot scheduling decision")
    p.add_argument("--script", required=True)
    p.add_argument("--cluster", required=True)
    p.add_argument("--registry", required=True)
    p.add_argument("--state", required=True)
    p.add_argument("--function", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=_cmd_schedule)

    p = sub.add_parser("simulate", help="run one cluster simulation")
    p.add_argument("--config", required=True)
    p.add_argument("--events", default=None)
    p.add_argument("--metrics", default=None)
    p.add_argument("--series", default=None)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("compare", help="run the same simulation per script")
    p.add_argument("--config", required=True)
    p.add_argument("--scripts", required=True, help="comma-separated paths")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_compare)

    p = sub.add_parser("serve", help="launch the scheduling service")
    p.add_argument("--script", required=True)
    p.add_argument("--cluster", required=True)
    p.add_argument("--registry", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())

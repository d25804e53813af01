"""Command-line entry point: ``rrcguard {run,sweep,serve-gnb,serve-xapp,inspect}``.

Exit codes: 0 success, 1 runtime error, 2 configuration error, 3 a suite
check failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from collections import Counter
from pathlib import Path
from typing import List, Optional

from .core import ParamsError
from .harness.metrics import classify_run
from .harness.suites import SUITES
from .harness.sweep import rows_to_csv, sweep
from .ransim.config import ScenarioConfig, load_config
from .ransim.engine import EventTrace, Simulator
from .ransim.model import ConfigError
from .ransim.presets import PRESETS, build_preset

log = logging.getLogger("rrcguard")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_CHECKS = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _scenario(args) -> ScenarioConfig:
    if bool(args.config) == bool(args.preset):
        raise UsageError("give exactly one of --config or --preset")
    if args.preset:
        return build_preset(args.preset, args.seed if args.seed is not None else 0)
    config = load_config(args.config)
    if args.seed is not None:
        config = config.replace(seed=args.seed)
    return config


def _output_dir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write_run(out: Path, trace: EventTrace, config: ScenarioConfig) -> dict:
    trace.write_jsonl(out / "trace.jsonl")
    trace.write_windows_csv(out / "windows.csv")
    if trace.complete:
        outcome = classify_run(trace, config).to_dict()
    else:
        outcome = {"scenario": config.name, "seed": config.seed, "complete": False}
    (out / "outcome.json").write_text(_dump(outcome))
    return outcome


def _summary_line(outcome: dict) -> str:
    if "classification" not in outcome:
        return f"{outcome['scenario']} seed={outcome['seed']}: interrupted, partial trace written"
    fmt = lambda v: "-" if v is None else f"{v} ms"
    return (f"{outcome['scenario']} seed={outcome['seed']}: {outcome['classification']} "
            f"detection={fmt(outcome['detection_time_ms'])} "
            f"mitigation={fmt(outcome['mitigation_time_ms'])} "
            f"depletion={fmt(outcome['depletion_time_ms'])} "
            f"victim_blocked={outcome['victim_blocked']}")


# -- subcommands ------------------------------------------------------------------------

def cmd_run(args) -> int:
    config = _scenario(args)
    out = _output_dir(args)
    trace = Simulator(config).run()
    outcome = _write_run(out, trace, config)
    print(json.dumps(outcome, sort_keys=True) if args.json else _summary_line(outcome))
    return EXIT_OK


def _parse_grid(items: List[str]) -> dict:
    grid = {}
    for item in items:
        key, sep, values = item.partition("=")
        if not sep or not values:
            raise UsageError(f"bad --grid item {item!r}, expected key=v1,v2")
        grid[key] = [_number(v) for v in values.split(",")]
    return grid


def _number(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def cmd_sweep(args) -> int:
    out = _output_dir(args)
    if args.preset:
        if args.preset not in SUITES:
            raise UsageError(f"unknown sweep preset {args.preset!r}; choose from {sorted(SUITES)}")
        result = SUITES[args.preset]()
        (out / f"{result.name}.csv").write_text(rows_to_csv(result.rows))
        (out / f"{result.name}.json").write_text(_dump(result.to_dict()))
        if args.json:
            print(json.dumps(result.to_dict(), sort_keys=True))
        else:
            for check in result.checks:
                print(check.line())
        return EXIT_OK if result.passed else EXIT_CHECKS
    if not args.config:
        raise UsageError("sweep needs --preset or --config")
    if not args.grid:
        raise UsageError("a --config sweep needs at least one --grid key=v1,v2")
    base = load_config(args.config)
    seeds = range(args.seed or 0, (args.seed or 0) + args.runs)
    cells = sweep(base, _parse_grid(args.grid), seeds)
    rows = [cell.summary.row(**cell.params) for cell in cells]
    (out / "sweep.csv").write_text(rows_to_csv(rows))
    (out / "sweep.json").write_text(_dump(rows))
    print(json.dumps(rows, sort_keys=True) if args.json else rows_to_csv(rows), end="")
    return EXIT_OK


def wall_pacer(time_scale: float):
    """Sleep so sim time advances ``time_scale`` times faster than wall time; 0 disables."""
    if time_scale <= 0:
        return None
    origin = time.monotonic()

    def pace(t_ms: int) -> None:
        delay = origin + t_ms / 1000.0 / time_scale - time.monotonic()
        if delay > 0:
            time.sleep(delay)
    return pace


def cmd_serve_gnb(args) -> int:
    from .e2lite.server import E2Server, GnbBridge

    config = _scenario(args)
    out = _output_dir(args)
    try:
        server = E2Server(args.host, args.port)
    except OSError as exc:
        print(f"error: cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    endpoint = server.add_cell(config.cell_id, config.params)
    host, port = server.address
    print(f"listening on {host}:{port}", flush=True)
    server.start()
    sim = None
    try:
        if config.closed_loop and not endpoint.subscribed.wait(args.wait_s):
            print(f"error: no xApp subscribed within {args.wait_s} s", file=sys.stderr)
            return EXIT_RUNTIME
        sim = Simulator(config, GnbBridge(endpoint, args.reply_timeout_s),
                        pacer=wall_pacer(args.time_scale), blocklist=endpoint.blocklist,
                        lock=endpoint.lock)
        endpoint.simulator = sim
        trace = sim.run()
    except KeyboardInterrupt:
        trace = sim.trace if sim is not None else EventTrace(config.name, config.seed,
                                                              config.cell_id)
        _write_run(out, trace, config)
        print(_summary_line({"scenario": config.name, "seed": config.seed}), flush=True)
        return 130
    finally:
        server.close()
    outcome = _write_run(out, trace, config)
    log.info("gNB: %d rejected attempts", len(trace.of("rejected")))
    print(json.dumps(outcome, sort_keys=True) if args.json else _summary_line(outcome),
          flush=True)
    return EXIT_OK


def cmd_serve_xapp(args) -> int:
    from .e2lite.client import XappClient

    client = XappClient(args.host, args.port)
    deadline = time.monotonic() + args.wait_s
    while True:
        try:
            client.connect()
            break
        except OSError as exc:
            if time.monotonic() > deadline:
                print(f"error: cannot reach gNB at {args.host}:{args.port}: {exc}",
                      file=sys.stderr)
                return EXIT_RUNTIME
            time.sleep(0.1)
    try:
        for cell in args.cell:
            client.subscribe(cell)
        client.run()
    except KeyboardInterrupt:
        pass
    finally:
        client.close()
    counts = {cell: dict(Counter(kind for _, kind in v)) for cell, v in client.verdicts.items()}
    print(json.dumps(counts, sort_keys=True) if args.json else
          "; ".join(f"cell {c}: " + ", ".join(f"{k}={n}" for k, n in sorted(v.items()))
                    for c, v in counts.items()), flush=True)
    return EXIT_OK


def cmd_inspect(args) -> int:
    trace = EventTrace.from_jsonl(Path(args.trace).read_text())
    kinds = Counter(e["ev"] for e in trace.events)
    verdicts = Counter(v for _, v in trace.verdicts())
    first_attack = next((w for w in trace.windows if w["verdict"] == "AttackDetected"), None)
    info = {
        "scenario": trace.scenario, "seed": trace.seed, "cell_id": trace.cell_id,
        "complete": trace.complete, "events": dict(kinds),
        "verdicts": {str(k): n for k, n in verdicts.items()},
        "first_attack_window": first_attack["window_id"] if first_attack else None,
        "final_blocklist": trace.final_blocklist(),
    }
    if args.json:
        print(json.dumps(info, sort_keys=True))
        return EXIT_OK
    print(f"{trace.scenario} seed={trace.seed} cell={trace.cell_id} "
          f"complete={trace.complete}")
    print("events: " + ", ".join(f"{k}={n}" for k, n in sorted(kinds.items())))
    print("verdicts: " + ", ".join(f"{k}={n}" for k, n in sorted(info["verdicts"].items())))
    print(f"first AttackDetected window: {info['first_attack_window']}")
    for entry in info["final_blocklist"]:
        print(f"  entry {entry['id']}: ({entry['mu_ta']:.2f}, {entry['mu_rssi']:.2f}) "
              f"c={entry['c']} tau={entry['tau_ms']} ms")
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rrcguard", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p, presets):
        p.add_argument("--config", help="scenario YAML file")
        p.add_argument("--preset", choices=sorted(presets))
        p.add_argument("--seed", type=int)
        p.add_argument("--output-dir", default=".")
        p.add_argument("--json", action="store_true", help="machine-readable summary")

    p = sub.add_parser("run", help="run one scenario")
    scenario_args(p, PRESETS)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a named suite or a parameter grid")
    scenario_args(p, SUITES)
    p.add_argument("--grid", action="append", default=[], metavar="KEY=V1,V2")
    p.add_argument("--runs", type=int, default=10, help="seeds per grid cell")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve-gnb", help="simulate a cell and serve it over E2-lite")
    scenario_args(p, PRESETS)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--time-scale", type=float, default=1.0,
                   help="sim ms per wall ms; 0 runs unpaced")
    p.add_argument("--wait-s", type=float, default=30.0, help="wait this long for an xApp")
    p.add_argument("--reply-timeout-s", type=float, default=5.0)
    p.set_defaults(func=cmd_serve_gnb)

    p = sub.add_parser("serve-xapp", help="connect to a gNB and run detection")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--cell", type=int, action="append", help="cell id (repeatable)")
    p.add_argument("--wait-s", type=float, default=10.0, help="keep retrying the connect")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_serve_xapp)

    p = sub.add_parser("inspect", help="summarize a trace.jsonl")
    p.add_argument("trace")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    # long-running serve modes log the loop at INFO by default
    base = 1 if args.command.startswith("serve") else 0
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose + base, 2)]
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    if getattr(args, "cell", "unset") is None:
        args.cell = [1]
    try:
        return args.func(args)
    except (ConfigError, ParamsError, UsageError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # noqa: BLE001 - last-resort reporting for the exit code
        log.debug("runtime error", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

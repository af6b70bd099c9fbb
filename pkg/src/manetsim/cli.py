"""Command line entry point: ``manetsim run`` and ``manetsim sweep``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

from . import PROTOCOLS
from .report import emit_report
from .scenario import ConfigError, ScenarioConfig, SweepError, run_scenario, sweep


def _area(text: str) -> tuple:
    try:
        w, h = text.lower().split("x")
        return float(w), float(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"area must look like 867x561, got {text!r}") from None


def _floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v]


def _ints(text: str) -> list:
    return [int(v) for v in text.split(",") if v]


def _scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON scenario file; flags below override it")
    p.add_argument("--protocol", choices=PROTOCOLS)
    p.add_argument("--nodes", type=int)
    p.add_argument("--area", type=_area, help="arena WxH in meters")
    p.add_argument("--duration", type=float, help="simulation time in seconds")
    p.add_argument("--seed", type=int)
    p.add_argument("--mobility", help="rwp or trace:<fcd.xml>")
    p.add_argument("--speed", type=_floats, help="min,max speed for rwp (m/s)")
    p.add_argument("--flows", type=int, help="number of CBR flows")
    p.add_argument("--packet-size", type=int)
    p.add_argument("--rate", type=float, help="aggregate offered load, packets/s")
    p.add_argument("--range", type=float, help="radio range in meters")
    p.add_argument("--loss", type=float, help="per-frame loss probability")
    p.add_argument("--out", default="out", help="report directory")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    p.add_argument("--event-trace", help="write time_us,node,action_kind per event to this file")
    p.add_argument("-v", "--verbose", action="store_true")


def build_config(args: argparse.Namespace) -> ScenarioConfig:
    cfg = ScenarioConfig.from_json(args.config) if args.config else ScenarioConfig()
    if args.protocol:
        cfg = replace(cfg, protocol=args.protocol)
    if args.nodes is not None:
        cfg = replace(cfg, n_nodes=args.nodes)
    if args.area is not None:
        cfg = replace(cfg, arena=args.area)
    if args.duration is not None:
        cfg = replace(cfg, duration=args.duration)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    mob = cfg.mobility
    if args.mobility:
        if args.mobility == "rwp":
            mob = replace(mob, model="rwp", trace_path=None)
        elif args.mobility.startswith("trace:"):
            mob = replace(mob, model="trace", trace_path=args.mobility[len("trace:"):])
        else:
            raise ConfigError(f"--mobility must be rwp or trace:<path>, got {args.mobility!r}")
    if args.speed:
        if len(args.speed) != 2:
            raise ConfigError("--speed takes min,max")
        mob = replace(mob, speed_min=args.speed[0], speed_max=args.speed[1])
    flows = cfg.flows
    if args.flows is not None:
        flows = replace(flows, n_flows=args.flows)
    if args.packet_size is not None:
        flows = replace(flows, packet_size=args.packet_size)
    if args.rate is not None:
        flows = replace(flows, rate=args.rate)
    channel = cfg.channel
    try:
        if args.range is not None:
            channel = replace(channel, range=args.range)
        if args.loss is not None:
            channel = replace(channel, loss_prob=args.loss)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return replace(cfg, mobility=mob, flows=flows, channel=channel).validate()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="manetsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="simulate one scenario")
    _scenario_flags(run_p)
    sweep_p = sub.add_parser("sweep", help="simulate protocols x times x seeds")
    _scenario_flags(sweep_p)
    sweep_p.add_argument("--times", type=_floats, default=[25, 50, 75, 100, 125, 150, 175, 200])
    sweep_p.add_argument("--seeds", type=_ints, default=[1])
    sweep_p.add_argument("--protocols", default=",".join(PROTOCOLS))
    sweep_p.add_argument("--workers", type=int, default=1)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    try:
        cfg = build_config(args)
        if args.command == "run":
            if args.event_trace:
                with open(args.event_trace, "w") as trace:
                    results = [run_scenario(cfg, trace=trace)]
            else:
                results = [run_scenario(cfg)]
        else:
            protocols = [p for p in args.protocols.split(",") if p]
            bad = set(protocols) - set(PROTOCOLS)
            if bad:
                raise ConfigError(f"unknown protocols {sorted(bad)}")
            results = sweep(cfg, args.times, args.seeds, protocols, workers=args.workers)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SweepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.partial:
            emit_report(exc.partial, args.out, figures=False)
            print(f"partial results ({len(exc.partial)} runs) written to {args.out}", file=sys.stderr)
        return 1

    paths = emit_report(results, args.out, figures=not args.no_figures)
    with open(os.path.join(args.out, "summary.txt")) as fh:
        sys.stdout.write(fh.read())
    print(f"# wrote {len(paths)} files to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands:

  roddsim bound aloha|csma   evaluate the analytic error lower bound over a
                             budget range, printed as CSV
  roddsim sim rodd           simulate the on-off broadcast scheme at one
                             frame length over seeded network trials
  roddsim sim aloha|csma     Monte Carlo the random-access protocols at one
                             symbol budget
  roddsim sweep CONFIG.json  run a full sweep config, write the result CSV

Ratio-valued options (--gamma, --delta, SNR grids) accept linear values or
a dB suffix, e.g. ``--gamma 60dB``.  Exit status is 0 on success, 2 for
argument errors, 1 for runtime failures (with a diagnostic on stderr).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import sys

from .baselines import (
    RaParams,
    aloha_error_lower_bound,
    csma_error_lower_bound,
    packet_bits,
)
from .geometry import NetworkParams, mean_neighbor_count
from .harness import (
    SweepConfig,
    emit_csv,
    load_config,
    parse_linear,
    run_sweep,
)


def _budget_range(text: str) -> list[int]:
    """Parse 'start:stop:step' (stop exclusive) or a single integer."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("budget range must be start:stop:step")
        start, stop, step = (int(p) for p in parts)
        if step <= 0 or stop <= start:
            raise argparse.ArgumentTypeError("empty budget range")
        return list(range(start, stop, step))
    return [int(text)]


def _add_network_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--intensity", type=float, default=0.004, help="nodes per m^2")
    p.add_argument("--side", type=float, default=500.0, help="square side, m")
    p.add_argument("--alpha", type=float, default=4.0, help="path-loss exponent")
    p.add_argument("--theta", type=float, default=1e-6, help="neighbor gain threshold")
    p.add_argument(
        "--gamma", type=parse_linear, default="60dB", help="nominal SNR (linear or dB)"
    )
    p.add_argument(
        "--nodes",
        type=int,
        default=1000,
        help="fixed node count per realization (0 for pure Poisson counts)",
    )


def _network(args) -> NetworkParams:
    return NetworkParams(
        intensity=args.intensity,
        side=args.side,
        alpha=args.alpha,
        theta=args.theta,
        gamma=args.gamma,
        fixed_count=args.nodes if args.nodes > 0 else None,
    )


def _ra_params(args, net: NetworkParams, budget: int) -> RaParams:
    c = mean_neighbor_count(net)
    p = args.tx_prob if args.tx_prob is not None else 1.0 / (c + 1.0)
    bits = (
        args.message_bits + args.id_bits
        if args.id_bits is not None
        else packet_bits(args.message_bits, c)
    )
    return RaParams(
        net=net,
        packet_bits=bits,
        sinr_threshold=args.delta,
        tx_prob=p,
        budget=budget,
    )


def _cmd_bound(args) -> int:
    net = _network(args)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(
        ["scheme", "alpha", "theta", "gamma", "delta", "tx_prob", "packet_bits", "budget", "bound"]
    )
    for budget in args.budgets:
        ra = _ra_params(args, net, budget)
        bound = (
            aloha_error_lower_bound(ra)
            if args.protocol == "aloha"
            else csma_error_lower_bound(ra)
        )
        writer.writerow(
            [
                args.protocol,
                f"{net.alpha:.10g}",
                f"{net.theta:.10g}",
                f"{net.gamma:.10g}",
                f"{ra.sinr_threshold:.10g}",
                f"{ra.tx_prob:.10g}",
                ra.packet_bits,
                budget,
                f"{bound:.10g}",
            ]
        )
    return 0


def _cmd_sim(args) -> int:
    net = _network(args)
    scheme = {"rodd": "rodd", "aloha": "aloha_mc", "csma": "csma_mc"}[args.protocol]
    cfg = SweepConfig(
        experiment=f"cli-sim-{args.protocol}",
        net=net,
        axis="frame_len",
        grid=(args.frame_len,),
        schemes=(scheme,),
        trials=args.trials,
        base_seed=args.seed,
        message_bits=args.message_bits,
        frame_len=args.frame_len,
        on_prob=args.on_prob,
        sinr_threshold=args.delta,
        tx_prob=args.tx_prob,
        id_bits=args.id_bits,
        boundary_margin=args.margin,
        mode=args.mode,
        receivers_per_trial=args.receivers,
    )
    rows = run_sweep(cfg, workers=args.workers)
    _write_rows(rows, args.out)
    return 0


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.mode is not None:
        overrides["mode"] = args.mode
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    rows = run_sweep(cfg, workers=args.workers)
    _write_rows(rows, args.out)
    return 0


def _write_rows(rows, out: str) -> None:
    if out == "-":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["scheme", "axis", "value", "miss_prob", "stderr", "trials", "wall_ms"])
        for r in sorted(rows, key=lambda row: (row.scheme, row.value)):
            writer.writerow(
                [
                    r.scheme,
                    r.axis,
                    f"{r.value:.10g}",
                    f"{r.miss_prob:.10g}",
                    f"{r.stderr:.10g}",
                    r.trials,
                    int(round(r.wall_ms)),
                ]
            )
    else:
        emit_csv(rows, out)
        print(f"wrote {len(rows)} rows to {out}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roddsim",
        description="On-off mutual broadcast simulator and random-access baselines",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_bound = sub.add_parser("bound", help="analytic error lower bounds")
    p_bound.add_argument("protocol", choices=["aloha", "csma"])
    _add_network_args(p_bound)
    p_bound.add_argument("--delta", type=parse_linear, default=3.5, help="SINR threshold")
    p_bound.add_argument("--message-bits", type=int, default=5)
    p_bound.add_argument("--id-bits", type=int, default=None, help="default ceil(log2 c)")
    p_bound.add_argument("--tx-prob", type=float, default=None, help="default 1/(c+1)")
    p_bound.add_argument(
        "--budgets",
        type=_budget_range,
        default="100:2101:100",
        help="symbol budgets, start:stop:step or a single value",
    )
    p_bound.set_defaults(func=_cmd_bound)

    p_sim = sub.add_parser("sim", help="Monte Carlo one scheme")
    p_sim.add_argument("protocol", choices=["rodd", "aloha", "csma"])
    _add_network_args(p_sim)
    p_sim.add_argument("--frame-len", type=int, default=280, help="frame length / symbol budget")
    p_sim.add_argument("--message-bits", type=int, default=5)
    p_sim.add_argument("--on-prob", type=float, default=None, help="default 1/(c+1)")
    p_sim.add_argument("--delta", type=parse_linear, default=0.5)
    p_sim.add_argument("--tx-prob", type=float, default=None)
    p_sim.add_argument("--id-bits", type=int, default=None)
    p_sim.add_argument("--trials", type=int, default=10)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--receivers", type=int, default=None, help="receivers decoded per trial")
    p_sim.add_argument("--margin", type=float, default=None, help="boundary margin, m")
    p_sim.add_argument("--mode", choices=["gaussian", "explicit"], default="gaussian")
    p_sim.add_argument("--workers", type=int, default=1)
    p_sim.add_argument("--out", default="-", help="output CSV path, '-' for stdout")
    p_sim.set_defaults(func=_cmd_sim)

    p_sweep = sub.add_parser("sweep", help="run a JSON sweep config")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--trials", type=int, default=None)
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--mode", choices=["gaussian", "explicit"], default=None)
    p_sweep.add_argument("--out", default="-", help="output CSV path, '-' for stdout")
    p_sweep.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface a diagnostic, nonzero exit
        print(f"roddsim: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

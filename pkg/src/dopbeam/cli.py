"""Command-line entry point for Monte Carlo experiments.

Subcommands: sweep-snr, sweep-users, trace-convergence, single-run.
Writes the results CSV to --out, a summary CSV next to it (_summary suffix)
and, for trace-convergence, one trace CSV per trial (_trace suffix).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .channel import ChannelParams
from .config import make_config
from .experiments import (ExperimentKind, ExperimentSpec, execute, summarize,
                          write_results_csv, write_summary_csv, write_trace_csv)

DESK_DEFAULTS = dict(nt=64, nr=16, users=4, ns=2, trials=20)
PAPER_DEFAULTS = dict(nt=256, nr=64, users=6, ns=4, trials=1000)


def _parse_floats(text: str) -> list:
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def _parse_ints(text: str) -> list:
    return [int(tok) for tok in text.split(",") if tok.strip() != ""]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--nt", type=int, default=None, help="BS antennas (perfect square)")
    parser.add_argument("--nr", type=int, default=None, help="MS antennas (perfect square)")
    parser.add_argument("--users", type=str, default=None,
                        help="user count; comma list for sweep-users")
    parser.add_argument("--ns", type=int, default=None, help="streams per user")
    parser.add_argument("--nrf-tx", type=int, default=None,
                        help="BS RF chains (default users*ns)")
    parser.add_argument("--nrf-rx", type=int, default=None,
                        help="MS RF chains (default ns)")
    parser.add_argument("--snr-db", type=str, default="10",
                        help="SNR in dB; comma list for sweep-snr")
    parser.add_argument("--trials", type=int, default=None, help="Monte Carlo trials")
    parser.add_argument("--seed", type=int, default=1, help="master seed")
    parser.add_argument("--arch", type=str, default="digital",
                        help="comma subset of digital,hybrid")
    parser.add_argument("--algos", type=str, default="dop",
                        help="comma subset of dop,bd,dpc")
    parser.add_argument("--clusters", type=int, default=5)
    parser.add_argument("--rays", type=int, default=10)
    parser.add_argument("--angle-spread-deg", type=float, default=10.0)
    parser.add_argument("--out", type=str, default="results.csv")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--paper-scale", action="store_true",
                        help="use the large published dimensions as defaults")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dopbeam",
                                     description="Multiuser beamforming Monte Carlo driver")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("sweep-snr", "sum rate versus SNR"),
                       ("sweep-users", "sum rate versus number of users"),
                       ("trace-convergence", "per-iteration rate traces"),
                       ("single-run", "one grid point")):
        _add_common(sub.add_parser(name, help=text))
    return parser


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    defaults = PAPER_DEFAULTS if args.paper_scale else DESK_DEFAULTS
    kind = ExperimentKind(args.command)
    users_list = _parse_ints(args.users) if args.users else [defaults["users"]]
    snr_list = _parse_floats(args.snr_db)
    nt = args.nt if args.nt is not None else defaults["nt"]
    nr = args.nr if args.nr is not None else defaults["nr"]
    ns = args.ns if args.ns is not None else defaults["ns"]
    trials = args.trials if args.trials is not None else defaults["trials"]
    if kind is ExperimentKind.TRACE_CONVERGENCE and args.trials is None:
        trials = 1
    base_users = users_list[0]
    config = make_config(snr_list[0], nt, nr, base_users, ns,
                         args.nrf_tx, args.nrf_rx)
    params = ChannelParams(n_clusters=args.clusters, n_rays=args.rays,
                           azimuth_spread_deg=args.angle_spread_deg,
                           elevation_spread_deg=args.angle_spread_deg)
    return ExperimentSpec(kind=kind, base_config=config, channel_params=params,
                          n_trials=trials, master_seed=args.seed,
                          snr_grid_db=tuple(snr_list), user_grid=tuple(users_list),
                          architectures=tuple(sorted(set(args.arch.split(",")))),
                          algorithms=tuple(sorted(set(args.algos.split(",")))),
                          output_path=args.out, workers=args.workers)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = spec_from_args(args)
        rows, traces = execute(spec)
        out = Path(spec.output_path)
        write_results_csv(rows, out)
        summary = summarize(rows)
        summary_path = out.with_name(out.stem + "_summary" + (out.suffix or ".csv"))
        write_summary_csv(summary, summary_path)
        written = [str(out), str(summary_path)]
        for trial, trace in traces:
            suffix = f"_trace{trial}" if len(traces) > 1 else "_trace"
            trace_path = out.with_name(out.stem + suffix + (out.suffix or ".csv"))
            write_trace_csv(trace, trace_path)
            written.append(str(trace_path))
        print(f"wrote {len(rows)} rows: " + ", ".join(written))
        for s in summary:
            mean = f"{s.mean:.3f}" if s.mean is not None else "n/a"
            print(f"  snr={s.snr_db:g}dB users={s.n_users} {s.architecture}/{s.algorithm}: "
                  f"mean={mean} bits/s/Hz over {s.n_feasible}/{s.n_rows} feasible")
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

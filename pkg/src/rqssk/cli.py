"""Command line entry point.

Every subcommand except ``campaign`` builds a one-job campaign from its
flags and runs it through the same code path, so its output file and
manifest look exactly like those of a campaign job.
"""

from __future__ import annotations

import argparse
import sys

from .analytic import Case, Method
from .campaign import FORMATS, QUANTITIES, parse_campaign, run_campaign, run_jobs
from .errors import ConfigurationError
from .montecarlo import Scheme
from .optimizer import LambdaMode


def _add_common(p, defaults):
    # no defaults on the campaign command so the file's values win
    d = (lambda v: v) if defaults else (lambda v: None)
    p.add_argument("--seed", type=int, default=d(0), help="master seed (64-bit)")
    p.add_argument("--out", default=d("results"), help="output directory")
    p.add_argument("--format", choices=FORMATS, default=d("csv"))
    p.add_argument("--workers", type=int, default=d(1), help="worker processes")


def _add_link(p):
    p.add_argument("--n-rx", type=int, default=4, help="receive antennas (power of two)")
    p.add_argument("--n-ris", type=int, default=64, help="RIS elements")
    p.add_argument("--snr-db", type=float, nargs="+", required=True, help="Es/N0 grid in dB")


def build_parser():
    parser = argparse.ArgumentParser(prog="rqssk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo BER curve")
    _add_link(p)
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default=Scheme.RQSSK.value)
    p.add_argument("--lambda-mode", choices=[m.value for m in LambdaMode], default=LambdaMode.EXACT.value)
    p.add_argument("--min-bit-errors", type=int, default=200)
    p.add_argument("--max-symbols", type=int, default=10_000_000)
    p.add_argument("--name", default="simulate")
    _add_common(p, True)

    p = sub.add_parser("analyze", help="analytical ABEP or PEP curve")
    _add_link(p)
    p.add_argument("--quantity", choices=QUANTITIES, default="abep_with_polarity")
    p.add_argument("--method", choices=[m.value for m in Method], default=Method.GIL_PELAEZ.value)
    p.add_argument("--name", default="analyze")
    _add_common(p, True)

    p = sub.add_parser("moments", help="sampling check of the per-element moments")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--cases", nargs="+", choices=[c.value for c in Case], default=[c.value for c in Case])
    p.add_argument("--name", default="moments")
    _add_common(p, True)

    p = sub.add_parser("lambda-hist", help="histogram of the optimal dual variable")
    p.add_argument("--n-rx", type=int, default=4)
    p.add_argument("--n-ris", type=int, default=256)
    p.add_argument("--realizations", type=int, default=10_000)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--name", default="lambda_hist")
    _add_common(p, True)

    p = sub.add_parser("campaign", help="run every job of a YAML campaign file")
    p.add_argument("config", help="campaign file")
    _add_common(p, False)
    return parser


def _job_from_args(args):
    job = {"name": args.name}
    if args.command == "simulate":
        job.update(type="simulate", scheme=args.scheme, n_rx=args.n_rx, n_ris=args.n_ris,
                   snr_db=args.snr_db, lambda_mode=args.lambda_mode,
                   min_bit_errors=args.min_bit_errors, max_symbols=args.max_symbols)
    elif args.command == "analyze":
        job.update(type="analyze", quantity=args.quantity, method=args.method, n_rx=args.n_rx,
                   n_ris=args.n_ris, snr_db=args.snr_db)
    elif args.command == "moments":
        job.update(type="moments", samples=args.samples, cases=args.cases)
    else:
        job.update(type="lambda_hist", n_rx=args.n_rx, n_ris=args.n_ris,
                   realizations=args.realizations, bins=args.bins)
    return job


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {"seed": args.seed, "output_dir": args.out, "format": args.format, "workers": args.workers}
    if args.command == "campaign":
        return run_campaign(args.config, overrides)
    try:
        campaign = parse_campaign({"jobs": [_job_from_args(args)]}, overrides)
    except ConfigurationError as exc:
        print(f"invalid arguments: {exc}", file=sys.stderr)
        return 2
    status = run_jobs(campaign)
    if status == 0:
        job = campaign.jobs[0]
        print(campaign.output_dir / f"{job.name}.{campaign.format}")
    return status


if __name__ == "__main__":
    sys.exit(main())

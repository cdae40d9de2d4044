"""Command-line interface: ``polarest <command> ...`` or ``python -m polarest``.

Exit codes: 0 success, 2 partial results (a row missed its error target),
1 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..channels import make_channel
from ..construction import ConstructionConfig, construct
from ..core import CodeSpec, SpecError, crc_by_name
from ..decoders.dscf import DEFAULT_ALPHA, DscfConfig, DscfConfigError
from ..estimators import StopRule, save_profile
from .experiment import (EXIT_CONFIG, EXIT_OK, ConfigError, DecoderConfig, ExperimentConfig,
                         export_bit_distribution, flip_profile, paired_comparison, paired_errors,
                         run_bler_sweep, run_estimator_comparison)

log = logging.getLogger("polarest")

METHOD_NAMES = {
    "sc-opt": "sc_opt",
    "scl-opt": "scl_opt",
    "bhatta": "bhattacharyya",
    "ga": "ga",
    "rm-polar": "rm_polar",
    "import": "sequence_import",
}


def _stop(args) -> StopRule:
    return StopRule(args.target_errors, args.max_samples)


def _add_stop(p):
    p.add_argument("--target-errors", type=int, default=100)
    p.add_argument("--max-samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--chunk-size", type=int, default=1000)
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: $POLAREST_WORKERS or 1)")


def _add_channel(p, multi: bool = True):
    p.add_argument("--channel", choices=("awgn", "bsc", "bec"), required=True)
    if multi:
        p.add_argument("--points", type=float, nargs="+", required=True,
                       help="Es/N0 in dB (awgn), crossover p (bsc) or erasure probability (bec)")
    else:
        p.add_argument("--design-point", type=float, required=True)


def _add_decoder(p, dscf: bool = True):
    p.add_argument("--decoder", choices=("sc", "scl", "dscf") if dscf else ("sc", "scl"), default="sc")
    p.add_argument("--list-size", type=int, default=1)
    p.add_argument("--crc-aided", action="store_true")
    if dscf:
        p.add_argument("--dscf-attempts", type=int, default=10)
        p.add_argument("--dscf-alpha", type=float, default=DEFAULT_ALPHA)
        p.add_argument("--dscf-gamma", type=float, default=None)
        p.add_argument("--dscf-profile", default=None, help="profile CSV for --dscf-gamma")


def _decoder(args) -> DecoderConfig:
    if getattr(args, "decoder", "sc") == "dscf":
        dscf = DscfConfig(args.dscf_attempts, args.dscf_alpha, gamma=args.dscf_gamma)
        return DecoderConfig("dscf", 1, False, dscf, args.dscf_gamma, args.dscf_profile)
    return DecoderConfig(args.decoder, args.list_size, args.crc_aided)


def _output(args, report) -> None:
    text = report.to_json() if args.format == "json" else report.to_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which here means "partial results"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="polarest", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build an information set and write a CodeSpec")
    p.add_argument("--method", choices=sorted(METHOD_NAMES), required=True)
    size = p.add_mutually_exclusive_group(required=True)
    size.add_argument("--n", type=int, help="log2 of the block length")
    size.add_argument("--N", dest="block_length", type=int, help="block length")
    p.add_argument("--k", type=int, required=True, help="payload bits (CRC excluded)")
    p.add_argument("--crc", default="none", choices=("none", "crc16", "crc24"))
    _add_channel(p, multi=False)
    p.add_argument("--list-size", type=int, default=1)
    p.add_argument("--source", default=None, help="sequence or info-set file for --method import ('5g' for the shipped sequence)")
    _add_stop(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("simulate", help="Monte-Carlo BLER sweep")
    p.add_argument("--spec", nargs="+", required=True)
    _add_channel(p)
    _add_decoder(p)
    _add_stop(p)
    p.add_argument("--paired", action="store_true", help="share channel samples across specs")
    p.add_argument("--payload", choices=("auto", "zero", "random"), default="auto")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None)

    p = sub.add_parser("estimate", help="estimator against Monte Carlo on shared samples")
    p.add_argument("--spec", nargs="+", required=True)
    _add_channel(p)
    _add_decoder(p, dscf=False)
    _add_stop(p)
    p.add_argument("--mode", choices=("practical", "genie"), default="practical")
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--grid", type=int, nargs="*", default=[])
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--profile-dir", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None)

    p = sub.add_parser("flip-profile", help="SC profile and MDSCF candidate sets")
    p.add_argument("--spec", required=True)
    _add_channel(p, multi=False)
    p.add_argument("--gammas", type=float, nargs="+", required=True)
    _add_stop(p)
    p.add_argument("--profile-out", required=True)
    p.add_argument("--out", default=None, help="candidate sets as JSON (stdout if omitted)")

    p = sub.add_parser("compare", help="paired-seed BLER comparison of two specs")
    p.add_argument("--spec", nargs=2, required=True)
    _add_channel(p, multi=False)
    _add_decoder(p)
    _add_stop(p)
    p.add_argument("--out", default=None)

    p = sub.add_parser("export-bitmap", help="information-bit matrices and set differences")
    p.add_argument("--spec", nargs="+", required=True)
    p.add_argument("--rows", "-d", dest="d", type=int, required=True)
    p.add_argument("--cols", "-b", dest="b", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    return ap


def cmd_construct(args) -> int:
    N = args.block_length if args.block_length is not None else 1 << args.n
    crc = crc_by_name(args.crc)
    cfg = ConstructionConfig(
        N=N, K=args.k, channel=make_channel(args.channel, args.design_point),
        method=METHOD_NAMES[args.method], crc=crc, list_size=args.list_size,
        stop=_stop(args), seed=args.seed, chunk_size=args.chunk_size, workers=args.workers,
    )
    spec = construct(cfg, args.source)
    spec.save(args.out)
    log.info("wrote %s with info set of size %d", args.out, spec.K_total)
    return EXIT_OK


def _experiment(args, **kw) -> ExperimentConfig:
    return ExperimentConfig(
        specs=args.spec, channel=args.channel, points=args.points, seed=args.seed,
        decoder=_decoder(args), stop=_stop(args), workers=args.workers,
        chunk_size=args.chunk_size, **kw)


def cmd_simulate(args) -> int:
    report = run_bler_sweep(_experiment(args, paired=args.paired, payload=args.payload))
    _output(args, report)
    return report.exit_code


def cmd_estimate(args) -> int:
    report = run_estimator_comparison(_experiment(
        args, mode=args.mode, runs=args.runs, grid=args.grid, exhaustive=args.exhaustive,
        profile_dir=args.profile_dir))
    _output(args, report)
    return report.exit_code


def cmd_flip_profile(args) -> int:
    spec = CodeSpec.load(args.spec)
    ch = make_channel(args.channel, args.design_point)
    res, sets = flip_profile(spec, ch, args.gammas, _stop(args), args.seed,
                             chunk_size=args.chunk_size, workers=args.workers)
    save_profile(res.profile, args.profile_out)
    doc = {"spec": args.spec, "K_total": spec.K_total, "samples": res.n, "errors": res.errors,
           "candidates": [{"gamma": g, "size": len(s), "indices": s} for g, s in sets.items()]}
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if res.converged else 2


def cmd_compare(args) -> int:
    specs = [CodeSpec.load(s) for s in args.spec]
    ch = make_channel(args.channel, args.design_point)
    dec = _decoder(args)
    flags = paired_errors(specs, ch, [dec, dec], _stop(args), args.seed,
                          chunk_size=args.chunk_size, workers=args.workers)
    cmp = paired_comparison(flags[0], flags[1])
    doc = {"a": args.spec[0], "b": args.spec[1], "decoder": dec.to_dict(),
           "channel": args.channel, "design_point": args.design_point, **cmp.to_dict()}
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    done = args.target_errors is None or min(cmp.errors_a, cmp.errors_b) >= args.target_errors
    return EXIT_OK if done else 2


def cmd_export_bitmap(args) -> int:
    res = export_bit_distribution(args.spec, args.d, args.b, args.out_dir)
    for d in res["differences"]:
        print(f"{d['a']} vs {d['b']}: {d['count_only_a']} only in {d['a']}, "
              f"{d['count_only_b']} only in {d['b']}")
    return EXIT_OK


COMMANDS = {
    "construct": cmd_construct,
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "flip-profile": cmd_flip_profile,
    "compare": cmd_compare,
    "export-bitmap": cmd_export_bitmap,
}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, SpecError, DscfConfigError, ValueError, OSError) as exc:
        print(f"polarest: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

    sbprecode run --config sim.cfg --out bler.csv --workers 4
    sbprecode sbs --config sim.cfg --out sbs.csv
    sbprecode tpmi --config sim.cfg --realizations 5
    sbprecode export-codebook --n-tx 4 --codebook "proposed(3,3,3)" --out cb.txt

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""
import argparse
import json
import logging
import sys

from .codebook import format_codebook, parse_codebook_spec
from .config import SimConfig, apply_pairs, load_config, parse_pairs
from .exceptions import ConfigError, SbPrecodeError
from .harness import emit_csv, format_csv, gain_db, run_sweep, sbs_study, tpmi_report
from .precoding import Mode

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

log = logging.getLogger("sbprecode")


def _build_config(args):
    cfg = load_config(args.config) if args.config else SimConfig()
    overrides = {}
    for item in args.set or ():
        overrides.update(parse_pairs(item))
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    return apply_pairs(cfg, overrides) if overrides else cfg


def _write(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _emit(result, out):
    if out in (None, "-"):
        sys.stdout.write(format_csv(result))
        return
    emit_csv(result, out)
    with open(out + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(result.metadata, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _report_gains(cfg, result):
    base = next((s.name for s in cfg.schemes if s.mode is Mode.WB), None)
    if base is None:
        return
    for name in result.series:
        if name == base:
            continue
        g = gain_db(result, name, base)
        shown = "n/a (no BLER=0.1 crossing)" if g is None else f"{g:+.2f} dB"
        log.info("gain of %s over %s at BLER 0.1: %s", name, base, shown)


def cmd_run(args):
    cfg = _build_config(args)
    result = run_sweep(cfg, workers=args.workers)
    _emit(result, args.out)
    _report_gains(cfg, result)


def cmd_sbs(args):
    cfg = _build_config(args)
    sbs_list = tuple(int(x) for x in args.sbs.split(",")) if args.sbs else None
    result = sbs_study(cfg, sbs_list, workers=args.workers)
    _emit(result, args.out)
    for name, m in result.metadata["mean_metric"].items():
        log.info("mean per-RB metric %s: %.6f", name, m)


def cmd_tpmi(args):
    cfg = _build_config(args)
    _write(tpmi_report(cfg, args.realizations), args.out)


def cmd_export_codebook(args):
    try:
        cb = parse_codebook_spec(args.codebook, args.n_tx)
    except SbPrecodeError as exc:
        raise ConfigError("--codebook", str(exc)) from None
    _write(format_codebook(cb), args.out)


def build_parser():
    p = argparse.ArgumentParser(prog="sbprecode", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def sim_args(sp):
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--seed", type=int, help="override the configured seed")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")

    sp = sub.add_parser("run", help="BLER sweep over SNR for the configured schemes")
    sim_args(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sbs", help="sub-band size study for the SB schemes")
    sim_args(sp)
    sp.add_argument("--sbs", help="comma-separated sub-band sizes in RBs (default: sbs.list)")
    sp.set_defaults(func=cmd_sbs)

    sp = sub.add_parser("tpmi", help="TPMI signalling report")
    sim_args(sp)
    sp.add_argument("--realizations", type=int, default=10)
    sp.set_defaults(func=cmd_tpmi)

    sp = sub.add_parser("export-codebook", help="write one codebook in text form")
    sp.add_argument("--n-tx", type=int, required=True, choices=(2, 4, 8))
    sp.add_argument("--codebook", default="legacy", help="legacy, type1(n1,n2) or proposed(M,...)")
    sp.add_argument("--out", help="output path (default: stdout)")
    sp.set_defaults(func=cmd_export_codebook)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose or args.command in ("run", "sbs") else logging.WARNING,
        format="%(message)s",
        stream=sys.stderr,
    )
    if getattr(args, "workers", 1) < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Subcommands: ``sim`` (post-FEC BER sweep), ``gmi`` (achievable-rate sweep),
``complexity`` (operation-count report), ``codebook`` (codebook dump).
Exit codes: 0 success, 1 configuration error, 2 demapper inapplicable to
the format, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import sys

from . import harness
from .beq import FormatParseError
from .demap import NonlinearFormatError
from .harness import ConfigError, SimConfig

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INAPPLICABLE = 2
EXIT_IO = 3


def _parse_snr(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--snr wants START:STOP:STEP, got {text!r}")
    try:
        return float(parts[0]), float(parts[1]), float(parts[2])
    except ValueError:
        raise ConfigError(f"--snr wants numeric START:STOP:STEP, got {text!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sp8d")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_demapper=True):
        p.add_argument("--format", required=True, help="shipped format name or .fmt path")
        if with_demapper:
            p.add_argument("--demapper", required=True, choices=["1d", "mlm", "ms", "posd"])
            p.add_argument("--p", type=int, default=None, help="LRP count for posd")
        p.add_argument("--seed", type=int, default=1)
        p.add_argument("--out", required=True)

    sim = sub.add_parser("sim", help="post-FEC BER sweep")
    add_common(sim)
    sim.add_argument("--snr", required=True, help="grid START:STOP:STEP in dB")
    sim.add_argument("--ldpc", default="builtin:n=1800,rate=0.8333,seed=1")
    sim.add_argument("--target-errors", type=int, default=100)
    sim.add_argument("--max-frames", type=int, default=10_000)
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--json", action="store_true")

    gmi = sub.add_parser("gmi", help="GMI sweep (no FEC)")
    add_common(gmi)
    gmi.add_argument("--snr", required=True, help="grid START:STOP:STEP in dB")
    gmi.add_argument("--frames", type=int, default=100_000)
    gmi.add_argument("--workers", type=int, default=1)
    gmi.add_argument("--json", action="store_true")

    comp = sub.add_parser("complexity", help="operation-count report")
    comp.add_argument("--formats", default="all", help="'all' or comma-separated names")
    comp.add_argument("--demappers", default="all", help="'all' or comma-separated ids")
    comp.add_argument("--frames", type=int, default=10_000)
    comp.add_argument("--seed", type=int, default=1)
    comp.add_argument("--out", required=True)

    book = sub.add_parser("codebook", help="dump a format codebook as CSV")
    book.add_argument("--format", required=True)
    book.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG

    try:
        if args.command == "sim":
            start, stop, step = _parse_snr(args.snr)
            cfg = SimConfig(
                format=args.format, demapper=args.demapper, p=args.p,
                snr_start=start, snr_stop=stop, snr_step=step,
                target_errors=args.target_errors, max_frames=args.max_frames,
                ldpc=args.ldpc, seed=args.seed, workers=args.workers,
            )
            rows = harness.run_ber_sweep(cfg)
            harness.emit_results(rows, args.out, "json" if args.json else "csv")
        elif args.command == "gmi":
            start, stop, step = _parse_snr(args.snr)
            cfg = SimConfig(
                format=args.format, demapper=args.demapper, p=args.p,
                snr_start=start, snr_stop=stop, snr_step=step,
                frames=args.frames, seed=args.seed, workers=args.workers,
            )
            rows = harness.run_gmi_sweep(cfg)
            harness.emit_results(rows, args.out, "json" if args.json else "csv")
        elif args.command == "complexity":
            from .beq import shipped_format_names
            formats = list(shipped_format_names()) if args.formats == "all" \
                else args.formats.split(",")
            demappers = ["1d", "mlm", "ms", "posd"] if args.demappers == "all" \
                else args.demappers.split(",")
            rows = harness.run_complexity_report(formats, demappers,
                                                 frames=args.frames, seed=args.seed)
            harness.emit_complexity(rows, args.out)
        else:  # codebook
            harness.dump_codebook(args.format, args.out)
    except NonlinearFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INAPPLICABLE
    except (ConfigError, FormatParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command line interface.

    stbcid generate  --scheme al --snr 10 --seed 7 --out rec/x
    stbcid classify  rec/x.json
    stbcid ccf       --scheme al --profile flat --out ccf.csv
    stbcid mc        --config exp.json --snr -10:10:2 --trials 200 --out fig6.csv
    stbcid flops     --ns 2000

Exit status is 0 on success, 2 for configuration errors and 3 for I/O or
file-format errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from pathlib import Path

from ..cyclostat import compute_delay_sets, cycle_frequencies, estimate_grid, estimate_null_sigma
from ..detector import DetectorConfig, classify, flop_count
from ..exceptions import ConfigurationError, FormatError
from .config import ExperimentConfig, load_config, parse_range
from .experiment import format_csv, run_experiment, simulate_rx
from .recording import read_recording, write_recording

log = logging.getLogger("stbcid")

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3
PROFILES = ("flat", "exp", "peda", "veha")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return v


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="JSON experiment configuration")
    p.add_argument("--seed", type=_u64, metavar="U64", help="master seed")
    p.add_argument("--out", metavar="PATH", help="output path (default: stdout where applicable)")
    p.add_argument("--scheme", type=str.lower, choices=("sm", "al"))
    p.add_argument("--snr", metavar="a:b:step", help="SNR grid in dB")
    p.add_argument("--profile", type=str.lower, choices=PROFILES)
    p.add_argument("--pf", metavar="FLOAT", help="false-alarm target(s), e.g. 0.01 or 0.01,0.1")
    p.add_argument("--nrx", type=int, metavar="N", help="receive antennas")
    p.add_argument("--ns", type=int, metavar="N", help="OFDM symbols per observation")
    p.add_argument("--phase-noise", type=float, metavar="FLOAT", help="phase-noise rate beta*T")
    p.add_argument("--freq-offset", type=float, metavar="FLOAT", help="normalized frequency offset f_o*T")
    p.add_argument("--timing-offset", type=float, metavar="FLOAT", help="fractional timing offset epsilon")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stbcid", description="Blind SM-OFDM / AL-OFDM identification")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="synthesize a received recording")
    _add_common(g)

    c = sub.add_parser("classify", help="identify the code of recordings")
    c.add_argument("recordings", nargs="+", metavar="RECORDING")
    _add_common(c)
    c.add_argument("--calibration", choices=("plugin", "finite"), default="plugin")

    f = sub.add_parser("ccf", help="CCF grid as CSV")
    f.add_argument("recording", nargs="?", help="recording to analyse (default: synthesize one)")
    _add_common(f)
    f.add_argument("--delays", metavar="a:b:step", help="delay grid (default -2(N+nu)..2(N+nu))")
    f.add_argument("--cf", default="0,1,-1", metavar="L,..", help="cycle-frequency lattice indices")

    m = sub.add_parser("mc", help="Monte Carlo experiment grid to CSV")
    _add_common(m)
    m.add_argument("--trials", type=int, metavar="N")
    m.add_argument("--workers", type=int, metavar="N")
    m.add_argument("--no-timing", action="store_true", help="leave the seconds column empty")

    fl = sub.add_parser("flops", help="detector complexity report")
    _add_common(fl)
    fl.add_argument("--time", action="store_true", help="also time one default trial")
    return parser


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    over = {
        "scheme": args.scheme,
        "profile": args.profile,
        "n_rx": args.nrx,
        "n_symbols": args.ns,
        "master_seed": args.seed,
        "phase_noise_rate": args.phase_noise,
        "freq_offset": args.freq_offset,
        "timing_offset": args.timing_offset,
        "output": args.out,
        "n_trials": getattr(args, "trials", None),
        "workers": getattr(args, "workers", None),
    }
    if args.snr is not None:
        over["snr_grid"] = parse_range(args.snr)
    if args.pf is not None:
        over["p_false_alarm"] = parse_range(args.pf)
    if getattr(args, "no_timing", False):
        over["timing"] = False
    return cfg.with_overrides(**over)


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_generate(args) -> int:
    cfg = _config(args)
    if not args.out:
        raise ConfigurationError("generate needs --out BASE")
    if not cfg.snr_grid:
        raise ConfigurationError("generate needs one SNR value")
    rx = simulate_rx(cfg, cfg.snr_grid[0], cfg.master_seed)
    side = write_recording(rx, cfg.params, args.out, scheme=cfg.scheme, seed=cfg.master_seed,
                           n_symbols=cfg.n_symbols)
    print(side)
    return EXIT_OK


def _cmd_classify(args) -> int:
    cfg = _config(args)
    lines = []
    for path in args.recordings:
        streams, params, meta = read_recording(path)
        det = DetectorConfig(p_false_alarm=cfg.p_false_alarm[0], kappa=cfg.kappa, calibration=args.calibration)
        d = classify(streams, params, det)
        lines.append(json.dumps({"recording": str(path), **d.as_dict()}))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _cmd_ccf(args) -> int:
    cfg = _config(args)
    if args.recording:
        streams, params, _ = read_recording(args.recording)
    else:
        if not cfg.snr_grid:
            raise ConfigurationError("ccf needs one SNR value")
        params = cfg.params
        streams = simulate_rx(cfg, cfg.snr_grid[0], cfg.master_seed)
    span = 2 * params.symbol_length
    delays = [int(t) for t in parse_range(args.delays)] if args.delays else range(-span, span + 1)
    indices = [int(v) for v in parse_range(args.cf)]
    cfs = cycle_frequencies(params, indices)
    grid = estimate_grid(streams[0], streams[1], cfs, delays)
    sigma = estimate_null_sigma(estimate_grid(streams[0], streams[1], cfs, compute_delay_sets(params).noise_delays))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("cf_index", "alpha", "tau", "real", "imag", "magnitude", "sigma_hat"))
    for i, l in enumerate(indices):
        for k, tau in enumerate(grid.delays):
            v = grid.values[i, k]
            w.writerow((l, repr(float(cfs[i])), int(tau), repr(float(v.real)), repr(float(v.imag)),
                        repr(float(abs(v))), repr(float(sigma))))
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _cmd_mc(args) -> int:
    cfg = _config(args)
    records = run_experiment(cfg)
    text = format_csv(records, timing=cfg.timing)
    _emit(text, cfg.output)
    return EXIT_OK


def _cmd_flops(args) -> int:
    cfg = _config(args)
    p = cfg.params
    report = {"n_symbols": cfg.n_symbols, "n_subcarriers": p.n_subcarriers, "nu": p.nu,
              "flops": flop_count(cfg.n_symbols, p.n_subcarriers, p.nu)}
    if args.time:
        t0 = time.perf_counter()
        classify(simulate_rx(cfg, cfg.snr_grid[0] if cfg.snr_grid else 10.0, cfg.master_seed), p)
        report["seconds_per_trial"] = round(time.perf_counter() - t0, 4)
    _emit(json.dumps(report) + "\n", args.out)
    return EXIT_OK


_COMMANDS = {"generate": _cmd_generate, "classify": _cmd_classify, "ccf": _cmd_ccf,
             "mc": _cmd_mc, "flops": _cmd_flops}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except FormatError as exc:
        print(f"stbcid: format error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"stbcid: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigurationError, ValueError) as exc:
        print(f"stbcid: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

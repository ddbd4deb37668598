"""Command-line front end.

Every subcommand writes CSV preceded by ``#`` comment lines that record the tool
version, the full argument vector and the seed, so a file can be regenerated from its
own header.  Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import re
import shlex
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channel import ChannelParams, psnr_to_sigma2
from .density_evolution import PRESETS, DeParams, find_threshold, find_threshold_auto
from .ldpc import CodeSpec, read_alist, sample_regular_code, write_alist
from .modulation import make_constellation, received_constellation
from .pipeline import SimConfig, estimate_fer, sample_interleaver
from .sir import sweep

log = logging.getLogger("cafbicm")

_ANGLE = re.compile(r"^\s*([+-]?)\s*(\d*\.?\d*)?\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$", re.IGNORECASE)


def parse_angle(text: str) -> float:
    """Parse radians given as a float or a multiple of pi such as ``pi/4``, ``3pi/8`` or ``-2*pi``."""
    m = _ANGLE.match(text)
    if m:
        sign, coef, denom = m.groups()
        value = (float(coef) if coef else 1.0) * math.pi / (float(denom) if denom else 1.0)
        return -value if sign == "-" else value
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse angle {text!r}") from None


def parse_grid(text: str, angle: bool = False) -> list[float]:
    """``lo:hi:step`` inclusive of ``hi`` (up to rounding), or a comma-separated list."""
    conv = parse_angle if angle else float
    if ":" not in text:
        return [conv(t) for t in text.split(",") if t.strip()]
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid must be lo:hi:step, got {text!r}")
    lo, hi, step = (conv(p) for p in parts)
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"invalid grid {text!r}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + i * step for i in range(count)]


def _csv_text(header_lines: list[str], columns: list[str], rows) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _header(args, argv: list[str]) -> list[str]:
    lines = [f"cafbicm {__version__}", "argv: cafbicm " + shlex.join(argv)]
    for key, value in sorted(vars(args).items()):
        if key in ("func", "verbose"):
            continue
        lines.append(f"{key}={value}")
    return lines


def _resolve_seed(args, argv: list[str]) -> list[str]:
    """Fill in a concrete seed and make sure the recorded argv carries it."""
    if getattr(args, "seed", "absent") is None:
        args.seed = int(np.random.SeedSequence().entropy % (2**63))
    if hasattr(args, "seed") and "--seed" not in argv:
        argv = argv + ["--seed", str(args.seed)]
    return argv


# -- subcommands ------------------------------------------------------------------------------


def cmd_constellation(args):
    c = make_constellation(args.modulation, args.labeling)
    rc = received_constellation(c, args.theta)
    return ["z_label", "re", "im", "multiplicity"], rc.table()


def cmd_sir(args):
    c = make_constellation(args.modulation, args.labeling)
    if args.sweep == "theta":
        thetas, psnrs = parse_grid(args.grid, angle=True), [args.psnr]
    elif args.sweep == "psnr":
        thetas, psnrs = [args.theta], parse_grid(args.grid)
    else:
        thetas, psnrs = [args.theta], [args.psnr]
    points = sweep(args.scheme, c, thetas, psnrs, method=args.backend, samples=args.samples, seed=args.seed,
                   workers=args.workers)
    rows = [(pt.scheme, args.modulation, pt.theta, pt.psnr_db, pt.estimate.value, pt.estimate.stderr)
            for pt in points]
    return ["scheme", "modulation", "theta", "psnr_db", "sir_bits", "stderr"], rows


def _de_params(args) -> DeParams:
    preset = PRESETS[args.preset]
    c = make_constellation(args.modulation, args.labeling)
    ch = ChannelParams(c, psnr_to_sigma2(0.0, c), args.theta, args.scheme)
    return DeParams(args.dv, args.dc, ch, args.population or preset["population"],
                    args.iters or preset["iters"], args.eps)


def cmd_de(args):
    params = _de_params(args)
    seeds = [args.seed + i for i in range(args.repeats)]
    rows = []
    for seed in seeds:
        if args.psnr_lo is None or args.psnr_hi is None:
            res = find_threshold_auto(params, args.resolution, rng=seed)
        else:
            res = find_threshold(params, args.psnr_lo, args.psnr_hi, args.resolution, rng=seed)
        rows.append((args.dv, args.dc, params.rate, args.scheme, args.theta, res.threshold_psnr_db,
                     res.bracket_lo, res.bracket_hi, seed))
    cols = ["dv", "dc", "rate", "scheme", "theta", "threshold_psnr_db", "bracket_lo", "bracket_hi", "seed"]
    return cols, rows


def cmd_simulate(args):
    psnrs = parse_grid(args.psnr)
    rows = []
    fixed = args.fixed_code or args.alist is not None
    for psnr in psnrs:
        cfg = SimConfig(args.dv, args.dc, args.nbits, args.modulation, psnr, args.theta, args.labeling,
                        args.max_iters, fixed)
        if args.alist is not None:
            est = _simulate_with_alist(cfg, args)
        else:
            est = estimate_fer(cfg, args.trials, seed=args.seed, workers=args.workers)
        rows.append((psnr, est.trials, est.frame_errors, est.fer, est.ber, est.stderr))
    return ["psnr_db", "trials", "frame_errors", "fer", "ber", "stderr"], rows


def _simulate_with_alist(cfg: SimConfig, args):
    from .ldpc import BPDecoder
    from .pipeline import FerEstimate, run_caf_trial

    h = read_alist(args.alist)
    root = np.random.SeedSequence(args.seed)
    code_seq, trial_seq = root.spawn(2)
    pi = sample_interleaver(h.n, np.random.default_rng(code_seq))
    p = cfg.channel()
    dec = BPDecoder(h)
    results = [run_caf_trial(h, pi, p, np.random.default_rng(ss), cfg.max_iters, decoder=dec)
               for ss in trial_seq.spawn(args.trials)]
    return FerEstimate(cfg.psnr_db, args.trials, sum(r.frame_error for r in results),
                       sum(r.bit_errors for r in results), h.n)


def cmd_code(args):
    spec = CodeSpec(args.dv, args.dc, args.nbits)
    h = sample_regular_code(spec, np.random.default_rng(args.seed))
    return h


def cmd_figure(args):
    from .figures import reproduce_figure

    return reproduce_figure(args.name, args.preset, seed=args.seed, workers=args.workers)


# -- parser -----------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cafbicm", description="LDPC-BICM compute-and-forward analysis toolkit")
    p.add_argument("--version", action="version", version=f"cafbicm {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True, out=True):
        sp.add_argument("--modulation", choices=["bpsk", "qpsk", "8psk"], default="qpsk")
        sp.add_argument("--labeling", default="gray",
                        help="gray, natural, or comma-separated labels in angular order")
        sp.add_argument("--theta", type=parse_angle, default=0.0, help="phase difference, e.g. 0.785 or pi/4")
        if seed:
            sp.add_argument("--seed", type=int, default=None)
        if out:
            sp.add_argument("-o", "--output", type=Path, default=None)

    sp = sub.add_parser("constellation", help="received constellation at the relay")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_constellation)

    sp = sub.add_parser("sir", help="symmetric information rates")
    common(sp)
    sp.add_argument("--scheme", choices=["caf", "sd", "single"], required=True)
    sp.add_argument("--psnr", type=float, default=None)
    sp.add_argument("--samples", type=int, default=10**6)
    sp.add_argument("--backend", choices=["mc", "quad"], default="mc")
    sp.add_argument("--sweep", choices=["theta", "psnr"], default=None)
    sp.add_argument("--grid", default=None, help="lo:hi:step (angles may use pi)")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_sir)

    sp = sub.add_parser("de", help="BP threshold by population-dynamics density evolution")
    common(sp)
    sp.add_argument("--dv", type=int, required=True)
    sp.add_argument("--dc", type=int, required=True)
    sp.add_argument("--scheme", choices=["single", "caf"], default="caf")
    sp.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    sp.add_argument("--population", type=int, default=None)
    sp.add_argument("--iters", type=int, default=None)
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--psnr-lo", type=float, default=None)
    sp.add_argument("--psnr-hi", type=float, default=None)
    sp.add_argument("--resolution", type=float, default=0.02)
    sp.add_argument("--repeats", type=int, default=1, help="independent seeds (seed, seed+1, ...)")
    sp.set_defaults(func=cmd_de)

    sp = sub.add_parser("simulate", help="Monte Carlo FER of the XOR codeword at the relay")
    common(sp)
    sp.set_defaults(theta=math.pi / 4)
    sp.add_argument("--dv", type=int, required=True)
    sp.add_argument("--dc", type=int, required=True)
    sp.add_argument("--nbits", type=int, required=True)
    sp.add_argument("--psnr", required=True, help="value, comma list, or lo:hi:step")
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--max-iters", type=int, default=200)
    sp.add_argument("--fixed-code", action="store_true")
    sp.add_argument("--alist", type=Path, default=None, help="use this parity-check matrix (implies fixed code)")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("code", help="sample a regular LDPC code and write it as alist")
    sp.add_argument("--dv", type=int, required=True)
    sp.add_argument("--dc", type=int, required=True)
    sp.add_argument("--nbits", type=int, required=True)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("-o", "--output", type=Path, default=None)
    sp.set_defaults(func=cmd_code)

    sp = sub.add_parser("figure", help="regenerate the data behind a figure (one CSV per curve)")
    sp.add_argument("name", choices=["fig3", "fig4", "fig5", "fig6", "fig7"])
    sp.add_argument("--preset", choices=["desk", "full"], default="desk")
    sp.add_argument("--outdir", type=Path, default=Path("."))
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_figure)
    return p


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)  # usage errors exit with status 2
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    if args.command == "sir" and args.sweep is not None and args.grid is None:
        parser.error("--sweep requires --grid")
    if args.command == "sir" and args.sweep != "psnr" and args.psnr is None:
        parser.error("sir: --psnr is required unless --sweep psnr")
    argv = _resolve_seed(args, argv)
    try:
        result = args.func(args)
    except Exception as exc:  # reported, not raised: the CLI contract is an exit status
        log.debug("failure", exc_info=True)
        print(f"cafbicm {args.command}: error: {exc}", file=sys.stderr)
        return 1

    header = _header(args, argv)
    if args.command == "code":
        text = io.StringIO()
        write_alist(result, text)
        _emit(text.getvalue(), args.output)
        return 0
    if args.command == "figure":
        args.outdir.mkdir(parents=True, exist_ok=True)
        for name, (cols, rows) in result.items():
            (args.outdir / f"{args.name}_{name}.csv").write_text(_csv_text(header + [f"curve={name}"], cols, rows))
        return 0
    cols, rows = result
    _emit(_csv_text(header, cols, rows), args.output)
    return 0


def _emit(text: str, path: Path | None):
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Command-line front end: ``mazer sweep``, ``mazer compare`` and ``mazer peaks``."""
from __future__ import annotations

import argparse
import math
import re
import sys

from .core import MazerParams
from .errors import MazerError
from .mesa import emission_arrays
from .regimes import locate_maxima, peak_report
from .sweep import ENGINES, FAILURE_FRACTION, PRESETS, SweepSpec, compare, preset, run_sweep

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3

_PI_RE = re.compile(r"^\s*([+-]?)((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*\*?\s*pi\s*$")


def number(text: str) -> float:
    """Parse a float, allowing a ``pi`` suffix: ``pi``, ``10pi``, ``-0.5*pi``."""
    m = _PI_RE.match(text)
    if m:
        sign = -1.0 if m.group(1) == "-" else 1.0
        return sign * float(m.group(2) or 1.0) * math.pi
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def number_list(text: str):
    return [number(t) for t in text.split(",")]


def _add_params(p: argparse.ArgumentParser):
    p.add_argument("--n", type=int, help="photon number")
    p.add_argument("--k-over-kappa", type=number, dest="k_over_kappa")
    p.add_argument("--delta-over-g", type=number, dest="delta_over_g")
    p.add_argument("--kappa-l", type=number, dest="kappa_L")


def _add_sweep(p: argparse.ArgumentParser):
    _add_params(p)
    p.add_argument("--axis", help="swept parameter, or two comma-separated for a 2D grid "
                                  "(k_over_kappa, delta_over_g, kappa_L)")
    p.add_argument("--min", type=number_list, dest="vmin")
    p.add_argument("--max", type=number_list, dest="vmax")
    p.add_argument("--steps", type=lambda s: [int(t) for t in s.split(",")])
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--profile", default=None,
                   help="mesa, sech2, sine2 or file:<path> (oracle engine only)")
    p.add_argument("--slices", type=int)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for per-point engines")
    p.add_argument("--out", default="-", help="output path, '-' for stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mazer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="evaluate one engine on a parameter grid, CSV output")
    _add_sweep(sw)
    sw.add_argument("--engine", choices=ENGINES)

    cmp_ = sub.add_parser("compare", help="deviations between engines on one grid")
    _add_sweep(cmp_)
    cmp_.add_argument("--engine", choices=ENGINES, action="append", dest="engines",
                      help="repeat for each engine; deviations are against the first")

    pk = sub.add_parser("peaks", help="predicted vs located cold-regime resonances")
    _add_params(pk)
    pk.add_argument("--m-max", type=int, default=5)
    pk.add_argument("--out", default="-")
    return parser


def spec_from_args(args) -> SweepSpec:
    spec = preset(args.preset) if args.preset else None
    if args.axis:
        axes = tuple(a.strip() for a in args.axis.split(","))
        if args.vmin is None or args.vmax is None or args.steps is None:
            raise ValueError("--axis needs --min, --max and --steps")
        if not len(axes) == len(args.vmin) == len(args.vmax) == len(args.steps):
            raise ValueError("--min/--max/--steps need one value per axis")
        ranges = tuple(zip(args.vmin, args.vmax, args.steps))
        if spec is None:
            spec = SweepSpec(axes=axes, ranges=ranges)
        else:
            spec.axes, spec.ranges = axes, ranges
    elif spec is None:
        raise ValueError("give --preset or --axis")
    elif args.vmin or args.vmax or args.steps:
        ranges = []
        for i, (lo, hi, steps) in enumerate(spec.ranges):
            lo = args.vmin[i] if args.vmin and i < len(args.vmin) else lo
            hi = args.vmax[i] if args.vmax and i < len(args.vmax) else hi
            steps = args.steps[i] if args.steps and i < len(args.steps) else steps
            ranges.append((lo, hi, steps))
        spec.ranges = tuple(ranges)
    spec.fixed.setdefault("n", 0)
    for name in ("n", "k_over_kappa", "delta_over_g", "kappa_L"):
        value = getattr(args, name)
        if value is None:
            continue
        spec.fixed[name] = value
        for curve in spec.curves:
            curve.pop(name, None)
        if name == "kappa_L":
            spec.peak_m = None
    spec.curves = [c for i, c in enumerate(spec.curves) if c not in spec.curves[:i]] or [{}]
    if args.profile:
        spec.profile = args.profile
    if args.slices is not None:
        spec.slices = args.slices
    return spec


def _write(text: str, out: str):
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)


def _peaks_table(args) -> str:
    for name in ("k_over_kappa", "delta_over_g"):
        if getattr(args, name) is None:
            raise ValueError(f"--{name.replace('_', '-')} is required")
    n = args.n or 0
    k, d = args.k_over_kappa, args.delta_over_g
    MazerParams(n, k, d, 0.0)
    rep = peak_report(n, d, k, args.m_max)
    step = rep.positions_kappa_L[0]
    found = locate_maxima(lambda x: emission_arrays(n, k, d, x)[0],
                          max(0.5 * step, 1e-3), rep.positions_kappa_L[-1] + 0.5 * step)
    lines = [
        f"# n={n} k_over_kappa={k:.12g} delta_over_g={d:.12g}",
        f"# amplitude={rep.amplitude:.12g} finesse={rep.finesse:.12g} "
        f"de_broglie_kappa={rep.de_broglie_kappa:.12g}",
        "m,predicted_kappa_L,located_kappa_L,located_p_em,predicted_amplitude",
    ]
    for m, pos in enumerate(rep.positions_kappa_L, start=1):
        if found:
            x, h = min(found, key=lambda f: abs(f[0] - pos))
            loc = f"{x:.12g},{h:.12g}"
        else:
            loc = ","
        lines.append(f"{m},{pos:.12g},{loc},{rep.amplitude:.12g}")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "peaks":
            _write(_peaks_table(args), args.out)
            return EXIT_OK
        spec = spec_from_args(args)
        if args.command == "sweep":
            if args.engine:
                spec.engine = args.engine
            text, failed = run_sweep(spec, jobs=args.jobs)
        else:
            engines = args.engines or []
            text, summary, failed = compare(engines, spec, jobs=args.jobs)
            for (a, b), mx, mn in zip(summary.pairs, summary.max_dev, summary.mean_dev):
                print(f"{a} vs {b}: max_dev={mx:.3e} mean_dev={mn:.3e}", file=sys.stderr)
    except (ValueError, OSError) as exc:
        print(f"mazer: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MazerError as exc:
        print(f"mazer: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    _write(text, args.out)
    rows = text.count("\n") - sum(1 for line in text.splitlines() if line.startswith("#")) - 1
    if rows > 0 and failed / rows > FAILURE_FRACTION:
        print(f"mazer: {failed} of {rows} grid points failed", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

    cavchar geometry --input measurement.json
    cavchar finesse  --input measurement.json
    cavchar fit      trace1.csv trace2.csv --fsr 988.2e9
    cavchar budget   --input measurement.json
    cavchar coupling --input measurement.json
    cavchar chirp-sim --input measurement.json --out chirp.csv
    cavchar dips     --input chirp.csv --reference 21e3,28e3,54e3,78e3,80e3
    cavchar synth    --input truth.json --seed 7 --out campaign/
    cavchar report   frag1.json frag2.json --out report.json
    cavchar report   --input measurement.json

Exit codes: 0 success, 2 input/schema error, 3 computation error. Errors go
to stderr as ``cavchar: <CODE>: <message>``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .errors import CavcharError, ModeAssignmentError
from .measurement import InputError, MeasurementFile, load_json, sha256_bytes, write_json
from .mech import AXIS_CONVENTIONS, SWEEP
from .pipeline import (
    SPREAD_SEM,
    SPREAD_STD,
    budget_fragment,
    chirp_sim_fragment,
    coupling_fragment,
    dips_fragment,
    dips_from_file,
    finesse_fragment,
    fit_fragment,
    full_report,
    geometry_fragment,
    merge_fragments,
)
from .quantity import PROPAGATION_MODES, QUADRATURE, Quantity, Unit
from .synth import synthesize

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_COMPUTE = 3


def _emit(obj, out):
    text = write_json(obj, out)
    if out is None:
        sys.stdout.write(text)


def _need_input(args):
    if not args.input:
        raise InputError("--input is required", code="E_NO_INPUT")
    return args.input


def _floats(text):
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"bad number list {text!r}", code="E_ARGS") from exc


def cmd_geometry(args):
    mf = MeasurementFile.load(_need_input(args))
    _emit(geometry_fragment(mf, args.propagation), args.out)
    return EXIT_OK


def cmd_finesse(args):
    mf = MeasurementFile.load(_need_input(args))
    frag, ok = finesse_fragment(mf, args.propagation, args.spread)
    _emit(frag, args.out)
    return EXIT_OK if ok else EXIT_COMPUTE


def cmd_fit(args):
    paths = list(args.traces) + ([args.input] if args.input else [])
    if not paths:
        raise InputError("no trace files given", code="E_NO_INPUT")
    for p in paths:
        if not Path(p).is_file():
            raise InputError(f"cannot read {p}", code="E_NO_INPUT")
    fsr = None if args.fsr is None else Quantity.of(args.fsr, args.fsr_sigma, Unit.HZ)
    frag, ok = fit_fragment(paths, fsr, args.curves, args.spread)
    _emit(frag, args.out)
    return EXIT_OK if ok else EXIT_COMPUTE


def cmd_budget(args):
    mf = MeasurementFile.load(_need_input(args))
    _emit(budget_fragment(mf, args.propagation, args.spread), args.out)
    return EXIT_OK


def cmd_coupling(args):
    mf = MeasurementFile.load(_need_input(args))
    _emit(coupling_fragment(mf, args.propagation, args.spread), args.out)
    return EXIT_OK


def cmd_chirp_sim(args):
    mf = MeasurementFile.load(_need_input(args))
    if not args.out:
        raise InputError("--out <trace.csv> is required for chirp-sim", code="E_ARGS")
    frag = chirp_sim_fragment(mf, args.out, args.axis, args.propagation)
    if args.fragment:
        write_json(frag, args.fragment)
    else:
        sys.stdout.write(write_json(frag))
    return EXIT_OK


def cmd_dips(args):
    path = Path(_need_input(args))
    if path.suffix.lower() == ".json":
        mf = MeasurementFile.load(path)
        frag = dips_from_file(mf, args.min_prominence, args.axis)
    else:
        if not path.is_file():
            raise InputError(f"cannot read {path}", code="E_NO_INPUT")
        norm = None
        if args.lower is not None or args.upper is not None:
            if args.lower is None or args.upper is None:
                raise InputError("--lower and --upper go together", code="E_ARGS")
            norm = (args.lower, args.upper)
        frag = dips_fragment(
            path,
            {path.name: sha256_bytes(path.read_bytes())},
            0.02 if args.min_prominence is None else args.min_prominence,
            _floats(args.reference),
            args.tolerance,
            norm,
            args.axis,
        )
    _emit(frag, args.out)
    return EXIT_OK


def cmd_synth(args):
    config, _ = load_json(_need_input(args))
    if not args.out:
        raise InputError("--out <directory> is required for synth", code="E_ARGS")
    path = synthesize(config, args.seed, args.out)
    sys.stdout.write(f"{path}\n")
    return EXIT_OK


def cmd_report(args):
    if args.fragments:
        frags = [load_json(p)[0] for p in args.fragments]
        _emit(merge_fragments(frags), args.out)
        return EXIT_OK
    mf = MeasurementFile.load(_need_input(args))
    report, ok = full_report(mf, args.propagation, args.spread, args.axis)
    _emit(report, args.out)
    return EXIT_OK if ok else EXIT_COMPUTE


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", "-i", help="input file (measurement JSON, trace CSV or config)")
    common.add_argument("--out", "-o", help="output file (default: stdout)")
    common.add_argument("--seed", type=int, default=0, help="seed for synthetic data")
    common.add_argument("--propagation", choices=PROPAGATION_MODES, default=QUADRATURE,
                        help="uncertainty bookkeeping for frequency differences")
    common.add_argument("--axis", choices=AXIS_CONVENTIONS, default=SWEEP,
                        help="chirp frequency-axis convention")
    common.add_argument("--spread", choices=(SPREAD_SEM, SPREAD_STD), default=SPREAD_SEM,
                        help="uncertainty of a multi-shot linewidth average")

    p = argparse.ArgumentParser(prog="cavchar", description="Fabry-Perot cavity characterization")
    p.add_argument("--version", action="version", version=f"cavchar {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("geometry", parents=[common], help="cavity geometry from two-laser readings").set_defaults(func=cmd_geometry)
    sub.add_parser("finesse", parents=[common], help="finesse and birefringence from fitted traces").set_defaults(func=cmd_finesse)

    fit = sub.add_parser("fit", parents=[common], help="Lorentzian fits of trace CSV files")
    fit.add_argument("traces", nargs="*")
    fit.add_argument("--fsr", type=float, help="FSR in Hz; adds a finesse result")
    fit.add_argument("--fsr-sigma", type=float, default=0.0)
    fit.add_argument("--curves", help="directory for tidy CSV files with the fitted curve")
    fit.set_defaults(func=cmd_fit)

    sub.add_parser("budget", parents=[common], help="mirror loss and outcoupling efficiency").set_defaults(func=cmd_budget)
    sub.add_parser("coupling", parents=[common], help="atom-cavity coupling g0").set_defaults(func=cmd_coupling)

    cs = sub.add_parser("chirp-sim", parents=[common], help="simulate a chirped mechanical sweep")
    cs.add_argument("--fragment", help="write the JSON fragment here instead of stdout")
    cs.set_defaults(func=cmd_chirp_sim)

    d = sub.add_parser("dips", parents=[common], help="find mechanical-resonance dips")
    d.add_argument("--min-prominence", type=float)
    d.add_argument("--reference", help="comma-separated reference frequencies in Hz")
    d.add_argument("--tolerance", type=float, default=2e3, help="pairing tolerance in Hz")
    d.add_argument("--lower", type=float, help="normalization lower bound")
    d.add_argument("--upper", type=float, help="normalization upper bound")
    d.set_defaults(func=cmd_dips)

    sub.add_parser("synth", parents=[common], help="write a synthetic measurement campaign").set_defaults(func=cmd_synth)

    r = sub.add_parser("report", parents=[common], help="merge fragments or run the full pipeline")
    r.add_argument("fragments", nargs="*")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ModeAssignmentError) as exc:
        sys.stderr.write(f"cavchar: {exc.code}: {exc}\n")
        return EXIT_INPUT
    except CavcharError as exc:
        sys.stderr.write(f"cavchar: {exc.code}: {exc}\n")
        return EXIT_COMPUTE
    except ValueError as exc:
        sys.stderr.write(f"cavchar: E_VALUE: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

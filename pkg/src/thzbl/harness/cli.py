"""Command-line entry point: ``thzbl simulate | bcrlb | validate``."""
import argparse
import json
import logging
import sys
from dataclasses import replace

from .checks import run_checks
from .config import (ExperimentSpec, FullScaleRequired, get_preset, load_config, parse_methods,
                     parse_snr_grid, scenario_dict)
from .io import write_csv, write_json
from .sweep import run_sweep

EXIT_ERROR = 1
EXIT_FULL_SCALE = 3
EXIT_CHECK_FAILED = 4


def _add_common(p):
    p.add_argument("--preset", default=None, help="reduced, system1 or system2 (default reduced)")
    p.add_argument("--config", default=None, help="INI file; CLI flags override it")
    p.add_argument("--section", default=None, help="section of --config (default first)")
    p.add_argument("--snr", default=None, help="start:step:stop or comma list, in dB")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n-blocks", type=int, default=None, help="training blocks M")
    p.add_argument("--n-data", type=int, default=None, help="data blocks N_d")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--full-scale", action="store_true",
                   help="allow beamspace dimensions above the desk-scale limit")
    p.add_argument("--timing", action="store_true", help="record wall time (non-deterministic)")
    p.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    p.add_argument("--json", default=None, help="also write JSON results here")


def build_parser():
    parser = argparse.ArgumentParser(prog="thzbl", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", help="NMSE/BER sweep over SNR")
    _add_common(sim)
    sim.add_argument("--methods", default=None, help="comma list, e.g. omp,pa-bl,da-bl")
    bc = sub.add_parser("bcrlb", help="Bayesian CRLB sweep with genie hyperparameters")
    _add_common(bc)
    bc.add_argument("--data-aided", action="store_true", help="also bound the data-aided model")
    sub.add_parser("validate", help="run the built-in self-checks")
    return parser


def spec_from_args(args):
    if args.config:
        spec = load_config(args.config, args.section)
        if args.preset:
            spec = replace(spec, scenario=get_preset(args.preset))
    else:
        spec = ExperimentSpec(scenario=get_preset(args.preset or "reduced"))
    sc = spec.scenario
    if args.n_blocks is not None:
        sc = replace(sc, n_blocks=args.n_blocks)
    if args.n_data is not None:
        sc = replace(sc, n_data=args.n_data)
    kw = {"scenario": sc, "full_scale": args.full_scale, "timing": args.timing}
    if args.command == "bcrlb":
        kw["methods"] = ("BCRLB-PA", "BCRLB-DA") if args.data_aided else ("BCRLB-PA",)
    elif args.methods:
        kw["methods"] = parse_methods(args.methods)
    if args.snr:
        kw["snr_db"] = parse_snr_grid(args.snr)
    if args.trials is not None:
        kw["trials"] = args.trials
    if args.seed is not None:
        kw["seed"] = args.seed
    return replace(spec, **kw)


def _emit(rows, spec, args):
    if args.out == "-":
        write_csv(rows, sys.stdout)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_csv(rows, fh)
    if args.json:
        meta = {"scenario": scenario_dict(spec.scenario), "methods": list(spec.methods),
                "snr_db": list(spec.snr_db), "trials": spec.trials, "seed": spec.seed}
        with open(args.json, "w", encoding="utf-8") as fh:
            write_json(rows, fh, meta)


def _validate():
    results = run_checks()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}: {name} ({detail})")
    return 0 if all(ok for _, ok, _ in results) else EXIT_CHECK_FAILED


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            return _validate()
        spec = spec_from_args(args)
        rows = run_sweep(spec, workers=args.workers)
        _emit(rows, spec, args)
        return 0
    except FullScaleRequired as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FULL_SCALE
    except (ValueError, OSError, json.JSONDecodeError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

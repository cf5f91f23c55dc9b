"""Command-line front end.

    scfox run CONFIG -o OUT.csv
    scfox reproduce-fig {1,2,3,4} -o DIR
    scfox validate [-o REPORT.csv] [--tol-scale X]

Global flags (--seed, --samples, --streams, --method, --threads,
--no-timing) may come before or after the subcommand.  Values in a config
file win over flags, and flags win over the SCFOX_THREADS environment
variable.  Exit status: 0 when everything passes, 1 on a numerical
disagreement or failed check, 2 on a configuration error.
"""

import argparse
import logging
import os
import sys
import time

from . import __version__, figures, validation
from .montecarlo import SimConfig, default_threads
from .scenario import METHOD_CHOICES, ConfigError, disagreements, load_config, run_scenario, \
    write_csv

EXIT_OK, EXIT_DISAGREE, EXIT_CONFIG = 0, 1, 2

_FLAG_DEFAULTS = {"seed": 1, "samples": 1_000_000, "streams": 8, "method": "fox-h",
                  "threads": None, "no_timing": False}


def _global_flags():
    # SUPPRESS keeps a flag given before the subcommand from being reset after it
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                   help="Monte Carlo seed (default 1)")
    g.add_argument("--samples", type=int, default=argparse.SUPPRESS,
                   help="Monte Carlo samples per point (default 1e6)")
    g.add_argument("--streams", type=int, default=argparse.SUPPRESS,
                   help="independent random streams per point (default 8)")
    g.add_argument("--method", choices=METHOD_CHOICES, default=argparse.SUPPRESS,
                   help="evaluation path (default fox-h)")
    g.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                   help="worker threads (default $SCFOX_THREADS or min(8, cpus))")
    g.add_argument("--no-timing", action="store_true", default=argparse.SUPPRESS,
                   help="leave elapsed_ms empty so repeated runs give identical files")
    g.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS,
                   help="log progress to stderr")
    return p


def build_parser():
    common = _global_flags()
    parser = argparse.ArgumentParser(
        prog="scfox", parents=[common],
        description="Selection combining over Fisher-Snedecor F fading: exact metrics, "
                    "figure data and validation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="evaluate the scenarios of a config file")
    run.add_argument("config", help="JSON scenario file")
    run.add_argument("-o", "--output", required=True, help="CSV file to write")

    fig = sub.add_parser("reproduce-fig", parents=[common], help="write the data of one figure")
    fig.add_argument("figure", type=int, choices=(1, 2, 3, 4))
    fig.add_argument("-o", "--output", required=True, help="directory for figN.csv")

    val = sub.add_parser("validate", parents=[common], help="run the acceptance checks")
    val.add_argument("-o", "--output", help="report CSV")
    val.add_argument("--tol-scale", type=float, default=1.0,
                     help="multiply every numerical tolerance by this factor")
    return parser


def _settings(args):
    s = dict(_FLAG_DEFAULTS)
    s.update({k: v for k, v in vars(args).items() if k in _FLAG_DEFAULTS})
    return s


def _explicit(args, keys):
    return {k: getattr(args, k) for k in keys if hasattr(args, k)}


def _report(problems):
    for msg in problems:
        print(f"disagreement: {msg}", file=sys.stderr)
    return EXIT_DISAGREE if problems else EXIT_OK


def cmd_run(args):
    flags = _explicit(args, ("method", "seed", "samples", "streams"))
    defaults = dict(flags)
    defaults.setdefault("streams", _FLAG_DEFAULTS["streams"])
    defaults.setdefault("seed", _FLAG_DEFAULTS["seed"])
    scenarios, cfg_threads = load_config(args.config, defaults)
    settings = _settings(args)
    threads = cfg_threads or settings["threads"] or default_threads()
    results = [(sc, run_scenario(sc, threads)) for sc in scenarios]
    write_csv(args.output, results, timing=not settings["no_timing"])
    problems = [msg for sc, rows in results for msg in disagreements(sc, rows)]
    return _report(problems)


def cmd_reproduce(args):
    s = _settings(args)
    if s["samples"] < 1000 or s["streams"] < 1:
        raise ConfigError("key 'samples': must be >= 1000 (and streams >= 1)")
    sim = SimConfig(s["samples"], s["seed"], s["streams"])
    threads = s["threads"] or default_threads()
    os.makedirs(args.output, exist_ok=True)
    results = [(sc, run_scenario(sc, threads))
               for sc in figures.figure_scenarios(args.figure, s["method"], sim)]
    path = os.path.join(args.output, f"fig{args.figure}.csv")
    write_csv(path, results, preamble=(figures.TITLES[args.figure],),
              timing=not s["no_timing"])
    print(path)
    return _report([msg for sc, rows in results for msg in disagreements(sc, rows)])


def cmd_validate(args):
    s = _settings(args)
    sim = SimConfig(_explicit(args, ("samples",)).get("samples", validation.MC_SAMPLES),
                    _explicit(args, ("seed",)).get("seed", validation.MC_SEED),
                    _explicit(args, ("streams",)).get("streams", validation.MC_STREAMS))
    threads = s["threads"] or default_threads()
    t0 = time.perf_counter()
    results = validation.run_all(args.tol_scale, threads=threads, sim=sim,
                                 progress=lambda m: logging.getLogger("scfox").info(m))
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] criterion {r.criterion}: {r.name}: achieved {r.achieved:.3g}, "
              f"tolerance {r.tolerance:.3g}, {r.runtime_s:.1f} s"
              + (f" ({r.detail})" if r.detail and not r.passed else ""))
    print(f"total {time.perf_counter() - t0:.1f} s")
    if args.output:
        validation.write_report(args.output, results)
    return EXIT_OK if all(r.passed for r in results) else EXIT_DISAGREE


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.ERROR,
                        format="%(name)s: %(message)s")
    handlers = {"run": cmd_run, "reproduce-fig": cmd_reproduce, "validate": cmd_validate}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # invalid flag values (samples, seed, streams)
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

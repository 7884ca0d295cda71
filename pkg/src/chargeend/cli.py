"""Command-line entry point: simulate, calibrate, run, plot."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import kernels
from .calibration import parse_rule
from .config import default_config, load_config, save_config
from .harness import ExperimentSpec, emit_plots, run_calibration, run_experiment, simulate_profiles
from .profile import BmsMode

log = logging.getLogger("chargeend")


def _config(path):
    return load_config(path) if path else default_config()


def cmd_simulate(args) -> int:
    paths = simulate_profiles(_config(args.config), Path(args.out))
    log.info("wrote %d profiles to %s", len(paths), args.out)
    return 0


def cmd_calibrate(args) -> int:
    mode = {"AC": BmsMode.AC_CHARGE, "DC": BmsMode.DC_CHARGE}[args.mode.upper()]
    tmap = run_calibration(args.profiles, parse_rule(args.rule), mode, out_config=args.out)
    print(f"{mode.name}: c0={tmap.c0:.6f} c1={tmap.c1:.6g} c2={tmap.c2:.6g}")
    return 0


def cmd_run(args) -> int:
    cfg = _config(args.config)
    if not cfg.profiles:
        raise ValueError("config lists no profiles")
    spec = ExperimentSpec.from_config(cfg, Path(args.out))
    summaries = run_experiment(spec)
    print(f"{'profile':<12} {'gamma':>5} {'inj%':>6} {'final err%':>10} {'no-snap err%':>12} {'act t[s]':>9} {'max jump%':>9}")
    for s in summaries:
        print(
            f"{s.profile_id:<12} {s.gamma:>5g} {s.injected_error:>6g} {s.final_corrected_error:>10.3f} "
            f"{s.final_baseline_nosnap_error:>12.3f} {s.activation_time:>9.0f} {s.max_active_jump:>9.3f}"
        )
    log.info("kernels: %s; %d runs written to %s", kernels.BACKEND, len(summaries), args.out)
    return 0


def cmd_plot(args) -> int:
    paths = emit_plots(args.traces, args.out)
    log.info("wrote %d SVG files to %s", len(paths), args.out)
    return 0


def cmd_init_config(args) -> int:
    save_config(args.out, default_config())
    log.info("wrote default config to %s", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chargeend", description="Charge-end SOC correction experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate synthetic charge profiles")
    p.add_argument("--config", help="config file (built-in defaults if omitted)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="fit a charge-end threshold map")
    p.add_argument("--profiles", required=True, help="directory of full-charge profile CSVs")
    p.add_argument("--mode", required=True, choices=["AC", "DC", "ac", "dc"])
    p.add_argument("--rule", required=True, help="soc:<pct> or ttc:<seconds>")
    p.add_argument("--out", required=True, help="config file to write the map into")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("run", help="run baseline vs corrected experiments")
    p.add_argument("--config", help="config file (built-in defaults if omitted)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plot", help="render SVG plots from trace files")
    p.add_argument("--traces", required=True, help="directory of trace CSVs")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("init-config", help="write the default config file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_init_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:
        if args.verbose:
            raise
        print(f"chargeend {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

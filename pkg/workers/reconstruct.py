#!/usr/bin/env python3
# Full pipeline: data -> point sources -> equivalent discs -> Newton per schedule.
# Writes files for every stage (a..e), plot.gnuplot, report.json, manifest.json

import argparse, sys

try:
    from workers._common import add_scenario_arguments, out_dir, scenario_config, worker_main
except ImportError:
    from _common import add_scenario_arguments, out_dir, scenario_config, worker_main

from nonlin_tomo.harness import Scenario, run_scenario


def add_arguments(ap: argparse.ArgumentParser) -> None:
    add_scenario_arguments(ap)
    ap.add_argument("--schedule", action="append", default=None,
                    help="Newton schedule(s) to run; overrides scenario.schedules (repeatable)")


def run(args: argparse.Namespace) -> dict:
    cfg = scenario_config(args)
    if args.schedule:
        cfg.setdefault("scenario", {})["schedules"] = list(args.schedule)
    s = Scenario.from_any(cfg)
    out = out_dir(args, cfg, "reconstruct")
    rep = run_scenario(s, out, until="newton")
    newton = rep["stages"].get("newton", {})
    return {"status": "ok" if not rep["failures"] else "partial", "out": out,
            "support": rep["stages"].get("pdap", {}).get("support"),
            "newton": {k: {"status": v["status"], "relative_l2": v["mean_relative_l2"],
                           "missed": v["missed_objects"]} for k, v in newton.items()},
            "third_harmonic": rep.get("third_harmonic"),
            "failures": len(rep["failures"])}


def main() -> int:
    return worker_main(add_arguments, run, "Reconstruct inclusion shapes from multiharmonic data")


if __name__ == "__main__":
    sys.exit(main())

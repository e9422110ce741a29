#!/usr/bin/env python3
# Recover a sparse point-source measure from second-harmonic flux data (PDAP).
# Writes <out>/a_point_sources.csv plus the data files of the simulate stage.

import argparse, sys

try:
    from workers._common import add_scenario_arguments, out_dir, scenario_config, worker_main
except ImportError:
    from _common import add_scenario_arguments, out_dir, scenario_config, worker_main

from nonlin_tomo.harness import Scenario, run_scenario


def add_arguments(ap: argparse.ArgumentParser) -> None:
    add_scenario_arguments(ap)
    ap.add_argument("--discs", action="store_true", help="Also build the equivalent-disc starting guesses")


def run(args: argparse.Namespace) -> dict:
    cfg = scenario_config(args)
    s = Scenario.from_any(cfg)
    out = out_dir(args, cfg, "pdap")
    rep = run_scenario(s, out, until="eqdiscs" if args.discs else "pdap")
    pd = rep["stages"].get("pdap", {})
    hist = pd.get("residual_history") or [None]
    return {"status": "ok" if not rep["failures"] else "partial", "out": out,
            "support": pd.get("support"), "converged": pd.get("converged"), "residual": hist[-1],
            "objects": len(rep["stages"].get("eqdiscs", {}).get("curves", [])),
            "failures": rep["failures"]}


def main() -> int:
    return worker_main(add_arguments, run, "Point-source recovery from boundary flux data")


if __name__ == "__main__":
    sys.exit(main())

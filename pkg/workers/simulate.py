#!/usr/bin/env python3
# Generate synthetic multiharmonic boundary data for a scenario.
# Writes <out>/data_m{m}_{neumann,dirichlet}.csv, phantom_curves.csv, report.json, manifest.json

import argparse, sys

try:
    from workers._common import add_scenario_arguments, out_dir, scenario_config, worker_main
except ImportError:  # run as a script from workers/
    from _common import add_scenario_arguments, out_dir, scenario_config, worker_main

from nonlin_tomo.harness import Scenario, run_scenario


def add_arguments(ap: argparse.ArgumentParser) -> None:
    add_scenario_arguments(ap)


def run(args: argparse.Namespace) -> dict:
    cfg = scenario_config(args)
    s = Scenario.from_any(cfg)
    out = out_dir(args, cfg, "simulate")
    rep = run_scenario(s, out, until="data")
    return {"status": "ok" if not rep["failures"] else "partial", "out": out,
            "norms": rep["stages"].get("data", {}).get("norms", {}),
            "third_to_second": rep["stages"].get("data", {}).get("third_to_second"),
            "failures": rep["failures"]}


def main() -> int:
    return worker_main(add_arguments, run, "Simulate multiharmonic boundary data")


if __name__ == "__main__":
    sys.exit(main())

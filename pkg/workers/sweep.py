#!/usr/bin/env python3
# Run a scenario's sweep block as independent parallel jobs.
# Writes <out>/job_XX/... per value plus sweep.json and sweep.csv

import argparse, sys

try:
    from workers._common import add_scenario_arguments, out_dir, scenario_config, worker_main
except ImportError:
    from _common import add_scenario_arguments, out_dir, scenario_config, worker_main

from nonlin_tomo.harness import sweep


def add_arguments(ap: argparse.ArgumentParser) -> None:
    add_scenario_arguments(ap)
    ap.add_argument("--until", default="newton", choices=("data", "pdap", "eqdiscs", "newton"))
    ap.add_argument("--jobs", type=int, default=None, help="Parallel jobs (default: runtime.max_concurrency)")


def run(args: argparse.Namespace) -> dict:
    cfg = scenario_config(args)
    out = out_dir(args, cfg, "sweep")
    rep = sweep(cfg, out, args.until, args.jobs)
    return {"status": "ok", "out": out, "jobs": len(rep["results"]),
            "errors": sum(1 for r in rep["results"] if r["status"] == "error")}


def main() -> int:
    return worker_main(add_arguments, run, "Parameter sweep over a scenario")


if __name__ == "__main__":
    sys.exit(main())

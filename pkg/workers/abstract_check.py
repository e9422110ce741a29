#!/usr/bin/env python3
# Numerical checks on the 1-D spectral model: range invariance, Hankel sigma_min,
# linearised injectivity and the frozen Newton iteration.
# Writes <out>/abstract.json, hankel.csv, frozen_newton.csv

import argparse, sys

try:
    from workers._common import add_scenario_arguments, out_dir, scenario_config, worker_main
except ImportError:
    from _common import add_scenario_arguments, out_dir, scenario_config, worker_main

from nonlin_tomo.harness import abstract_report


def add_arguments(ap: argparse.ArgumentParser) -> None:
    add_scenario_arguments(ap)


def run(args: argparse.Namespace) -> dict:
    cfg = scenario_config(args)
    if args.seed is not None:
        cfg.setdefault("abstract", {})["seed"] = int(args.seed)
    out = out_dir(args, cfg, "abstract")
    rep = abstract_report(cfg, out)
    return {
        "status": "ok" if not rep["failures"] else "partial",
        "out": out,
        "max_range_defect": max((r["max_defect"] for r in rep["range_invariance"]), default=None),
        "hankel_sigma_min": [r["sigma_min"] for r in rep["hankel"]],
        "injectivity": [r["sigma_min"] for r in rep["injectivity"]],
        "frozen_newton": {fn["variant"]: [run["final_error"] for run in fn["runs"]] for fn in rep["frozen_newton"]},
        "failures": rep["failures"],
    }


def main() -> int:
    return worker_main(add_arguments, run, "Checks on the 1-D multiharmonic spectral model")


if __name__ == "__main__":
    sys.exit(main())

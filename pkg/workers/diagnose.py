#!/usr/bin/env python3
# Jacobian conditioning versus aperture for a single inclusion, next to the
# data-completion estimate c_N. Writes <out>/conditioning.csv and conditioning.json

import argparse, sys

try:
    from workers._common import add_scenario_arguments, out_dir, scenario_config, worker_main
except ImportError:
    from _common import add_scenario_arguments, out_dir, scenario_config, worker_main

from nonlin_tomo.harness import Scenario, conditioning_report


def add_arguments(ap: argparse.ArgumentParser) -> None:
    add_scenario_arguments(ap)
    ap.add_argument("--fractions", type=float, nargs="+", default=None,
                    help="Arc fractions α/2π (default: scenario.fractions or 1 0.75 0.5 0.4 0.3)")
    ap.add_argument("--basis", type=int, default=9, help="Number of radial basis functions (odd)")


def run(args: argparse.Namespace) -> dict:
    cfg = scenario_config(args)
    s = Scenario.from_any(cfg)
    fractions = args.fractions or (cfg.get("scenario", {}) or {}).get("fractions") or [1.0, 0.75, 0.5, 0.4, 0.3]
    out = out_dir(args, cfg, "diagnose")
    rows = conditioning_report(s, fractions, args.basis, out)
    return {"status": "ok", "out": out,
            "rows": [{"arc_fraction": r["arc_fraction"], "cond_J": r["cond_J"], "c_N": r["c_N_observed"]}
                     for r in rows]}


def main() -> int:
    return worker_main(add_arguments, run, "Jacobian conditioning versus aperture")


if __name__ == "__main__":
    sys.exit(main())

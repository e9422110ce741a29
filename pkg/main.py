#!/usr/bin/env python3
"""
Nonlinearity-parameter tomography: command-line entry point.

Subcommands (each delegates to the matching worker under workers/):
  simulate     synthetic multiharmonic boundary data
  pdap         point-source recovery (optionally with equivalent discs)
  reconstruct  full pipeline with Newton per schedule
  abstract     checks on the 1-D spectral model
  diagnose     Jacobian conditioning versus aperture
  sweep        parameter sweep over a scenario

Every run prints one JSON status line to stdout. Failures print
{"status": "error", "error": <class>, "message": ...} and exit with 1.
"""

import argparse, sys
from typing import List, Optional

from nonlin_tomo import __version__
from nonlin_tomo.errors import TomoError
from nonlin_tomo.io import status_line
from workers import abstract_check, diagnose, reconstruct, recover_sources, simulate, sweep
from workers._common import error_record

COMMANDS = {
    "simulate": (simulate, "Simulate multiharmonic boundary data"),
    "pdap": (recover_sources, "Recover point sources from second-harmonic flux data"),
    "reconstruct": (reconstruct, "Run the full reconstruction pipeline"),
    "abstract": (abstract_check, "Checks on the 1-D spectral model"),
    "diagnose": (diagnose, "Jacobian conditioning versus aperture"),
    "sweep": (sweep, "Parameter sweep over a scenario"),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nonlin-tomo", description="Nonlinearity-parameter tomography")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (mod, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        mod.add_arguments(sp)
        sp.set_defaults(run=mod.run)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rec = args.run(args)
    except (TomoError, ValueError, OSError) as e:
        print(status_line(error_record(e)))
        return 1
    print(status_line(rec))
    return 0


if __name__ == "__main__":
    sys.exit(main())

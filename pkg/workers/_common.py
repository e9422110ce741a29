# Shared argument handling for the stage workers.

import argparse, os, sys
from typing import Any, Callable, Dict, Optional

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from nonlin_tomo.config import RuntimeConfig, load_config  # noqa: E402
from nonlin_tomo.errors import TomoError  # noqa: E402
from nonlin_tomo.io import status_line  # noqa: E402


def add_scenario_arguments(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--scenario", default=None, help="Scenario YAML merged over config.yaml")
    ap.add_argument("--seed", type=int, default=None, help="Override scenario.seed")
    ap.add_argument("--out", default=None, help="Output directory (default: runtime.output_dir/<name>/<stage>)")


def scenario_config(args: argparse.Namespace) -> Dict[str, Any]:
    cfg = load_config(args.scenario)
    if args.seed is not None:
        cfg.setdefault("scenario", {})["seed"] = int(args.seed)
    return cfg


def out_dir(args: argparse.Namespace, cfg: Dict[str, Any], stage: str) -> str:
    if args.out:
        return args.out
    name = (cfg.get("scenario", {}) or {}).get("name", "default")
    return os.path.join(RuntimeConfig.from_any(cfg.get("runtime")).output_dir, str(name), stage)


def error_record(e: BaseException) -> Dict[str, Any]:
    return {"status": "error", "error": type(e).__name__, "message": str(e)}


def worker_main(add_arguments: Callable[[argparse.ArgumentParser], None],
                run: Callable[[argparse.Namespace], Dict[str, Any]],
                description: Optional[str] = None) -> int:
    ap = argparse.ArgumentParser(description=description)
    add_arguments(ap)
    args = ap.parse_args()
    try:
        rec = run(args)
    except (TomoError, ValueError, OSError) as e:
        print(status_line(error_record(e)))
        return 1
    print(status_line(rec))
    return 0

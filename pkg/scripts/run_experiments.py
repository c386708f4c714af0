"""Run the bundled scenario configs and print their verdicts.

    python3 scripts/run_experiments.py                      # every config
    python3 scripts/run_experiments.py disordered hitting   # a subset
    python3 scripts/run_experiments.py --trials 50 --out /tmp/quick
"""
import argparse
import json
import logging
import sys
import time
from pathlib import Path

from rankga.experiments.config import deep_merge, load_config
from rankga.experiments.runner import run_scenario

CONFIGS = Path(__file__).resolve().parent / "configs"

log = logging.getLogger("run_experiments")


def main(argv=None):
    names = sorted(p.stem for p in CONFIGS.glob("*.json"))
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("configs", nargs="*", help=f"config names from {', '.join(names)} (default: all)")
    p.add_argument("--out", default="out", help="parent directory for per-config outputs")
    p.add_argument("--trials", type=int, help="override the trial count of every config")
    p.add_argument("--seed", type=int, help="override the master seed of every config")
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args(argv)
    unknown = set(args.configs) - set(names)
    if unknown:
        p.error(f"unknown configs {sorted(unknown)}")
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    ok = True
    for name in args.configs or names:
        raw = json.loads((CONFIGS / f"{name}.json").read_text())
        cfg = load_config(None, raw)
        if args.trials is not None:
            cfg = deep_merge(cfg, {"scenario": {"trials": args.trials}})
        start = time.perf_counter()
        res = run_scenario(cfg, seed=args.seed, workers=args.workers, out=Path(args.out) / name)
        verdicts = res.summary["verdicts"]
        ok &= all(verdicts.values())
        log.info("%-16s %6.1fs  %s", name, time.perf_counter() - start,
                 " ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in verdicts.items()) or "(no verdicts)")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())

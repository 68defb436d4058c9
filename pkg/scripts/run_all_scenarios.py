"""Run every bundled scenario and print final metrics against thresholds.

    python3 scripts/run_all_scenarios.py --out runs/all [--steps N] [--plot]
"""

import argparse
import sys
from pathlib import Path

from homprog.cli import BUILTIN, builtin_config_text
from homprog.config import parse_config
from homprog.experiment import emit_plot, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="runs/all")
    ap.add_argument("--steps", type=int, help="override MPC steps for every scenario")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--plot", action="store_true", help="also write paths.svg per scenario")
    ap.add_argument("--only", nargs="*", choices=BUILTIN, default=list(BUILTIN))
    args = ap.parse_args()

    ok = True
    for name in args.only:
        cfg = parse_config(builtin_config_text(name))
        out = Path(args.out) / name
        s = run_experiment(cfg, out, seed=args.seed, steps=args.steps)
        met = all(s.thresholds_met.values()) if s.thresholds_met else None
        ok &= s.ok and met is not False
        mets = "  ".join(f"{k}={v:.4g}" for k, v in s.final_metrics.items())
        print(f"{name:22s} {s.status:6s} steps={s.steps_executed:<4d} {s.wall_clock_s:6.1f}s "
              f"thresholds={'-' if met is None else met}  {mets}")
        if args.plot and "trajectory" in s.files:
            emit_plot(s.files["trajectory"], out / "paths.svg")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())

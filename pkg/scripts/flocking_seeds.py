"""Flocking over several seeds: worst relative distance error at the final step.

    python3 scripts/flocking_seeds.py --seeds 1 2 3 4 5
"""

import argparse
import math
import sys
import time

from homprog.cli import builtin_config_text
from homprog.config import parse_config, to_scenario
from homprog.control import run_mpc


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--tol", type=float, default=0.05, help="allowed relative deviation from sqrt(5)")
    args = ap.parse_args()

    cfg = parse_config(builtin_config_text("flocking"))
    worst_all = 0.0
    for seed in args.seeds:
        t0 = time.perf_counter()
        tlog = run_mpc(to_scenario(cfg.with_overrides(seed=seed)))
        dt = time.perf_counter() - t0
        m = tlog.final_metrics
        worst_all = max(worst_all, m["distance_error"])
        print(f"seed {seed:3d}  distance_error={m['distance_error']:.4f}  "
              f"pair dist in [{m['min_pair_dist']:.4f}, {m['max_pair_dist']:.4f}] (target {math.sqrt(5):.4f})  "
              f"{dt:.1f}s{'  FAILED' if tlog.failed else ''}")
    print(f"worst {worst_all:.4f} (tolerance {args.tol})")
    return 0 if worst_all <= args.tol else 1


if __name__ == "__main__":
    sys.exit(main())

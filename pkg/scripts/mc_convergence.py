"""Total-variation distance between the Monte Carlo oracle and the analytic
release-count pmfs as the number of trials grows.

    python3 scripts/mc_convergence.py [--trials 10000 100000 1000000] [--coupling shared_block]

With the default independent coupling the distance should shrink roughly like
1/sqrt(trials). ``--coupling shared_block`` simulates one derailed block per
mainline incident instead and shows the gap left by the per-position
independence assumption of the analytic mainline count.
"""
import argparse
import time
from pathlib import Path

from railhazrisk.oracle import SimConfig, simulate_release_counts, tv_distance
from railhazrisk.pipeline import conditional_release
from railhazrisk.scenario import load_scenario
from railhazrisk.validation import validation_targets

DEMO = Path(__file__).resolve().parents[1] / "src" / "railhazrisk" / "data" / "demo_scenario.toml"


def main():
    ap = argparse.ArgumentParser(description="Monte Carlo convergence check")
    ap.add_argument("--scenario", type=Path, default=DEMO)
    ap.add_argument("--trials", type=int, nargs="+", default=[10_000, 100_000, 1_000_000])
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--coupling", choices=("independent", "shared_block"), default="independent")
    args = ap.parse_args()

    scenario = load_scenario(args.scenario)
    targets = validation_targets(scenario)
    header = f"{'distribution':<44}" + "".join(f"{n:>12}" for n in args.trials)
    print(header)
    for tt, ctx, seg in targets:
        exact = conditional_release(scenario, tt, ctx, seg).released
        row = f"{tt.value}/{ctx}" + (f"/{seg}" if seg else "")
        cells = []
        for n in args.trials:
            t0 = time.perf_counter()
            emp = simulate_release_counts(scenario, ctx, SimConfig(trials=n, seed=args.seed), tt, seg, args.coupling)
            cells.append(f"{tv_distance(emp, exact):12.5f}")
        print(f"{row:<44}" + "".join(cells) + f"   ({time.perf_counter() - t0:.1f} s at {args.trials[-1]})")


if __name__ == "__main__":
    main()

"""Evaluate the shipped demo scenario and write the report plus plot-ready series.

    python3 scripts/run_demo.py [--out results/demo]
"""
import argparse
from pathlib import Path

from railhazrisk.report import demand_total_casualties, report_to_json, report_to_text, write_series
from railhazrisk.scenario import load_scenario

DEMO = Path(__file__).resolve().parents[1] / "src" / "railhazrisk" / "data" / "demo_scenario.toml"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", type=Path, default=DEMO)
    ap.add_argument("--out", type=Path, default=Path("results/demo"))
    ap.add_argument("--times", type=float, nargs="+", default=[4.0, 30.0, 120.0])
    args = ap.parse_args()

    scenario = load_scenario(args.scenario)
    report = demand_total_casualties(scenario, args.times)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "report.json").write_text(report_to_json(report, verbose=True))
    (args.out / "report.txt").write_text(report_to_text(report))
    paths = write_series(report, scenario, args.out / "series")
    print(report_to_text(report))
    print(f"wrote {args.out / 'report.json'}, {args.out / 'report.txt'} and {len(paths)} series files")


if __name__ == "__main__":
    main()

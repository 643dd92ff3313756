"""Command-line front end.

    railhazrisk run --scenario demo.toml [--format machine|table] [--times 4 30 120]
    railhazrisk compare --scenario demo.toml
    railhazrisk validate --scenario demo.toml --trials 1000000 --threshold 0.01
    railhazrisk inspect-tables [--scenario demo.toml]

Exit codes: 0 success, 1 bad input, 2 validation failure (TV above threshold).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import RiskInputError
from .model import DEFAULT_POD, DEFAULT_YARD_SEVERITY, SeverityModel
from .oracle import Conditioning, SimConfig
from .report import (
    DEFAULT_TIMES,
    compare_components,
    compare_to_text,
    demand_total_casualties,
    report_to_json,
    report_to_text,
    write_series,
)
from .scenario import load_scenario
from .tables import load_cause_tables, load_consequence_curves, load_quantity_table, load_rate_tables
from .validation import DEFAULT_THRESHOLD, validate_scenario

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VALIDATION = 2
MAX_RESPONSE_MINUTES = 120.0
RATE_SYMBOLS = {
    "per_million_train_miles": "d_TRM",
    "per_billion_gross_ton_miles": "d_TOM",
    "per_billion_car_miles": "d_CM",
    "per_million_train_ad": "d_ADTR",
    "per_billion_car_ad": "d_ADCA",
    "per_million_cars_processed": "d_YS",
}


def _response_time(text):
    t = float(text)
    if not 0.0 <= t <= MAX_RESPONSE_MINUTES:
        raise argparse.ArgumentTypeError(f"response time {text} not in [0, {MAX_RESPONSE_MINUTES:g}] minutes")
    return t


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="railhazrisk", description="Rail hazmat release risk, unit vs manifest trains.")
    p.add_argument("--verbose", "-v", action="store_true", help="dump intermediate pmfs / debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario_required=True):
        sp.add_argument("--scenario", type=Path, required=scenario_required,
                        help="scenario TOML file (inspect-tables falls back to the shipped tables)")
        sp.add_argument("--output", "-o", type=Path, help="write to this file instead of stdout")
        sp.add_argument("--format", choices=("machine", "table"), default="table")

    run = sub.add_parser("run", help="evaluate expected casualties for every option")
    common(run)
    run.add_argument("--times", type=_response_time, nargs="+", default=list(DEFAULT_TIMES),
                     metavar="MIN", help="response times in minutes, each in [0, 120]")
    run.add_argument("--series-dir", type=Path, help="also write plot-ready CSV series here")

    cmp_ = sub.add_parser("compare", help="side-by-side component deltas, manifest minus unit")
    common(cmp_)
    cmp_.add_argument("--times", type=_response_time, nargs="+", default=list(DEFAULT_TIMES), metavar="MIN")

    val = sub.add_parser("validate", help="Monte Carlo check of the analytic release distributions")
    common(val)
    val.add_argument("--trials", type=int, default=SimConfig.trials)
    val.add_argument("--seed", type=int, default=SimConfig.seed)
    val.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    val.add_argument("--conditioning", choices=[c.value for c in Conditioning],
                     default=Conditioning.GIVEN_DERAILMENT.value)
    val.add_argument("--workers", type=int, default=1)
    val.add_argument("--counts-only", action="store_true", help="skip the gallon-quantity comparisons")

    ins = sub.add_parser("inspect-tables", help="print the loaded rate, cause, quantity and curve tables")
    common(ins, scenario_required=False)
    return p


def _emit(text, output):
    if output is None:
        sys.stdout.write(text)
    else:
        output.parent.mkdir(parents=True, exist_ok=True)
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _json(doc):
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def cmd_run(args):
    scenario = load_scenario(args.scenario)
    report = demand_total_casualties(scenario, args.times)
    if args.format == "machine":
        text = report_to_json(report, verbose=args.verbose)
    else:
        text = report_to_text(report)
    _emit(text, args.output)
    if args.series_dir:
        write_series(report, scenario, args.series_dir)
    return EXIT_OK


def cmd_compare(args):
    scenario = load_scenario(args.scenario)
    doc = compare_components(demand_total_casualties(scenario, args.times))
    _emit(_json(doc) if args.format == "machine" else compare_to_text(doc), args.output)
    return EXIT_OK


def cmd_validate(args):
    scenario = load_scenario(args.scenario)
    cfg = SimConfig(trials=args.trials, seed=args.seed, conditioning=args.conditioning, workers=args.workers)
    result = validate_scenario(scenario, cfg, args.threshold, quantities=not args.counts_only)
    _emit(_json(result.to_dict()) if args.format == "machine" else result.to_text(), args.output)
    return EXIT_OK if result.passed else EXIT_VALIDATION


def tables_doc(scenario=None):
    if scenario is not None:
        rates, causes, curves = scenario.rates, scenario.causes, scenario.curves
        quantity = scenario.release.quantity_table
        severity, pods, yard_sev = scenario.severity, dict(scenario.pods), dict(scenario.yard_severity)
    else:
        rates, causes, curves = load_rate_tables(), load_cause_tables(), load_consequence_curves()
        quantity = load_quantity_table()
        severity, pods, yard_sev = SeverityModel(), dict(DEFAULT_POD), dict(DEFAULT_YARD_SEVERITY)
    return {
        "rates": [{"group": g, "context": c, "metric": m, "symbol": RATE_SYMBOLS[m], "rate": r}
                  for (g, c, m), r in rates.entries],
        "causes": [{"context": r.context, "train_type": r.train_type, "cause_group": r.cause_group,
                    "percent": r.percent, "metric_class": r.metric_class.value} for r in causes.rows],
        "cause_totals": [{"context": c, "train_type": t, "percent": round(causes.select(c, t).total_percent(), 4)}
                         for c, t in causes.partitions()],
        "quantity_table": [{"gallons": g, "probability": float(p)} for g, p in quantity],
        "pod_beta": {k.value: {"alpha": v.alpha, "beta": v.beta} for k, v in pods.items()},
        "severity_z": {
            "mainline": vars(severity.mainline),
            "yard": vars(severity.yard),
            "terminal": vars(severity.terminal),
        },
        "yard_switch_severity": {k.value: {"shape": v.shape, "rate": v.rate, "cap": v.truncation_cap}
                                 for k, v in yard_sev.items()},
        "curves": {
            "anchors_gallons": list(curves.anchors),
            "track_weights": dict(curves.track_weights),
            "wind_weights": dict(curves.wind_weights),
            "series": len(curves.curves),
        },
    }


def tables_to_text(doc):
    out = ["Derailment rates"]
    for r in doc["rates"]:
        out.append(f"  {r['group']:<11} {r['context']:<9} {r['symbol'] + '=' + format(r['rate'], 'g'):<14} "
                   f"({r['metric']})")
    out.append("")
    out.append("Cause tables (percent of derailments)")
    for r in doc["causes"]:
        out.append(f"  {r['context']:<8} {r['train_type']:<9} {r['metric_class']:<12} "
                   f"{r['percent']:6.2f}  {r['cause_group']}")
    for t in doc["cause_totals"]:
        out.append(f"  total {t['context']}/{t['train_type']}: {t['percent']:.2f}")
    out.append("")
    out.append("Release quantity per releasing tank car")
    for r in doc["quantity_table"]:
        out.append(f"  {r['gallons']:>6} gal  {r['probability']:.3f}")
    out.append("")
    out.append("POD Beta parameters")
    for k, v in doc["pod_beta"].items():
        out.append(f"  {k:<17} alpha={v['alpha']:g} beta={v['beta']:g}")
    out.append("")
    out.append("Severity score coefficients")
    for k, v in doc["severity_z"].items():
        out.append(f"  {k:<9} " + " ".join(f"{n}={c:g}" for n, c in v.items()))
    out.append("")
    out.append("Yard switching severity (generalized exponential)")
    for k, v in doc["yard_switch_severity"].items():
        out.append(f"  {k:<5} shape={v['shape']:g} rate={v['rate']:g} cap={v['cap']}")
    out.append("")
    c = doc["curves"]
    out.append(f"Consequence curves: {c['series']} series, anchors {c['anchors_gallons']}")
    out.append(f"  track weights {c['track_weights']}")
    out.append(f"  wind weights  {c['wind_weights']}")
    return "\n".join(out) + "\n"


def cmd_inspect(args):
    scenario = load_scenario(args.scenario) if args.scenario else None
    doc = tables_doc(scenario)
    _emit(_json(doc) if args.format == "machine" else tables_to_text(doc), args.output)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "validate": cmd_validate, "inspect-tables": cmd_inspect}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; that code is reserved for failed validation here
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (RiskInputError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

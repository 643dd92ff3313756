"""End-to-end risk evaluation and report rendering.

``demand_total_casualties`` walks the full event chain for every configured
service option and returns a :class:`RiskReport`. Reports render to a
versioned JSON document (the machine format) or to an aligned text table
carrying the same numbers.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .consequence import expected_casualties, mix_curves, quantile_gallons, total_quantity_pmf
from .derailment import ad_derailment_prob, mainline_derailment_prob, switching_derailment_prob
from .model import RouteSegment, TrainType
from .pipeline import (
    ConditionalRelease,
    ad_conditional,
    mainline_conditional,
    switching_conditional,
)
from .pmf import GALLONS_PER_STEP, DiscretePmf
from .release import per_shipment_mixture, per_shipment_release_pmf

REPORT_SCHEMA = "railhazrisk.report"
REPORT_VERSION = 1
DEFAULT_TIMES = (4.0, 30.0, 120.0)
QUANTILES = (0.5, 0.9, 0.99)


@dataclass(frozen=True, eq=False)
class ComponentResult:
    name: str
    derailment_prob: float
    per_shipment: DiscretePmf
    quantity: DiscretePmf
    tc: dict                                    # response time -> expected casualties per shipment
    conditional: Optional[ConditionalRelease] = None
    segment: Optional[RouteSegment] = None


@dataclass(frozen=True, eq=False)
class OptionResult:
    train_type: TrainType
    shipments: int
    mainline: tuple                 # ComponentResult per segment
    ad: ComponentResult
    switching: Optional[ComponentResult]
    yard: ComponentResult           # terminal (unit) or A/D + switching combined (manifest)
    per_shipment_tc: dict
    demand_tc: dict
    multiply_segment_length: bool = False

    def mainline_tc(self, t):
        return math.fsum(self._segment_weight(c) * c.tc[t] for c in self.mainline)

    def _segment_weight(self, c):
        return c.segment.length_miles if self.multiply_segment_length else 1.0


@dataclass(frozen=True, eq=False)
class RiskReport:
    scenario: str
    times: tuple
    options: dict = field(default_factory=dict)  # TrainType -> OptionResult


def _component(name, prob, conditional, per_shipment, table, casualty_fn, times, segment=None):
    q = total_quantity_pmf(per_shipment, table)
    tc = {t: expected_casualties(q, casualty_fn, t) for t in times}
    return ComponentResult(name, prob, per_shipment, q, tc, conditional, segment)


def evaluate_option(scenario, train_type, times=DEFAULT_TIMES, casualty_fn=None) -> OptionResult:
    train = scenario.train(train_type)
    table = scenario.release.quantity_table
    f = casualty_fn or mix_curves(scenario.curves)

    mainline = []
    for seg in scenario.segments:
        p = mainline_derailment_prob(train, seg, scenario.rates, scenario.causes)
        cond = mainline_conditional(scenario, train, seg)
        mainline.append(_component(f"mainline:{seg.segment_id}", p, cond,
                                   per_shipment_release_pmf(cond.released, p), table, f, times, seg))

    p_ad = ad_derailment_prob(train, scenario.yards, scenario.rates, scenario.causes)
    cond_ad = ad_conditional(scenario, train)
    ad = _component("ad", p_ad, cond_ad, per_shipment_release_pmf(cond_ad.released, p_ad), table, f, times)

    switching = None
    if train.train_type is TrainType.MANIFEST:
        p_sw = switching_derailment_prob(train, scenario.yards, scenario.rates)
        cond_sw = switching_conditional(scenario, train)
        switching = _component("switching", p_sw, cond_sw,
                               per_shipment_release_pmf(cond_sw.released, p_sw), table, f, times)
        yard_pmf = per_shipment_mixture([(cond_ad.released, p_ad), (cond_sw.released, p_sw)])
        yard = _component("yard", p_ad + p_sw, None, yard_pmf, table, f, times)
    else:
        yard = _component("terminal", p_ad, None, ad.per_shipment, table, f, times)

    multiply = scenario.multiply_segment_length
    shipments = scenario.demand.shipments(train.train_type)
    per_ship = {}
    for t in times:
        main = math.fsum((c.segment.length_miles if multiply else 1.0) * c.tc[t] for c in mainline)
        per_ship[t] = main + yard.tc[t]
    demand = {t: per_ship[t] * shipments for t in times}
    return OptionResult(train.train_type, shipments, tuple(mainline), ad, switching, yard,
                        per_ship, demand, multiply)


def demand_total_casualties(scenario, times=DEFAULT_TIMES) -> RiskReport:
    times = tuple(float(t) for t in times)
    f = mix_curves(scenario.curves)
    options = {t.train_type: evaluate_option(scenario, t.train_type, times, f) for t in scenario.trains()}
    return RiskReport(scenario.name, times, options)


# --------------------------------------------------------------------------
# machine format
# --------------------------------------------------------------------------

def _pmf_list(p: DiscretePmf):
    m = p.trimmed().masses
    return [float(v) for v in m]


def _time_key(t):
    return f"{t:g}"


def quantity_summary(q: DiscretePmf):
    g = np.arange(q.masses.size) * GALLONS_PER_STEP
    mean = float(g @ q.masses) + q.overflow * g[-1]
    qs = quantile_gallons(q, QUANTILES)
    return {
        "p_release": q.prob_positive(),
        "mean_gallons": mean,
        "overflow_mass": q.overflow,
        "quantiles_given_release": {f"{p:g}": v for p, v in zip(QUANTILES, qs)},
    }


def _component_doc(c: ComponentResult, verbose=False):
    doc = {"derailment_prob": c.derailment_prob}
    if c.segment is not None:
        doc["segment_id"] = c.segment.segment_id
        doc["length_miles"] = c.segment.length_miles
    if c.conditional is not None:
        doc["release_pmf_given_derailment"] = _pmf_list(c.conditional.released)
    doc["release_pmf_per_shipment"] = _pmf_list(c.per_shipment)
    doc["quantity"] = quantity_summary(c.quantity)
    doc["tc"] = {_time_key(t): v for t, v in c.tc.items()}
    if verbose and c.conditional is not None:
        if c.conditional.derailed is not None:
            doc["tank_derail_pmf_given_derailment"] = _pmf_list(c.conditional.derailed)
        if c.conditional.profile is not None:
            doc["position_derail_prob"] = [float(v) for v in c.conditional.profile.derail_prob]
            doc["position_release_prob"] = [float(v) for v in c.conditional.profile.release_prob]
        doc["quantity_pmf"] = _pmf_list(c.quantity)
    return doc


def option_doc(o: OptionResult, verbose=False):
    return {
        "train_type": o.train_type.value,
        "shipments": o.shipments,
        "multiply_segment_length": o.multiply_segment_length,
        "mainline": [_component_doc(c, verbose) for c in o.mainline],
        "ad": _component_doc(o.ad, verbose),
        "switching": _component_doc(o.switching, verbose) if o.switching else None,
        "yard_total": _component_doc(o.yard, verbose),
        "tc_per_shipment": {_time_key(t): v for t, v in o.per_shipment_tc.items()},
        "tc_per_demand": {_time_key(t): v for t, v in o.demand_tc.items()},
    }


def report_to_dict(r: RiskReport, verbose=False):
    return {
        "schema": REPORT_SCHEMA,
        "schema_version": REPORT_VERSION,
        "scenario": r.scenario,
        "response_times_min": list(r.times),
        "options": {tt.value: option_doc(o, verbose) for tt, o in r.options.items()},
    }


def report_to_json(r: RiskReport, verbose=False) -> str:
    return json.dumps(report_to_dict(r, verbose), indent=2, sort_keys=False) + "\n"


# --------------------------------------------------------------------------
# human format
# --------------------------------------------------------------------------

def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, int):
        return str(v)
    return f"{v:.4e}"


def _rows_to_text(header, rows):
    widths = [max(len(str(r[i])) for r in [header] + rows) for i in range(len(header))]
    line = lambda r: "  ".join(str(c).ljust(w) if i == 0 else str(c).rjust(w)
                               for i, (c, w) in enumerate(zip(r, widths)))
    return "\n".join([line(header), line(["-" * w for w in widths])] + [line(r) for r in rows])


def report_to_text(r: RiskReport) -> str:
    out = [f"Scenario: {r.scenario}", ""]
    tcols = [f"TC({_time_key(t)})" for t in r.times]
    for tt, o in r.options.items():
        out.append(f"== {tt.value} train: {o.shipments} shipment(s) for the demand ==")
        rows = []
        for c in o.mainline:
            rows.append([c.name, _fmt(c.derailment_prob), _fmt(c.per_shipment.prob_positive()),
                         _fmt(quantity_summary(c.quantity)["mean_gallons"])]
                        + [_fmt(c.tc[t]) for t in r.times])
        for c in (o.ad, o.switching):
            if c is not None:
                rows.append([c.name, _fmt(c.derailment_prob), _fmt(c.per_shipment.prob_positive()),
                             _fmt(quantity_summary(c.quantity)["mean_gallons"])]
                            + [_fmt(c.tc[t]) for t in r.times])
        y = o.yard
        rows.append([y.name + " (combined)", _fmt(y.derailment_prob), _fmt(y.per_shipment.prob_positive()),
                     _fmt(quantity_summary(y.quantity)["mean_gallons"])] + [_fmt(y.tc[t]) for t in r.times])
        rows.append(["per shipment", "", "", ""] + [_fmt(o.per_shipment_tc[t]) for t in r.times])
        rows.append(["per demand", "", "", ""] + [_fmt(o.demand_tc[t]) for t in r.times])
        out.append(_rows_to_text(["component", "P(derail)", "P(release)", "E[gallons]"] + tcols, rows))
        out.append("")
    return "\n".join(out)


# --------------------------------------------------------------------------
# unit vs manifest comparison
# --------------------------------------------------------------------------

def compare_components(r: RiskReport):
    """Per-component and total TC for each option, plus manifest minus unit deltas."""
    table = {}
    for tt, o in r.options.items():
        table[tt.value] = {
            _time_key(t): {
                "mainline": o.mainline_tc(t),
                "ad": o.ad.tc[t],
                "switching": o.switching.tc[t] if o.switching else None,
                "per_shipment": o.per_shipment_tc[t],
                "per_demand": o.demand_tc[t],
            }
            for t in r.times
        }
    delta = None
    if len(table) == 2:
        u, m = table[TrainType.UNIT.value], table[TrainType.MANIFEST.value]
        delta = {
            tk: {k: (m[tk][k] or 0.0) - (u[tk][k] or 0.0) for k in m[tk]}
            for tk in m
        }
    return {"schema": "railhazrisk.compare", "schema_version": REPORT_VERSION, "scenario": r.scenario,
            "options": table, "manifest_minus_unit": delta}


def compare_to_text(doc) -> str:
    out = [f"Scenario: {doc['scenario']}"]
    comps = ["mainline", "ad", "switching", "per_shipment", "per_demand"]
    opts = list(doc["options"])
    for tk in next(iter(doc["options"].values())):
        out.append("")
        out.append(f"Response time {tk} min")
        header = ["component"] + opts + (["manifest - unit"] if doc["manifest_minus_unit"] else [])
        rows = []
        for c in comps:
            row = [c] + [_fmt(doc["options"][o][tk][c]) for o in opts]
            if doc["manifest_minus_unit"]:
                row.append(_fmt(doc["manifest_minus_unit"][tk][c]))
            rows.append(row)
        out.append(_rows_to_text(header, rows))
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# plot-ready series
# --------------------------------------------------------------------------

def write_series(r: RiskReport, scenario, directory, time_step=1.0):
    """Write quantity pmfs and TC-vs-t curves as CSV files; returns the paths."""
    import csv
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    f = mix_curves(scenario.curves)
    grid = np.arange(0.0, float(f.times[-1]) + 1e-9, time_step)
    written = []
    for tt, o in r.options.items():
        comps = list(o.mainline) + [o.ad] + ([o.switching] if o.switching else []) + [o.yard]
        qpath = directory / f"quantity_{tt.value.lower()}.csv"
        with open(qpath, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["component", "gallons", "probability"])
            for c in comps:
                for i, p in enumerate(c.quantity.masses):
                    if p > 0:
                        w.writerow([c.name, i * GALLONS_PER_STEP, repr(float(p))])
                if c.quantity.overflow > 0:
                    w.writerow([c.name, "overflow", repr(c.quantity.overflow)])
        tpath = directory / f"tc_vs_time_{tt.value.lower()}.csv"
        with open(tpath, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time_min", "tc_per_shipment", "tc_per_demand"])
            for t in grid:
                main = math.fsum((c.segment.length_miles if o.multiply_segment_length else 1.0)
                                 * expected_casualties(c.quantity, f, t) for c in o.mainline)
                ps = main + expected_casualties(o.yard.quantity, f, t)
                w.writerow([f"{t:g}", repr(ps), repr(ps * o.shipments)])
        written += [qpath, tpath]
    return written

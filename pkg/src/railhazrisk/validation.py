"""Run the Monte Carlo oracle against the analytic distributions of a scenario."""
from __future__ import annotations

from .consequence import total_quantity_pmf
from .model import TrainType
from .oracle import (
    AD,
    MAINLINE,
    SWITCHING,
    ComparisonReport,
    Conditioning,
    SimConfig,
    compare,
    empirical_pmf,
    sample_release_counts,
    simulate_quantity,
)
from .pipeline import conditional_release
from .release import per_shipment_release_pmf
from .derailment import ad_derailment_prob, mainline_derailment_prob, switching_derailment_prob

DEFAULT_THRESHOLD = 0.01


def _derail_prob(scenario, train, context, segment_id):
    if context == MAINLINE:
        seg = next(s for s in scenario.segments if s.segment_id == segment_id)
        return mainline_derailment_prob(train, seg, scenario.rates, scenario.causes)
    if context == AD:
        return ad_derailment_prob(train, scenario.yards, scenario.rates, scenario.causes)
    return switching_derailment_prob(train, scenario.yards, scenario.rates)


def validation_targets(scenario):
    """(train_type, context, segment_id) triples covering every context in the scenario."""
    out = []
    for train in scenario.trains():
        for seg in scenario.segments:
            out.append((train.train_type, MAINLINE, seg.segment_id))
        out.append((train.train_type, AD, None))
        if train.train_type is TrainType.MANIFEST:
            out.append((train.train_type, SWITCHING, None))
    return out


def validate_scenario(scenario, cfg: SimConfig, threshold=DEFAULT_THRESHOLD, targets=None,
                      quantities=True) -> ComparisonReport:
    entries = []
    for train_type, context, segment_id in targets or validation_targets(scenario):
        train = scenario.train(train_type)
        analytic = conditional_release(scenario, train_type, context, segment_id).released
        if cfg.conditioning is Conditioning.PER_SHIPMENT:
            analytic = per_shipment_release_pmf(analytic, _derail_prob(scenario, train, context, segment_id))
        samples = sample_release_counts(scenario, context, cfg, train_type, segment_id)
        name = f"{train_type.value}/{context}" + (f"/{segment_id}" if segment_id else "")
        entries.append(compare(f"{name}/count", empirical_pmf(samples), analytic, cfg.trials))
        if quantities:
            table = scenario.release.quantity_table
            entries.append(compare(f"{name}/gallons", simulate_quantity(samples, table, cfg),
                                   total_quantity_pmf(analytic, table), cfg.trials))
    return ComparisonReport(tuple(entries), threshold)

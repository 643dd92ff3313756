"""Per-shipment train derailment probabilities.

Rates are multiplied out in their linearized rare-event form: a derailment
probability is rate x exposure x cause share, summed over causes. Nothing is
clamped; a product above 1 means the approximation no longer holds and is
reported as :class:`UnphysicalProbability`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NotApplicable, UnphysicalProbability
from .model import (
    CauseTable,
    MetricClass,
    RateTable,
    RouteSegment,
    TrainConfig,
    TrainType,
    YardPlan,
)

PER_MILLION = 1e6
PER_BILLION = 1e9


@dataclass(frozen=True)
class DerailmentProbabilities:
    mainline_per_segment: tuple  # ((segment_id, probability), ...)
    ad_total: float
    switching_total: float

    @property
    def mainline_total(self):
        return math.fsum(p for _, p in self.mainline_per_segment)


def _checked(p, what):
    if p > 1.0:
        raise UnphysicalProbability(f"{what} probability {p:.6g} exceeds 1; exposure too large for the linear rate model")
    return p


def _causes(causes: CauseTable, context, train_type):
    return causes.select(context, train_type).rows


def mainline_components(train: TrainConfig, segment: RouteSegment, rates: RateTable, causes: CauseTable):
    """Per-metric-class partial sums {TrainMiles, TonMiles, CarMiles} for one segment."""
    r = rates.mainline(train.train_type)
    li = segment.length_miles
    exposure = {
        MetricClass.TRAIN_MILES: r.train_miles / PER_MILLION * li,
        MetricClass.TON_MILES: r.ton_miles / PER_BILLION * train.gross_tonnage * li,
        MetricClass.CAR_MILES: r.car_miles / PER_BILLION * train.length_cars * li,
    }
    parts = {mc: [] for mc in exposure}
    for row in _causes(causes, "mainline", train.train_type):
        parts[row.metric_class].append(exposure[row.metric_class] * row.share)
    return {mc: math.fsum(v) for mc, v in parts.items()}


def mainline_derailment_prob(train: TrainConfig, segment: RouteSegment, rates: RateTable, causes: CauseTable) -> float:
    parts = mainline_components(train, segment, rates, causes)
    return _checked(math.fsum(parts.values()), f"mainline segment {segment.segment_id!r}")


def ad_rate_group(train: TrainConfig, plan: YardPlan) -> str:
    if train.train_type is TrainType.UNIT:
        return plan.unit_rate_group
    return plan.manifest_rate_group


def ad_derailment_prob(train: TrainConfig, plan: YardPlan, rates: RateTable, causes: CauseTable) -> float:
    r = rates.yard(ad_rate_group(train, plan))
    n = plan.ad_events
    exposure = {
        MetricClass.TRAIN_EVENTS: r.train_ad / PER_MILLION * n,
        MetricClass.CAR_EVENTS: r.car_ad / PER_BILLION * train.length_cars * n,
    }
    terms = [exposure[row.metric_class] * row.share for row in _causes(causes, "ad", train.train_type)]
    return _checked(math.fsum(terms), "arrival/departure")


def switching_derailment_prob(train: TrainConfig, plan: YardPlan, rates: RateTable) -> float:
    if train.train_type is not TrainType.MANIFEST:
        raise NotApplicable("unit trains bypass classification yards; no switching exposure")
    r = rates.yard(plan.manifest_rate_group)
    if r.cars_processed is None:
        raise NotApplicable(f"rate group {plan.manifest_rate_group!r} has no switching rate")
    p = r.cars_processed / PER_MILLION * train.length_cars * (plan.intermediate_yards + 1)
    return _checked(p, "yard switching")


def derailment_probabilities(train, segments, plan, rates, causes) -> DerailmentProbabilities:
    main = tuple((s.segment_id, mainline_derailment_prob(train, s, rates, causes)) for s in segments)
    ad = ad_derailment_prob(train, plan, rates, causes)
    sw = switching_derailment_prob(train, plan, rates) if train.train_type is TrainType.MANIFEST else 0.0
    return DerailmentProbabilities(main, ad, sw)

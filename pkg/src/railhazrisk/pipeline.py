"""Release-count distributions per incident context for one train in a scenario."""
from __future__ import annotations

from dataclasses import dataclass

from .errors import NotApplicable
from .model import SeverityContext, SwitchCut, TrainType
from .pmf import DiscretePmf
from .release import (
    PositionProfile,
    ad_tank_derail_pmf,
    position_derail_probs,
    release_count_pmf_mainline,
    switch_tank_derail_pmf,
    thin_release_pmf,
)
from .severity import pod_pmf, severity_by_pod

MAINLINE = "MainlineSegment"
AD = "AD"
SWITCHING = "Switching"
CONTEXTS = (MAINLINE, AD, SWITCHING)


@dataclass(frozen=True, eq=False)
class ConditionalRelease:
    """Distributions given that an incident of this context happened."""
    context: str
    derailed: DiscretePmf | None   # tank cars derailed (A/D, switching) or None (mainline)
    released: DiscretePmf          # tank cars releasing
    profile: PositionProfile | None = None


def _mainline_pod_context(train):
    return SeverityContext.MAINLINE_UNIT if train.train_type is TrainType.UNIT else SeverityContext.MAINLINE_MANIFEST


def _ad_contexts(train):
    if train.train_type is TrainType.UNIT:
        return SeverityContext.TERMINAL_UNIT, "terminal"
    return SeverityContext.YARD_MANIFEST, "yard"


def mainline_conditional(scenario, train, segment) -> ConditionalRelease:
    L = train.length_cars
    pod = pod_pmf(scenario.pod_model(_mainline_pod_context(train)), L)
    sev = severity_by_pod("mainline", train, segment, scenario.severity)
    pd = position_derail_probs(pod, sev, L)
    profile = PositionProfile.build(pd, train.consist, scenario.release.cpr)
    return ConditionalRelease(MAINLINE, None, release_count_pmf_mainline(profile, train.consist), profile)


def ad_conditional(scenario, train) -> ConditionalRelease:
    pod_ctx, z_ctx = _ad_contexts(train)
    pod = pod_pmf(scenario.pod_model(pod_ctx), train.length_cars)
    sev = severity_by_pod(z_ctx, train, None, scenario.severity)
    derailed = ad_tank_derail_pmf(pod, sev, train.consist)
    released = thin_release_pmf(derailed, scenario.release.cpr, scenario.release.yard_speed_factor)
    return ConditionalRelease(AD, derailed, released)


def switching_cut(scenario, train) -> SwitchCut:
    if train.train_type is not TrainType.MANIFEST:
        raise NotApplicable("unit trains are not switched in classification yards")
    return SwitchCut(scenario.yards.switching_approach, train.tank_count)


def switching_conditional(scenario, train) -> ConditionalRelease:
    derailed = switch_tank_derail_pmf(switching_cut(scenario, train), scenario.yard_severity_model())
    released = thin_release_pmf(derailed, scenario.release.cpr, scenario.release.yard_speed_factor)
    return ConditionalRelease(SWITCHING, derailed, released)


def conditional_release(scenario, train_type, context, segment_id=None) -> ConditionalRelease:
    """Dispatch by context name; mainline defaults to the first segment."""
    train = scenario.train(train_type)
    if context == MAINLINE:
        seg = scenario.segments[0] if segment_id is None else next(
            s for s in scenario.segments if s.segment_id == segment_id)
        return mainline_conditional(scenario, train, seg)
    if context == AD:
        return ad_conditional(scenario, train)
    if context == SWITCHING:
        return switching_conditional(scenario, train)
    raise ValueError(f"unknown context {context!r}; expected one of {CONTEXTS}")

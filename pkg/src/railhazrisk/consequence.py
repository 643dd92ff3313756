"""Total release quantity and expected casualties.

Quantities live on a 750-gallon lattice up to 150,000 gallons; anything beyond
goes to the overflow bucket, which is charged at the largest curve anchor.
Casualties are piecewise linear in release size between the anchors
(0, 30k, 90k, 150k gallons) and linear in time between curve samples.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import MissingCurve, OutOfRange
from .model import LOCATION_CLASSES, MIXED, WIND_CLASSES, ConsequenceCurveSet
from .pmf import GALLONS_PER_STEP, DiscretePmf, SupportKind

log = logging.getLogger(__name__)

MAX_TRACKED_GALLONS = 150_000
MAX_INDEX = MAX_TRACKED_GALLONS // GALLONS_PER_STEP


def per_car_lattice(table) -> np.ndarray:
    idx = [g // GALLONS_PER_STEP for g, _ in table]
    out = np.zeros(max(idx) + 1)
    for i, (_, p) in zip(idx, table):
        out[i] += p
    return out


def total_quantity_pmf(count_pmf: DiscretePmf, table, max_index: int = MAX_INDEX) -> DiscretePmf:
    """Total gallons released: sum over n of P(n cars) times the n-fold per-car convolution."""
    car = per_car_lattice(table)
    counts = count_pmf.masses
    result = np.zeros(max_index + 1)
    power = np.zeros(max_index + 1)
    power[0] = 1.0
    power_overflow = 0.0
    overflow = 0.0
    for n, w in enumerate(counts):
        if n > 0:
            full = np.convolve(power, car)
            power_overflow += full[max_index + 1:].sum()
            power = full[: max_index + 1]
        if w:
            result += w * power
            overflow += w * power_overflow
    return DiscretePmf(result, SupportKind.GALLON_LATTICE_750, overflow)


def quantile_gallons(q: DiscretePmf, probs, given_release=True):
    """Gallon quantiles; by default of the distribution conditional on a release."""
    m = q.masses.copy()
    if given_release:
        m[0] = 0.0
    total = m.sum() + q.overflow
    if total <= 0:
        return [0 for _ in probs]
    cdf = np.cumsum(m) / total
    out = []
    for p in probs:
        i = int(np.searchsorted(cdf, p - 1e-12))
        out.append(i * GALLONS_PER_STEP if i < m.size else None)  # None: quantile in overflow
    return out


@dataclass(frozen=True, eq=False)
class CasualtyFunction:
    """C(x, t): casualties for release x gallons at response time t minutes."""
    anchors: tuple        # release sizes in gallons, first entry 0
    times: np.ndarray     # common time grid
    values: np.ndarray    # shape (len(anchors), len(times)); row 0 is all zeros

    def at_time(self, t: float) -> np.ndarray:
        if not self.times[0] <= t <= self.times[-1]:
            raise OutOfRange(f"response time {t:g} min outside [{self.times[0]:g}, {self.times[-1]:g}]")
        return np.array([np.interp(t, self.times, row) for row in self.values])

    @property
    def max_anchor(self):
        return self.anchors[-1]


def _interp_curve(times, values, grid):
    return np.interp(grid, np.asarray(times, float), np.asarray(values, float))


def mix_curves(curve_set: ConsequenceCurveSet) -> CasualtyFunction:
    curves = curve_set.as_dict()
    anchors = tuple(curve_set.anchors)
    grid = np.array(sorted({t for times, _ in curves.values() for t in times}), dtype=float)
    rows = [np.zeros(grid.size)]
    if curve_set.is_premixed:
        for a in anchors:
            rows.append(_interp_curve(*curves[(MIXED, MIXED, a)], grid))
    else:
        track = dict(curve_set.track_weights)
        wind = dict(curve_set.wind_weights)
        for a in anchors:
            acc = np.zeros(grid.size)
            for loc in LOCATION_CLASSES:
                for w in WIND_CLASSES:
                    key = (loc, w, a)
                    if key not in curves:
                        raise MissingCurve(f"no curve for location={loc} wind={w} anchor={a}")
                    acc += track.get(loc, 0.0) * wind.get(w, 0.0) * _interp_curve(*curves[key], grid)
            rows.append(acc)
    return CasualtyFunction((0,) + anchors, grid, np.vstack(rows))


def casualties_at(f: CasualtyFunction, x: float, t: float, clamp: bool = False) -> float:
    """Casualties for x gallons at time t.

    Sizes above the largest anchor raise OutOfRange, or with ``clamp=True``
    are charged at that anchor after a logged warning.
    """
    if x < 0:
        raise OutOfRange(f"release of {x:g} gallons is negative")
    if x > f.max_anchor:
        if not clamp:
            raise OutOfRange(f"release of {x:g} gallons exceeds the largest curve anchor {f.max_anchor}")
        log.warning("release of %g gallons evaluated at the %d-gallon anchor", x, f.max_anchor)
        x = f.max_anchor
    return float(np.interp(x, f.anchors, f.at_time(t)))


def expected_casualties(q: DiscretePmf, f: CasualtyFunction, t: float) -> float:
    """Sum of P(x) * C(x, t) over released quantities 0 < x <= max anchor, plus overflow at the max anchor."""
    at_t = f.at_time(t)
    g = np.arange(q.masses.size) * GALLONS_PER_STEP
    inside = (g > 0) & (g <= f.max_anchor)
    c = np.interp(g[inside], f.anchors, at_t)
    beyond = q.masses[g > f.max_anchor].sum() + q.overflow
    return float(q.masses[inside] @ c + beyond * at_t[-1])

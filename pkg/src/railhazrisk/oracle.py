"""Monte Carlo simulator of the event chain, used as an independent check.

The simulator re-derives everything it needs from the raw parameters (rates,
Beta and logistic coefficients, yard severity family, release table) and
imports none of the analytic modules. It draws the POD or first derailed car,
the number of cars derailed, the derailed block, and the Bernoulli release of
each tank car in it.

Mainline counts follow the analytic model's independence assumption: each
tank position gets its own (POD, severity) draw, so positions derail
independently with the right marginal. ``coupling="shared_block"`` instead
uses one block per trial, which is the physical picture and shows how much
that assumption matters.

Reproducibility: trials are cut into fixed-size chunks; chunk i draws from
``SeedSequence(seed).spawn(n_chunks)[i]`` through PCG64. Results do not depend
on how chunks are spread over worker processes.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NotApplicable, SupportMismatch
from .model import (
    SWITCH_BUFFER_CARS,
    MetricClass,
    SeverityContext,
    SwitchingApproach,
    TrainType,
)
from .pmf import DiscretePmf, SupportKind

MAINLINE = "MainlineSegment"
AD = "AD"
SWITCHING = "Switching"
QUANTITY_MAX_INDEX = 200  # 150,000 gallons on the 750-gallon lattice


class Conditioning(str, enum.Enum):
    PER_SHIPMENT = "PerShipment"
    GIVEN_DERAILMENT = "GivenDerailment"


@dataclass(frozen=True)
class SimConfig:
    trials: int = 1_000_000
    seed: int = 20240601
    conditioning: Conditioning = Conditioning.GIVEN_DERAILMENT
    chunk_size: int = 20_000
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")
        object.__setattr__(self, "conditioning", Conditioning(self.conditioning))

    def chunks(self):
        n = -(-self.trials // self.chunk_size)
        children = np.random.SeedSequence(self.seed).spawn(n)
        sizes = [self.chunk_size] * (n - 1) + [self.trials - self.chunk_size * (n - 1)]
        return list(zip(sizes, children))


# --------------------------------------------------------------------------
# samplers (plain numbers only, so they pickle cheaply)
# --------------------------------------------------------------------------

def _logistic(z):
    return 1.0 / (1.0 + np.exp(-z))


def _draw_pod(rng, alpha, beta, L, size):
    u = rng.beta(alpha, beta, size)
    return np.clip(np.ceil(u * L).astype(np.int64), 1, L)


def _draw_truncated_geometric(rng, stop_prob, L_r):
    """Inverse-CDF draw of x in 1..L_r with P(x) proportional to p (1-p)^(x-1)."""
    stop_prob = np.broadcast_to(stop_prob, np.shape(L_r))
    u = rng.random(np.shape(L_r))
    with np.errstate(divide="ignore", invalid="ignore"):
        log_cont = np.log1p(-stop_prob)
        reach = -np.expm1(L_r * log_cont)       # P(x <= L_r) before truncation
        x = np.ceil(np.log1p(-u * reach) / log_cont)
    x = np.where(stop_prob >= 1.0, 1, x)        # a certain stop derails one car
    return np.clip(x, 1, L_r).astype(np.int64)


@dataclass(frozen=True)
class _MainlineSampler:
    L: int
    alpha: float
    beta: float
    z_base: float                # everything in the mainline score except the L_r term
    z_lr: float
    cpr: float
    tank_positions: tuple
    derail_prob: float           # used only for per-shipment conditioning
    coupling: str = "independent"

    def counts(self, rng, n):
        if self.coupling == "independent":
            j = np.asarray(self.tank_positions, dtype=np.int64)
            k = _draw_pod(rng, self.alpha, self.beta, self.L, (n, j.size))
            L_r = self.L - k + 1
            x = _draw_truncated_geometric(rng, _logistic(self.z_base + self.z_lr * L_r), L_r)
            derailed = (k <= j) & (k + x - 1 >= j)
            released = derailed & (rng.random((n, j.size)) < self.cpr)
            return released.sum(axis=1)
        k = _draw_pod(rng, self.alpha, self.beta, self.L, n)
        L_r = self.L - k + 1
        x = _draw_truncated_geometric(rng, _logistic(self.z_base + self.z_lr * L_r), L_r)
        tanks = _tanks_in_block(self.tank_positions, self.L, k, k + x - 1)
        return rng.binomial(tanks, self.cpr)


def _tanks_in_block(tank_positions, L, first, last):
    flags = np.zeros(L + 1, dtype=np.int64)
    flags[list(tank_positions)] = 1
    running = np.cumsum(flags)
    return running[np.minimum(last, L)] - running[first - 1]


@dataclass(frozen=True)
class _AdSampler:
    L: int
    alpha: float
    beta: float
    stop_prob: float
    release_prob: float
    tank_positions: tuple
    derail_prob: float

    def counts(self, rng, n):
        k = _draw_pod(rng, self.alpha, self.beta, self.L, n)
        x = _draw_truncated_geometric(rng, self.stop_prob, self.L - k + 1)
        tanks = _tanks_in_block(self.tank_positions, self.L, k, k + x - 1)
        return rng.binomial(tanks, self.release_prob)


@dataclass(frozen=True)
class _SwitchSampler:
    tank_count: int
    buffer_cars: int
    severity_values: tuple       # support of the untruncated yard severity
    severity_probs: tuple
    cap: int
    release_prob: float
    derail_prob: float

    def counts(self, rng, n):
        tcc = self.tank_count + self.buffer_cars
        k = rng.integers(1, tcc + 1, n)
        x = rng.choice(np.asarray(self.severity_values), size=n, p=np.asarray(self.severity_probs))
        x = np.minimum(x, np.minimum(self.cap, tcc - k + 1))
        last = k + x - 1
        first_tank = self.buffer_cars + 1
        tanks = np.clip(last - np.maximum(k, first_tank) + 1, 0, None)
        return rng.binomial(tanks, self.release_prob)


def _yard_severity_support(model):
    if model.masses is not None:
        probs = np.asarray(model.masses, dtype=float)
        values = np.arange(1, probs.size + 1)
    else:
        # generalized exponential density at the integers, renormalized
        n = model.truncation_cap + int(math.ceil(42.0 / model.rate)) + 1
        values = np.arange(1, n + 1)
        e = np.exp(-model.rate * values)
        dens = model.shape * model.rate * e * (1.0 - e) ** (model.shape - 1.0)
        probs = dens / dens.sum()
    probs = probs / probs.sum()
    return tuple(int(v) for v in values), tuple(float(p) for p in probs)


# --------------------------------------------------------------------------
# derailment probabilities, recomputed from the rate tables
# --------------------------------------------------------------------------

def _cause_shares(causes, context, train_type):
    shares = {}
    for row in causes.rows:
        if row.context == context and row.train_type == train_type:
            shares[row.metric_class] = shares.get(row.metric_class, 0.0) + row.percent / 100.0
    return shares


def _mainline_derail_prob(scenario, train, segment):
    r = scenario.rates.mainline(train.train_type)
    s = _cause_shares(scenario.causes, "mainline", train.train_type.value)
    miles = segment.length_miles
    return (r.train_miles * 1e-6 * miles * s.get(MetricClass.TRAIN_MILES, 0.0)
            + r.ton_miles * 1e-9 * train.gross_tonnage * miles * s.get(MetricClass.TON_MILES, 0.0)
            + r.car_miles * 1e-9 * train.length_cars * miles * s.get(MetricClass.CAR_MILES, 0.0))


def _ad_group(scenario, train):
    if train.train_type is TrainType.UNIT:
        return scenario.yards.unit_rate_group
    return {"All": "Manifest", "Flat": "FlatYard", "Hump": "HumpYard"}[scenario.yards.yard_type.value]


def _ad_derail_prob(scenario, train):
    r = scenario.rates.yard(_ad_group(scenario, train))
    s = _cause_shares(scenario.causes, "ad", train.train_type.value)
    events = 2 * scenario.yards.intermediate_yards + 2
    return (r.train_ad * 1e-6 * events * s.get(MetricClass.TRAIN_EVENTS, 0.0)
            + r.car_ad * 1e-9 * train.length_cars * events * s.get(MetricClass.CAR_EVENTS, 0.0))


def _switch_derail_prob(scenario, train):
    r = scenario.rates.yard(_ad_group(scenario, train))
    return r.cars_processed * 1e-6 * train.length_cars * (scenario.yards.intermediate_yards + 1)


# --------------------------------------------------------------------------
# public API
# --------------------------------------------------------------------------

def build_sampler(scenario, context, train_type=None, segment_id=None, coupling="independent"):
    if train_type is None:
        train_type = TrainType.MANIFEST if context == SWITCHING else TrainType.UNIT
    train = scenario.train(train_type)
    pods = dict(scenario.pods)
    cpr = scenario.release.cpr
    yard_release = scenario.release.yard_speed_factor * cpr
    is_unit = train.train_type is TrainType.UNIT
    if context == MAINLINE:
        seg = scenario.segments[0] if segment_id is None else next(
            s for s in scenario.segments if s.segment_id == segment_id)
        c = scenario.severity.mainline
        pod = pods[SeverityContext.MAINLINE_UNIT if is_unit else SeverityContext.MAINLINE_MANIFEST]
        loaded_unit = 1 if is_unit and train.loaded else 0
        empty_unit = 1 if is_unit and not train.loaded else 0
        gt = train.avg_gross_tons_per_car or train.gross_tonnage / train.length_cars
        z_base = (c.intercept + c.ds * seg.derailment_speed_mph + c.gt * gt
                  + c.eut * empty_unit + c.lut * loaded_unit)
        if coupling not in ("independent", "shared_block"):
            raise ValueError(f"unknown coupling {coupling!r}")
        return _MainlineSampler(train.length_cars, pod.alpha, pod.beta, z_base, c.lr, cpr,
                                train.tank_positions, _mainline_derail_prob(scenario, train, seg), coupling)
    if context == AD:
        if is_unit:
            pod, lz = pods[SeverityContext.TERMINAL_UNIT], scenario.severity.terminal
        else:
            pod, lz = pods[SeverityContext.YARD_MANIFEST], scenario.severity.yard
        stop = float(_logistic(lz.intercept + lz.l * train.length_cars))
        return _AdSampler(train.length_cars, pod.alpha, pod.beta, stop, yard_release,
                          train.tank_positions, _ad_derail_prob(scenario, train))
    if context == SWITCHING:
        if is_unit:
            raise NotApplicable("unit trains are not switched in classification yards")
        model = dict(scenario.yard_severity)[scenario.yards.yard_type]
        values, probs = _yard_severity_support(model)
        en_masse = scenario.yards.switching_approach is SwitchingApproach.SWITCHED_EN_MASSE
        return _SwitchSampler(train.tank_count, SWITCH_BUFFER_CARS if en_masse else 0, values, probs,
                              model.truncation_cap, yard_release, _switch_derail_prob(scenario, train))
    raise ValueError(f"unknown context {context!r}")


def _sample_chunk(sampler, n, seed_seq, conditioning):
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    if conditioning is Conditioning.PER_SHIPMENT:
        hit = rng.random(n) < sampler.derail_prob
        out = np.zeros(n, dtype=np.int64)
        m = int(hit.sum())
        if m:
            out[hit] = sampler.counts(rng, m)
        return out
    return np.asarray(sampler.counts(rng, n), dtype=np.int64)


def sample_release_counts(scenario, context, cfg: SimConfig, train_type=None, segment_id=None,
                          coupling="independent") -> np.ndarray:
    """Raw per-trial counts of tank cars releasing."""
    sampler = build_sampler(scenario, context, train_type, segment_id, coupling)
    jobs = cfg.chunks()
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(_sample_chunk, [sampler] * len(jobs), [n for n, _ in jobs],
                                  [s for _, s in jobs], [cfg.conditioning] * len(jobs)))
    else:
        parts = [_sample_chunk(sampler, n, s, cfg.conditioning) for n, s in jobs]
    return np.concatenate(parts)


def empirical_pmf(samples, kind=SupportKind.COUNT, max_index=None) -> DiscretePmf:
    samples = np.asarray(samples, dtype=np.int64)
    n = samples.size
    overflow = 0.0
    if max_index is not None:
        inside = samples[samples <= max_index]
        overflow = (n - inside.size) / n
        samples = inside
    counts = np.bincount(samples, minlength=(max_index or 0) + 1)
    return DiscretePmf(counts / n, kind, overflow)


def simulate_release_counts(scenario, context, cfg: SimConfig, train_type=None, segment_id=None,
                            coupling="independent") -> DiscretePmf:
    return empirical_pmf(sample_release_counts(scenario, context, cfg, train_type, segment_id, coupling))


def simulate_quantity(count_samples, table, cfg: SimConfig) -> DiscretePmf:
    """Total released gallons per trial, each releasing car drawing its own loss from ``table``."""
    counts = np.asarray(count_samples, dtype=np.int64)
    steps = np.array([g // 750 for g, _ in table], dtype=np.int64)
    probs = np.array([p for _, p in table], dtype=float)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, 750])))
    draws = rng.choice(steps, size=int(counts.sum()), p=probs / probs.sum())
    owner = np.repeat(np.arange(counts.size), counts)
    totals = np.bincount(owner, weights=draws, minlength=counts.size).astype(np.int64)
    return empirical_pmf(totals, SupportKind.GALLON_LATTICE_750, QUANTITY_MAX_INDEX)


def tv_distance(a: DiscretePmf, b: DiscretePmf) -> float:
    """Half the L1 distance over the union support; overflow buckets count as one atom."""
    if a.kind != b.kind:
        raise SupportMismatch(f"{a.kind.value} vs {b.kind.value}")
    n = max(len(a), len(b))
    pa = np.zeros(n)
    pb = np.zeros(n)
    pa[: len(a)] = a.masses
    pb[: len(b)] = b.masses
    return float(min(1.0, 0.5 * (np.abs(pa - pb).sum() + abs(a.overflow - b.overflow))))


def _moments(p: DiscretePmf):
    idx = np.arange(len(p))
    mean = float(idx @ p.masses)
    return mean, float(((idx - mean) ** 2) @ p.masses)


@dataclass(frozen=True)
class ComparisonEntry:
    name: str
    tv: float
    empirical_mean: float
    analytic_mean: float
    empirical_var: float
    analytic_var: float
    trials: int


@dataclass(frozen=True)
class ComparisonReport:
    entries: tuple = field(default_factory=tuple)
    threshold: float = 0.01

    @property
    def passed(self):
        return all(e.tv <= self.threshold for e in self.entries)

    def max_tv(self):
        return max((e.tv for e in self.entries), default=0.0)

    def to_dict(self):
        return {
            "schema": "railhazrisk.validate", "schema_version": 1,
            "threshold": self.threshold, "passed": self.passed,
            "entries": [e.__dict__ for e in self.entries],
        }

    def to_text(self):
        w = max((len(e.name) for e in self.entries), default=4)
        lines = [f"{'distribution'.ljust(w)}  {'TV':>9}  {'mean(MC)':>10}  {'mean(exact)':>11}  "
                 f"{'var(MC)':>10}  {'var(exact)':>10}  result"]
        for e in self.entries:
            ok = "pass" if e.tv <= self.threshold else "FAIL"
            lines.append(f"{e.name.ljust(w)}  {e.tv:9.5f}  {e.empirical_mean:10.5f}  {e.analytic_mean:11.5f}  "
                         f"{e.empirical_var:10.5f}  {e.analytic_var:10.5f}  {ok}")
        lines.append(f"threshold {self.threshold:g}: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


def compare(name, empirical: DiscretePmf, analytic: DiscretePmf, trials) -> ComparisonEntry:
    em, ev = _moments(empirical)
    am, av = _moments(analytic)
    return ComparisonEntry(name, tv_distance(empirical, analytic), em, am, ev, av, trials)

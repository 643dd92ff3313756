"""Domain types shared by every stage of the risk pipeline.

All types are frozen dataclasses holding tuples rather than arrays, so loaded
scenarios compare by value and can be shared across threads.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from decimal import Decimal
from typing import Optional

from .errors import ValidationError

GALLON_STEP = 750
SWITCH_BUFFER_CARS = 19
YARD_SEVERITY_CAP = 20
MAX_SWITCH_BLOCK = 20


class TrainType(str, enum.Enum):
    UNIT = "Unit"
    MANIFEST = "Manifest"


class YardType(str, enum.Enum):
    ALL = "All"
    FLAT = "Flat"
    HUMP = "Hump"


class SwitchingApproach(str, enum.Enum):
    SWITCHED_ALONE = "SwitchedAlone"
    SWITCHED_EN_MASSE = "SwitchedEnMasse"


class MetricClass(str, enum.Enum):
    TRAIN_MILES = "TrainMiles"
    TON_MILES = "TonMiles"
    CAR_MILES = "CarMiles"
    TRAIN_EVENTS = "TrainEvents"
    CAR_EVENTS = "CarEvents"


MAINLINE_CLASSES = (MetricClass.TRAIN_MILES, MetricClass.TON_MILES, MetricClass.CAR_MILES)
AD_CLASSES = (MetricClass.TRAIN_EVENTS, MetricClass.CAR_EVENTS)


class SeverityContext(str, enum.Enum):
    MAINLINE_UNIT = "MainlineUnit"
    MAINLINE_MANIFEST = "MainlineManifest"
    YARD_MANIFEST = "YardManifest"
    TERMINAL_UNIT = "TerminalUnit"


def _fail(path, msg):
    raise ValidationError(path, msg)


# --------------------------------------------------------------------------
# trains, route, yards
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    train_type: TrainType
    length_cars: int
    gross_tonnage: float
    consist: tuple  # tuple[bool, ...], True = tank car at that position (1-based j -> index j-1)
    loaded: bool = True
    avg_gross_tons_per_car: Optional[float] = None

    @property
    def tank_count(self) -> int:
        return sum(1 for c in self.consist if c)

    @property
    def gt(self) -> float:
        """Average gross tons per car; defaults to GW / L."""
        if self.avg_gross_tons_per_car is not None:
            return self.avg_gross_tons_per_car
        return self.gross_tonnage / self.length_cars

    @property
    def lut(self) -> int:
        return int(self.train_type is TrainType.UNIT and self.loaded)

    @property
    def eut(self) -> int:
        return int(self.train_type is TrainType.UNIT and not self.loaded)

    @property
    def tank_positions(self):
        """1-based positions of the tank cars."""
        return tuple(j + 1 for j, c in enumerate(self.consist) if c)

    def validate(self, path="train"):
        if not isinstance(self.length_cars, int) or self.length_cars < 1:
            _fail(f"{path}.length_cars", f"must be a positive integer, got {self.length_cars!r}")
        if not self.gross_tonnage > 0:
            _fail(f"{path}.gross_tonnage", "must be positive")
        if self.avg_gross_tons_per_car is not None and not self.avg_gross_tons_per_car > 0:
            _fail(f"{path}.avg_gross_tons_per_car", "must be positive")
        if len(self.consist) != self.length_cars:
            _fail(f"{path}.consist",
                  f"length {len(self.consist)} does not match length_cars {self.length_cars}")
        return self


def consist_from_block(length, start, count):
    """Consist with a single contiguous block of ``count`` tank cars at 1-based ``start``."""
    if count < 0 or start < 1 or start + count - 1 > length:
        raise ValidationError("consist", f"tank block [{start}, {start + count - 1}] outside 1..{length}")
    return tuple(start <= j < start + count for j in range(1, length + 1))


def consist_to_string(consist):
    return "".join("T" if c else "N" for c in consist)


def consist_from_string(text, path="consist"):
    cleaned = "".join(text.split()).upper()
    bad = set(cleaned) - {"T", "N"}
    if bad:
        raise ValidationError(path, f"unexpected characters {sorted(bad)}; use T (tank) and N (non-tank)")
    return tuple(ch == "T" for ch in cleaned)


@dataclass(frozen=True)
class RouteSegment:
    segment_id: str
    length_miles: float
    derailment_speed_mph: float

    def validate(self, path="segment"):
        if not self.length_miles > 0:
            _fail(f"{path}.length_miles", "must be positive")
        if not self.derailment_speed_mph > 0:
            _fail(f"{path}.derailment_speed_mph", "must be positive")
        return self


@dataclass(frozen=True)
class YardPlan:
    intermediate_yards: int = 0
    yard_type: YardType = YardType.ALL
    switching_approach: SwitchingApproach = SwitchingApproach.SWITCHED_EN_MASSE
    # rate-table row for unit-train terminal A/D ("Unit" or "LoadedUnit")
    unit_rate_group: str = "Unit"

    @property
    def ad_events(self) -> int:
        return 2 + 2 * self.intermediate_yards

    @property
    def manifest_rate_group(self) -> str:
        return {YardType.ALL: "Manifest", YardType.FLAT: "FlatYard", YardType.HUMP: "HumpYard"}[self.yard_type]

    def validate(self, path="yards"):
        if not isinstance(self.intermediate_yards, int) or self.intermediate_yards < 0:
            _fail(f"{path}.intermediate_yards", "must be a non-negative integer")
        if self.unit_rate_group not in ("Unit", "LoadedUnit"):
            _fail(f"{path}.unit_rate_group", "must be 'Unit' or 'LoadedUnit'")
        return self


# --------------------------------------------------------------------------
# rate and cause tables
# --------------------------------------------------------------------------

MAINLINE_METRICS = ("per_million_train_miles", "per_billion_gross_ton_miles", "per_billion_car_miles")
YARD_METRICS = ("per_million_train_ad", "per_billion_car_ad", "per_million_cars_processed")


@dataclass(frozen=True)
class MainlineRates:
    train_miles: float   # per million train-miles
    ton_miles: float     # per billion gross ton-miles
    car_miles: float     # per billion car-miles


@dataclass(frozen=True)
class YardRates:
    train_ad: float                  # per million train A/D events
    car_ad: float                    # per billion car A/D events
    cars_processed: Optional[float]  # per million cars processed; None for unit trains


@dataclass(frozen=True)
class RateTable:
    # ((group, context, metric), rate) pairs, group is Unit/Manifest/FlatYard/HumpYard/LoadedUnit
    entries: tuple

    def _lookup(self, group, context, metric):
        for key, rate in self.entries:
            if key == (group, context, metric):
                return rate
        return None

    def mainline(self, train_type) -> MainlineRates:
        group = TrainType(train_type).value
        vals = [self._lookup(group, "mainline", m) for m in MAINLINE_METRICS]
        if any(v is None for v in vals):
            raise ValidationError(f"rates.{group}.mainline", "missing mainline rate")
        return MainlineRates(*vals)

    def yard(self, group) -> YardRates:
        train_ad = self._lookup(group, "yard", "per_million_train_ad")
        car_ad = self._lookup(group, "yard", "per_billion_car_ad")
        if train_ad is None or car_ad is None:
            raise ValidationError(f"rates.{group}.yard", "missing A/D rate")
        return YardRates(train_ad, car_ad, self._lookup(group, "yard", "per_million_cars_processed"))

    def groups(self):
        return sorted({k[0] for k, _ in self.entries})


@dataclass(frozen=True)
class CauseRow:
    context: str         # "mainline" or "ad"
    train_type: str      # "Unit" or "Manifest"
    cause_group: str
    percent: float
    metric_class: MetricClass

    @property
    def share(self) -> float:
        return self.percent / 100.0


@dataclass(frozen=True)
class CauseTable:
    rows: tuple

    def select(self, context, train_type) -> "CauseTable":
        tt = TrainType(train_type).value
        return CauseTable(tuple(r for r in self.rows if r.context == context and r.train_type == tt))

    def total_percent(self) -> float:
        return math.fsum(r.percent for r in self.rows)

    def percent_by_class(self):
        out = {}
        for r in self.rows:
            out[r.metric_class] = out.get(r.metric_class, 0.0) + r.percent
        return out

    def share_by_class(self, metric_class) -> float:
        return math.fsum(r.share for r in self.rows if r.metric_class is metric_class)

    def partitions(self):
        return sorted({(r.context, r.train_type) for r in self.rows})


# --------------------------------------------------------------------------
# release and consequence inputs
# --------------------------------------------------------------------------

DEFAULT_QUANTITY_TABLE = ((750, "0.336"), (3750, "0.095"), (10500, "0.133"), (19500, "0.123"), (27000, "0.313"))


@dataclass(frozen=True)
class ReleaseConfig:
    cpr: float
    yard_speed_factor: float = 0.35
    # ((gallons, probability), ...); probabilities kept as given text/float
    quantity_table: tuple = tuple((g, float(p)) for g, p in DEFAULT_QUANTITY_TABLE)

    def validate(self, path="release"):
        if not 0.0 <= self.cpr <= 1.0:
            _fail(f"{path}.cpr", "must lie in [0, 1]")
        if not 0.0 <= self.yard_speed_factor <= 1.0:
            _fail(f"{path}.yard_speed_factor", "must lie in [0, 1]")
        check_quantity_table(self.quantity_table, f"{path}.quantity_table")
        return self


def check_quantity_table(table, path="quantity_table"):
    if len(table) == 0:
        _fail(path, "empty")
    for g, p in table:
        if int(g) != g or g <= 0 or g % GALLON_STEP:
            _fail(path, f"lading loss {g!r} is not a positive multiple of {GALLON_STEP} gallons")
        if not 0.0 <= float(p) <= 1.0:
            _fail(path, f"probability {p!r} outside [0, 1]")
    # decimal sum on the shortest repr so 0.336 + ... + 0.313 is exactly 1
    total = sum(Decimal(repr(float(p))) for _, p in table)
    if total != Decimal(1):
        _fail(path, f"probabilities sum to {total}, expected exactly 1")


LOCATION_CLASSES = ("Urban", "Suburban", "Rural")
WIND_CLASSES = ("Low", "Medium", "High")
MIXED = "Mixed"
DEFAULT_ANCHORS = (30000, 90000, 150000)
DEFAULT_TRACK_WEIGHTS = (("Urban", 0.01), ("Suburban", 0.04), ("Rural", 0.95))
DEFAULT_WIND_WEIGHTS = (("Low", 0.50), ("Medium", 0.49), ("High", 0.01))


@dataclass(frozen=True)
class ConsequenceCurveSet:
    # ((location, wind, anchor_gallons), (times, casualties)) pairs
    curves: tuple
    anchors: tuple = DEFAULT_ANCHORS
    track_weights: tuple = DEFAULT_TRACK_WEIGHTS
    wind_weights: tuple = DEFAULT_WIND_WEIGHTS
    nearby_minutes: float = 4.0
    hazard_zone_minutes: float = 120.0

    def as_dict(self):
        return {k: v for k, v in self.curves}

    @property
    def is_premixed(self):
        return all(loc == MIXED and wind == MIXED for (loc, wind, _), _ in self.curves)

    def validate(self, path="curves"):
        for name, weights in (("track_weights", self.track_weights), ("wind_weights", self.wind_weights)):
            s = math.fsum(w for _, w in weights)
            if abs(s - 1.0) > 1e-9:
                _fail(f"{path}.{name}", f"weights sum to {s}, expected 1")
        for (loc, wind, anchor), (times, values) in self.curves:
            where = f"{path}[{loc},{wind},{anchor}]"
            if len(times) != len(values) or len(times) == 0:
                _fail(where, "empty or ragged curve")
            if list(times) != sorted(set(times)):
                _fail(where, "time samples must be strictly increasing")
            if min(values) < 0:
                _fail(where, "casualties must be non-negative")
            landmarks = {0.0, float(self.nearby_minutes), float(self.hazard_zone_minutes)}
            if not landmarks <= {float(t) for t in times}:
                _fail(where, f"curve must sample t = {sorted(landmarks)} minutes")
        return self


@dataclass(frozen=True)
class Demand:
    tank_cars_required: int
    unit_capacity: int
    manifest_capacity: int

    def shipments(self, train_type) -> int:
        cap = self.unit_capacity if TrainType(train_type) is TrainType.UNIT else self.manifest_capacity
        return -(-self.tank_cars_required // cap)

    def validate(self, path="demand"):
        for name in ("tank_cars_required", "unit_capacity", "manifest_capacity"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                _fail(f"{path}.{name}", "must be a positive integer")
        return self


# --------------------------------------------------------------------------
# severity model parameters
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PodModel:
    """Beta law of the normalized point of derailment."""
    alpha: float
    beta: float

    def validate(self, path="pod"):
        if not (self.alpha > 0 and self.beta > 0):
            _fail(path, "Beta parameters must be positive")
        return self


DEFAULT_POD = {
    SeverityContext.MAINLINE_UNIT: PodModel(0.7549, 0.9582),
    SeverityContext.MAINLINE_MANIFEST: PodModel(0.7842, 1.1002),
    SeverityContext.YARD_MANIFEST: PodModel(0.5350, 0.9121),
    SeverityContext.TERMINAL_UNIT: PodModel(0.7729, 0.9034),
}


@dataclass(frozen=True)
class MainlineZ:
    intercept: float = -0.952
    ds: float = -0.0306
    lr: float = -0.0018
    gt: float = -0.00239
    eut: float = 0.119
    lut: float = -0.339


@dataclass(frozen=True)
class LengthZ:
    intercept: float
    l: float


@dataclass(frozen=True)
class SeverityModel:
    mainline: MainlineZ = MainlineZ()
    yard: LengthZ = LengthZ(-1.595, -0.0029)
    terminal: LengthZ = LengthZ(-1.574, -0.0016)


@dataclass(frozen=True)
class YardSeverityModel:
    """Discretized generalized-exponential severity for yard switching.

    ``masses`` replaces the parametric family with an explicit pmf over
    x = 1, 2, ... (used for sensitivity runs and tests).
    """
    shape: float = 1.0
    rate: float = 1.0
    truncation_cap: int = YARD_SEVERITY_CAP
    masses: Optional[tuple] = None

    def validate(self, path="severity.yard"):
        if self.masses is None:
            if not (self.shape > 0 and self.rate > 0):
                _fail(path, "shape and rate must be positive")
        else:
            if any(m < 0 for m in self.masses) or abs(math.fsum(self.masses) - 1.0) > 1e-9:
                _fail(f"{path}.masses", "explicit pmf must be non-negative and sum to 1")
        if self.truncation_cap < 1:
            _fail(f"{path}.truncation_cap", "must be >= 1")
        return self


DEFAULT_YARD_SEVERITY = {
    YardType.ALL: YardSeverityModel(shape=1.44, rate=1.1),
    YardType.FLAT: YardSeverityModel(shape=1.01, rate=1.68),
    YardType.HUMP: YardSeverityModel(shape=1.0, rate=3.12),
}


@dataclass(frozen=True)
class SwitchCut:
    approach: SwitchingApproach
    tank_count: int
    buffer_cars: int = -1  # -1 = approach default (0 alone, 19 en masse)

    def __post_init__(self):
        object.__setattr__(self, "approach", SwitchingApproach(self.approach))
        if self.buffer_cars < 0:
            b = SWITCH_BUFFER_CARS if self.approach is SwitchingApproach.SWITCHED_EN_MASSE else 0
            object.__setattr__(self, "buffer_cars", b)
        if not 1 <= self.tank_count <= MAX_SWITCH_BLOCK:
            raise ValidationError("switch_cut.tank_count",
                                  f"tank block must hold 1..{MAX_SWITCH_BLOCK} cars, got {self.tank_count}")

    @property
    def total_considered(self) -> int:
        return self.tank_count + self.buffer_cars

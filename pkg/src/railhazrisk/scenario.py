"""Scenario files: one TOML document describing a unit-vs-manifest comparison.

Sections: ``[train.unit]``, ``[train.manifest]``, ``[[route.segments]]``,
``[yards]``, ``[release]``, ``[demand]``, ``[curves]``, plus the optional
``[tables]``, ``[severity.*]`` and ``[options]``. Relative paths resolve
against the scenario file's directory. ``railhazrisk/data/demo_scenario.toml``
is an annotated example.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

try:
    import tomllib as tomli
except ModuleNotFoundError:  # Python 3.10
    import tomli
import tomli_w

from .errors import ParseError, ValidationError
from .model import (
    DEFAULT_POD,
    DEFAULT_TRACK_WEIGHTS,
    DEFAULT_WIND_WEIGHTS,
    DEFAULT_YARD_SEVERITY,
    MAX_SWITCH_BLOCK,
    CauseTable,
    ConsequenceCurveSet,
    Demand,
    LengthZ,
    MainlineZ,
    PodModel,
    RateTable,
    ReleaseConfig,
    RouteSegment,
    SeverityContext,
    SeverityModel,
    SwitchingApproach,
    TrainConfig,
    TrainType,
    YardPlan,
    YardSeverityModel,
    YardType,
    consist_from_block,
    consist_from_string,
    consist_to_string,
)
from .tables import (
    load_cause_tables,
    load_consequence_curves,
    load_quantity_table,
    load_rate_tables,
)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class TableSources:
    """Where each table came from; None means the shipped default."""
    rates: Optional[str] = None
    causes: Optional[str] = None
    curves: Optional[str] = None
    quantity: Optional[str] = None


@dataclass(frozen=True)
class Scenario:
    name: str
    unit: Optional[TrainConfig]
    manifest: Optional[TrainConfig]
    segments: tuple
    yards: YardPlan
    release: ReleaseConfig
    demand: Demand
    rates: RateTable
    causes: CauseTable
    curves: ConsequenceCurveSet
    sources: TableSources = TableSources()
    severity: SeverityModel = SeverityModel()
    pods: tuple = tuple(DEFAULT_POD.items())
    yard_severity: tuple = tuple(DEFAULT_YARD_SEVERITY.items())
    # multiply per-segment mainline casualties by segment miles once more when aggregating demand
    multiply_segment_length: bool = False

    def trains(self):
        return [t for t in (self.unit, self.manifest) if t is not None]

    def train(self, train_type) -> TrainConfig:
        t = self.unit if TrainType(train_type) is TrainType.UNIT else self.manifest
        if t is None:
            raise ValidationError(f"train.{TrainType(train_type).value.lower()}", "not configured")
        return t

    def pod_model(self, context) -> PodModel:
        return dict(self.pods)[SeverityContext(context)]

    def yard_severity_model(self) -> YardSeverityModel:
        return dict(self.yard_severity)[self.yards.yard_type]

    def validate(self):
        if self.unit is None and self.manifest is None:
            raise ValidationError("train", "at least one of [train.unit] / [train.manifest] is required")
        for path, t, tt in (("train.unit", self.unit, TrainType.UNIT),
                            ("train.manifest", self.manifest, TrainType.MANIFEST)):
            if t is None:
                continue
            if t.train_type is not tt:
                raise ValidationError(f"{path}.train_type", f"expected {tt.value}")
            t.validate(path)
        if self.manifest is not None and not 1 <= self.manifest.tank_count <= MAX_SWITCH_BLOCK:
            raise ValidationError("train.manifest.consist",
                                  f"manifest tank block must hold 1..{MAX_SWITCH_BLOCK} tank cars for yard switching")
        if not self.segments:
            raise ValidationError("route.segments", "at least one segment is required")
        ids = [s.segment_id for s in self.segments]
        if len(set(ids)) != len(ids):
            raise ValidationError("route.segments", "segment ids must be unique")
        for i, s in enumerate(self.segments):
            s.validate(f"route.segments[{i}]")
        self.yards.validate()
        self.release.validate()
        self.demand.validate()
        self.curves.validate()
        for ctx, m in self.pods:
            m.validate(f"severity.pod.{ctx.value}")
        for yt, m in self.yard_severity:
            m.validate(f"severity.yard.{yt.value}")
        return self


# --------------------------------------------------------------------------
# parsing helpers
# --------------------------------------------------------------------------

class _Section:
    """Dict wrapper that tracks consumed keys so typos surface as errors."""

    def __init__(self, data, path):
        if not isinstance(data, dict):
            raise ValidationError(path, "expected a table")
        self.data = dict(data)
        self.path = path

    def _key(self, key):
        return f"{self.path}.{key}" if self.path else key

    def take(self, key, kind=None, default=...):
        if key not in self.data:
            if default is ...:
                raise ValidationError(self._key(key), "required field missing")
            return default
        value = self.data.pop(key)
        if kind is not None:
            value = _coerce(value, kind, self._key(key))
        return value

    def sub(self, key, required=True):
        if key not in self.data:
            if required:
                raise ValidationError(self._key(key), "required section missing")
            return None
        return _Section(self.data.pop(key), self._key(key))

    def done(self):
        if self.data:
            raise ValidationError(self._key(sorted(self.data)[0]), "unknown field")


def _coerce(value, kind, path):
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(path, f"expected an integer, got {value!r}")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(path, f"expected a number, got {value!r}")
        return float(value)
    if kind is bool:
        if not isinstance(value, bool):
            raise ValidationError(path, f"expected true/false, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ValidationError(path, f"expected a string, got {value!r}")
        return value
    try:
        return kind(value)
    except (TypeError, ValueError):
        choices = ", ".join(m.value for m in kind) if hasattr(kind, "__members__") else ""
        raise ValidationError(path, f"invalid value {value!r}" + (f"; expected one of {choices}" if choices else "")) from None


def _resolve(base: Path, value):
    if value is None:
        return None
    p = Path(value).expanduser()
    return str(p if p.is_absolute() else (base / p).resolve())


def _parse_train(sec: _Section, train_type: TrainType) -> TrainConfig:
    L = sec.take("length_cars", int)
    gw = sec.take("gross_tonnage", float)
    loaded = sec.take("loaded", bool, True)
    gt = sec.take("avg_gross_tons_per_car", float, None)
    consist_text = sec.take("consist", str, None)
    block = sec.sub("tank_block", required=False)
    if (consist_text is None) == (block is None):
        raise ValidationError(f"{sec.path}.consist", "give exactly one of consist or tank_block")
    if block is not None:
        consist = consist_from_block(L, block.take("start", int), block.take("count", int))
        block.done()
    else:
        consist = consist_from_string(consist_text, f"{sec.path}.consist")
    sec.done()
    return TrainConfig(train_type, L, gw, consist, loaded, gt)


def _parse_severity(sec: Optional[_Section]):
    sev, pods, yard = SeverityModel(), dict(DEFAULT_POD), dict(DEFAULT_YARD_SEVERITY)
    if sec is None:
        return sev, pods, yard
    z = sec.sub("z", required=False)
    if z is not None:
        ml = z.sub("mainline", required=False)
        if ml is not None:
            kw = {f.name: ml.take(f.name, float, getattr(sev.mainline, f.name)) for f in fields(MainlineZ)}
            ml.done()
            sev = replace(sev, mainline=MainlineZ(**kw))
        for name in ("yard", "terminal"):
            s = z.sub(name, required=False)
            if s is not None:
                cur = getattr(sev, name)
                new = LengthZ(s.take("intercept", float, cur.intercept), s.take("l", float, cur.l))
                s.done()
                sev = replace(sev, **{name: new})
        z.done()
    pod = sec.sub("pod", required=False)
    if pod is not None:
        for key in list(pod.data):
            ctx = _coerce(key, SeverityContext, f"{pod.path}.{key}")
            s = pod.sub(key)
            pods[ctx] = PodModel(s.take("alpha", float), s.take("beta", float))
            s.done()
        pod.done()
    ys = sec.sub("yard", required=False)
    if ys is not None:
        for key in list(ys.data):
            yt = _coerce(key, YardType, f"{ys.path}.{key}")
            s = ys.sub(key)
            cur = yard[yt]
            masses = s.take("masses", None, None)
            yard[yt] = YardSeverityModel(
                shape=s.take("shape", float, cur.shape),
                rate=s.take("rate", float, cur.rate),
                truncation_cap=s.take("truncation_cap", int, cur.truncation_cap),
                masses=tuple(float(m) for m in masses) if masses is not None else None,
            )
            s.done()
        ys.done()
    sec.done()
    return sev, pods, yard


def parse_scenario(data: dict, base_dir: Path = Path(".")) -> Scenario:
    root = _Section(data, "")
    name = root.take("name", str, "scenario")
    root.take("schema_version", int, SCHEMA_VERSION)

    trains = root.sub("train")
    unit_sec = trains.sub("unit", required=False)
    man_sec = trains.sub("manifest", required=False)
    trains.done()
    unit = _parse_train(unit_sec, TrainType.UNIT) if unit_sec else None
    manifest = _parse_train(man_sec, TrainType.MANIFEST) if man_sec else None

    route = root.sub("route")
    raw_segments = route.take("segments")
    route.done()
    if not isinstance(raw_segments, list):
        raise ValidationError("route.segments", "expected an array of tables ([[route.segments]])")
    segments = []
    for i, raw in enumerate(raw_segments):
        s = _Section(raw, f"route.segments[{i}]")
        segments.append(RouteSegment(s.take("segment_id", str), s.take("length_miles", float),
                                     s.take("derailment_speed_mph", float)))
        s.done()

    ysec = root.sub("yards")
    yards = YardPlan(
        intermediate_yards=ysec.take("intermediate_yards", int, 0),
        yard_type=ysec.take("yard_type", YardType, YardType.ALL),
        switching_approach=ysec.take("switching_approach", SwitchingApproach, SwitchingApproach.SWITCHED_EN_MASSE),
        unit_rate_group=ysec.take("unit_rate_group", str, "Unit"),
    )
    ysec.done()

    tsec = root.sub("tables", required=False)
    rates_src = causes_src = None
    if tsec is not None:
        rates_src = _resolve(base_dir, tsec.take("rates", str, None))
        causes_src = _resolve(base_dir, tsec.take("causes", str, None))
        tsec.done()

    rsec = root.sub("release")
    cpr = rsec.take("cpr", float)
    factor = rsec.take("yard_speed_factor", float, 0.35)
    qt = rsec.take("quantity_table", None, None)
    quantity_src = None
    if qt is None:
        quantity = load_quantity_table()
    elif isinstance(qt, str):
        quantity_src = _resolve(base_dir, qt)
        quantity = load_quantity_table(quantity_src)
    else:
        try:
            quantity = tuple((int(g), float(p)) for g, p in qt)
        except (TypeError, ValueError):
            raise ValidationError("release.quantity_table", "expected [[gallons, probability], ...]") from None
    rsec.done()
    release = ReleaseConfig(cpr, factor, quantity)

    dsec = root.sub("demand")
    demand = Demand(dsec.take("tank_cars_required", int), dsec.take("unit_capacity", int),
                    dsec.take("manifest_capacity", int))
    dsec.done()

    csec = root.sub("curves", required=False) or _Section({}, "curves")
    curves_src = _resolve(base_dir, csec.take("path", str, None))
    track = csec.take("track_weights", None, dict(DEFAULT_TRACK_WEIGHTS))
    wind = csec.take("wind_weights", None, dict(DEFAULT_WIND_WEIGHTS))
    nearby = csec.take("nearby_minutes", float, 4.0)
    hazard = csec.take("hazard_zone_minutes", float, 120.0)
    csec.done()
    curves = load_consequence_curves(
        curves_src,
        track_weights=tuple((k, float(track[k])) for k in sorted(track, key=_location_order)),
        wind_weights=tuple((k, float(wind[k])) for k in sorted(wind, key=_wind_order)),
        nearby_minutes=nearby,
        hazard_zone_minutes=hazard,
    )

    sev, pods, yard = _parse_severity(root.sub("severity", required=False))

    osec = root.sub("options", required=False)
    multiply = False
    if osec is not None:
        multiply = osec.take("multiply_segment_length", bool, False)
        osec.done()
    root.done()

    scenario = Scenario(
        name=name, unit=unit, manifest=manifest, segments=tuple(segments), yards=yards,
        release=release, demand=demand,
        rates=load_rate_tables(rates_src), causes=load_cause_tables(causes_src), curves=curves,
        sources=TableSources(rates_src, causes_src, curves_src, quantity_src),
        severity=sev, pods=tuple(pods.items()), yard_severity=tuple(yard.items()),
        multiply_segment_length=multiply,
    )
    return scenario.validate()


def _location_order(k):
    order = ("Urban", "Suburban", "Rural")
    return order.index(k) if k in order else len(order)


def _wind_order(k):
    order = ("Low", "Medium", "High")
    return order.index(k) if k in order else len(order)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return parse_scenario(data, path.parent.resolve())


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def _train_doc(t: TrainConfig):
    doc = {"length_cars": t.length_cars, "gross_tonnage": t.gross_tonnage, "loaded": t.loaded}
    if t.avg_gross_tons_per_car is not None:
        doc["avg_gross_tons_per_car"] = t.avg_gross_tons_per_car
    pos = t.tank_positions
    if pos and pos == tuple(range(pos[0], pos[0] + len(pos))):
        doc["tank_block"] = {"start": pos[0], "count": len(pos)}
    else:
        doc["consist"] = consist_to_string(t.consist)
    return doc


def scenario_to_dict(s: Scenario) -> dict:
    doc = {"schema_version": SCHEMA_VERSION, "name": s.name, "train": {}}
    if s.unit is not None:
        doc["train"]["unit"] = _train_doc(s.unit)
    if s.manifest is not None:
        doc["train"]["manifest"] = _train_doc(s.manifest)
    doc["route"] = {"segments": [
        {"segment_id": g.segment_id, "length_miles": g.length_miles, "derailment_speed_mph": g.derailment_speed_mph}
        for g in s.segments
    ]}
    doc["yards"] = {
        "intermediate_yards": s.yards.intermediate_yards,
        "yard_type": s.yards.yard_type.value,
        "switching_approach": s.yards.switching_approach.value,
        "unit_rate_group": s.yards.unit_rate_group,
    }
    release = {"cpr": s.release.cpr, "yard_speed_factor": s.release.yard_speed_factor}
    if s.sources.quantity is not None:
        release["quantity_table"] = s.sources.quantity
    else:
        release["quantity_table"] = [[g, p] for g, p in s.release.quantity_table]
    doc["release"] = release
    doc["demand"] = {
        "tank_cars_required": s.demand.tank_cars_required,
        "unit_capacity": s.demand.unit_capacity,
        "manifest_capacity": s.demand.manifest_capacity,
    }
    curves = {
        "track_weights": dict(s.curves.track_weights),
        "wind_weights": dict(s.curves.wind_weights),
        "nearby_minutes": s.curves.nearby_minutes,
        "hazard_zone_minutes": s.curves.hazard_zone_minutes,
    }
    if s.sources.curves is not None:
        curves["path"] = s.sources.curves
    doc["curves"] = curves
    tables = {k: v for k, v in (("rates", s.sources.rates), ("causes", s.sources.causes)) if v is not None}
    if tables:
        doc["tables"] = tables

    sev = {"z": {
        "mainline": {f.name: getattr(s.severity.mainline, f.name) for f in fields(MainlineZ)},
        "yard": {"intercept": s.severity.yard.intercept, "l": s.severity.yard.l},
        "terminal": {"intercept": s.severity.terminal.intercept, "l": s.severity.terminal.l},
    }}
    sev["pod"] = {ctx.value: {"alpha": m.alpha, "beta": m.beta} for ctx, m in s.pods}
    yard = {}
    for yt, m in s.yard_severity:
        entry = {"shape": m.shape, "rate": m.rate, "truncation_cap": m.truncation_cap}
        if m.masses is not None:
            entry["masses"] = list(m.masses)
        yard[yt.value] = entry
    sev["yard"] = yard
    doc["severity"] = sev
    doc["options"] = {"multiply_segment_length": s.multiply_segment_length}
    return doc


def dumps_scenario(s: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(s))


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(dumps_scenario(s), encoding="utf-8")

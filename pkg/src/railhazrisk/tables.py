"""CSV ingestion for rate, cause, quantity, and consequence-curve tables.

Default tables ship in ``railhazrisk/data``; set ``RAILHAZRISK_TABLES`` to a
directory holding files of the same names to swap them all at once.
"""
from __future__ import annotations

import csv
import math
import os
from pathlib import Path

from .errors import ChecksumError, MissingCurve, ParseError, ValidationError
from .model import (
    AD_CLASSES,
    LOCATION_CLASSES,
    MAINLINE_CLASSES,
    MAINLINE_METRICS,
    MIXED,
    WIND_CLASSES,
    YARD_METRICS,
    CauseRow,
    CauseTable,
    ConsequenceCurveSet,
    MetricClass,
    RateTable,
    check_quantity_table,
)

PACKAGE_DATA = Path(__file__).parent / "data"
TABLES_ENV = "RAILHAZRISK_TABLES"

RATES_FILE = "rates.csv"
CAUSES_FILE = "causes.csv"
QUANTITY_FILE = "quantity.csv"
CURVES_FILE = "curves_placeholder.csv"

CAUSE_TOTAL_TOL = 0.1


def table_dir() -> Path:
    env = os.environ.get(TABLES_ENV)
    return Path(env) if env else PACKAGE_DATA


def default_path(name) -> Path:
    return table_dir() / name


def _read_rows(path, required):
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise ParseError(f"{path}: missing header row")
            missing = [c for c in required if c not in reader.fieldnames]
            if missing:
                raise ParseError(f"{path}: missing columns {missing}")
            return [(i + 2, row) for i, row in enumerate(reader)]
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _number(path, line, row, col, kind=float):
    try:
        return kind(row[col])
    except (TypeError, ValueError):
        raise ParseError(f"{path}:{line}: column {col!r} is not a number: {row[col]!r}") from None


def load_rate_tables(path=None) -> RateTable:
    path = Path(path) if path else default_path(RATES_FILE)
    entries = []
    seen = set()
    for line, row in _read_rows(path, ("train_type", "context", "metric", "rate")):
        group, context, metric = row["train_type"].strip(), row["context"].strip(), row["metric"].strip()
        rate = _number(path, line, row, "rate")
        field = f"rates[{group},{context},{metric}]"
        allowed = MAINLINE_METRICS if context == "mainline" else YARD_METRICS if context == "yard" else ()
        if metric not in allowed:
            raise ValidationError(field, f"unknown metric for context {context!r}")
        if rate < 0 or not math.isfinite(rate):
            raise ValidationError(field, "rate must be a finite non-negative number")
        if group in ("Unit", "LoadedUnit") and metric == "per_million_cars_processed":
            raise ValidationError(field, "unit trains are not switched in yards")
        key = (group, context, metric)
        if key in seen:
            raise ValidationError(field, "duplicate entry")
        seen.add(key)
        entries.append((key, rate))
    return RateTable(tuple(entries))


def load_cause_tables(path=None) -> CauseTable:
    path = Path(path) if path else default_path(CAUSES_FILE)
    rows = []
    for line, row in _read_rows(path, ("context", "train_type", "cause_group", "percent", "metric_class")):
        context = row["context"].strip()
        field = f"causes[{line}]"
        try:
            mc = MetricClass(row["metric_class"].strip())
        except ValueError:
            raise ValidationError(f"{field}.metric_class", f"unknown class {row['metric_class']!r}") from None
        allowed = MAINLINE_CLASSES if context == "mainline" else AD_CLASSES if context == "ad" else None
        if allowed is None:
            raise ValidationError(f"{field}.context", f"expected 'mainline' or 'ad', got {context!r}")
        if mc not in allowed:
            raise ValidationError(f"{field}.metric_class", f"{mc.value} is not valid for {context} causes")
        pct = _number(path, line, row, "percent")
        if not 0.0 <= pct <= 100.0:
            raise ValidationError(f"{field}.percent", "must lie in [0, 100]")
        rows.append(CauseRow(context, row["train_type"].strip(), row["cause_group"].strip(), pct, mc))
    table = CauseTable(tuple(rows))
    for context, train_type in table.partitions():
        total = table.select(context, train_type).total_percent()
        if abs(total - 100.0) > CAUSE_TOTAL_TOL:
            raise ChecksumError(f"causes[{context},{train_type}]",
                                f"percents sum to {total:.4f}, expected 100 +/- {CAUSE_TOTAL_TOL}")
    return table


def load_quantity_table(path=None):
    path = Path(path) if path else default_path(QUANTITY_FILE)
    table = []
    for line, row in _read_rows(path, ("lading_loss_gallons", "probability")):
        table.append((_number(path, line, row, "lading_loss_gallons", int),
                      _number(path, line, row, "probability")))
    check_quantity_table(table, f"{path.name}")
    return tuple(table)


def load_consequence_curves(path=None, **weights) -> ConsequenceCurveSet:
    """Read casualty-vs-time curves.

    Either a full grid over (Urban|Suburban|Rural) x (Low|Medium|High) x anchor,
    or a single pre-mixed set tagged ``Mixed``/``Mixed``. Keyword arguments
    override the mixing weights / evacuation landmarks of the returned set.
    """
    path = Path(path) if path else default_path(CURVES_FILE)
    points = {}
    cols = ("location_class", "wind_class", "anchor_gallons", "time_min", "casualties")
    for line, row in _read_rows(path, cols):
        key = (row["location_class"].strip(), row["wind_class"].strip(),
               _number(path, line, row, "anchor_gallons", int))
        t = _number(path, line, row, "time_min")
        c = _number(path, line, row, "casualties")
        points.setdefault(key, {})
        if t in points[key]:
            raise ValidationError(f"curves[{key[0]},{key[1]},{key[2]}]", f"duplicate sample at t={t:g}")
        points[key][t] = c

    if not points:
        raise ParseError(f"{path}: no curve samples")
    anchors = tuple(sorted({k[2] for k in points}))
    premixed = all(loc == MIXED and wind == MIXED for loc, wind, _ in points)
    if premixed:
        expected = [(MIXED, MIXED, a) for a in anchors]
    else:
        expected = [(loc, wind, a) for loc in LOCATION_CLASSES for wind in WIND_CLASSES for a in anchors]
        extra = sorted(set(points) - set(expected))
        if extra:
            raise ValidationError("curves", f"unexpected curve keys {extra}")
    for key in expected:
        if key not in points:
            raise MissingCurve(f"no curve for location={key[0]} wind={key[1]} anchor={key[2]}")

    curves = []
    for key in expected:
        samples = sorted(points[key].items())
        curves.append((key, (tuple(t for t, _ in samples), tuple(c for _, c in samples))))
    cs = ConsequenceCurveSet(curves=tuple(curves), anchors=anchors, **weights)
    return cs.validate()

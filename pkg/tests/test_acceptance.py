"""Acceptance criteria, one check per criterion, each at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` or directly with
``python tests/test_acceptance.py``; either way one PASS/FAIL line is printed
per criterion.
"""
import json
import math
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import DEMO, curve_value, merged, small_scenario_dict  # noqa: E402

from railhazrisk.consequence import total_quantity_pmf  # noqa: E402
from railhazrisk.derailment import (  # noqa: E402
    ad_derailment_prob,
    mainline_derailment_prob,
    switching_derailment_prob,
)
from railhazrisk.model import (  # noqa: E402
    DEFAULT_YARD_SEVERITY,
    CauseRow,
    CauseTable,
    MetricClass,
    PodModel,
    RouteSegment,
    SwitchCut,
    SwitchingApproach,
    TrainConfig,
    TrainType,
    YardPlan,
    YardSeverityModel,
)
from railhazrisk.oracle import SimConfig  # noqa: E402
from railhazrisk.pmf import DiscretePmf  # noqa: E402
from railhazrisk.release import (  # noqa: E402
    ad_tank_derail_pmf,
    poisson_binomial_pmf,
    position_derail_probs,
    switch_tank_derail_pmf,
)
from railhazrisk.report import demand_total_casualties  # noqa: E402
from railhazrisk.scenario import dumps_scenario, load_scenario, parse_scenario, save_scenario, scenario_to_dict  # noqa: E402
from railhazrisk.severity import linehaul_severity_pmf, pod_pmf, yard_switch_severity_pmf  # noqa: E402
from railhazrisk.tables import PACKAGE_DATA, load_quantity_table, load_rate_tables  # noqa: E402
from railhazrisk.validation import validate_scenario  # noqa: E402

CRITERIA = []


def criterion(number, title):
    def wrap(fn):
        CRITERIA.append((number, title, fn))
        return fn
    return wrap


# --------------------------------------------------------------------------

@criterion(1, "4,500-gallon worked example, P = 0.003264 +/- 5e-5 in < 1 s")
def check_worked_example():
    t0 = time.perf_counter()
    counts = DiscretePmf(np.r_[0.0, np.full(20, 0.05)])
    p = total_quantity_pmf(counts, load_quantity_table())[4500 // 750]
    elapsed = time.perf_counter() - t0
    assert abs(p - 0.003264) <= 5e-5, p
    assert elapsed < 1.0, elapsed
    return f"P(4500 gal) = {p:.6f}, {elapsed * 1000:.1f} ms"


@criterion(2, "per-car release quantity table sums to exactly 1")
def check_quantity_table():
    text = (PACKAGE_DATA / "quantity.csv").read_text().split()
    probs = [Fraction(line.split(",")[1]) for line in text[1:]]
    assert sum(probs) == 1, sum(probs)
    loaded = load_quantity_table()
    assert sum(Fraction(repr(p)) for _, p in loaded) == 1
    return " + ".join(str(float(p)) for p in probs) + " = 1"


def enumerate_poisson_binomial(r):
    """All 2^L outcomes: weights and success counts built outcome by outcome."""
    w = np.ones(1)
    c = np.zeros(1, dtype=np.int64)
    for rj in r:
        w = np.concatenate((w * (1.0 - rj), w * rj))
        c = np.concatenate((c, c + 1))
    return np.bincount(c, weights=w, minlength=len(r) + 1)


@criterion(3, "Poisson-Binomial vs 2^L enumeration, 200 profiles, L <= 20, 1e-12, < 30 s")
def check_poisson_binomial():
    rng = np.random.default_rng(20240601)
    t0 = time.perf_counter()
    worst = worst_mom = 0.0
    lengths = np.r_[np.full(20, 20), rng.integers(1, 21, 180)]
    for L in lengths:
        r = rng.random(L) * rng.choice([1.0, 0.3, 0.05])
        got = poisson_binomial_pmf(r)
        worst = max(worst, float(np.max(np.abs(got.masses - enumerate_poisson_binomial(r)))))
        worst_mom = max(worst_mom, abs(got.mean() - r.sum()), abs(got.variance() - (r * (1 - r)).sum()))
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-12 and worst_mom <= 1e-12, (worst, worst_mom)
    assert elapsed < 30.0, elapsed
    return f"max |pmf err| = {worst:.1e}, max moment err = {worst_mom:.1e}, {elapsed:.1f} s"


@criterion(4, "severity pmfs normalized (geometric 1e-12, yard switching 1e-9)")
def check_severity_normalization():
    worst_geo = 0.0
    for z in np.arange(-5.0, 0.0 + 1e-9, 0.25):
        for L_r in range(1, 201):
            worst_geo = max(worst_geo, abs(linehaul_severity_pmf(float(z), L_r).total() - 1.0))
    worst_yard = 0.0
    for model in DEFAULT_YARD_SEVERITY.values():
        for L in range(1, 101):
            for k in range(1, L + 1):
                worst_yard = max(worst_yard, abs(yard_switch_severity_pmf(model, L, k).total() - 1.0))
    assert worst_geo <= 1e-12 and worst_yard <= 1e-9, (worst_geo, worst_yard)
    return f"max |sum - 1|: geometric {worst_geo:.1e}, yard {worst_yard:.1e}"


@criterion(5, "sum_j PD(j) = sum_k pod(k) E[x | k] on 100 random models, 1e-9")
def check_position_identity():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        L = int(rng.integers(1, 151))
        pod = pod_pmf(PodModel(rng.uniform(0.3, 3), rng.uniform(0.3, 3)), L)
        z0, dz = rng.uniform(-4, 0), rng.uniform(-0.01, 0)
        sev = [None] + [linehaul_severity_pmf(z0 + dz * (L - k + 1), L - k + 1) for k in range(1, L + 1)]
        lhs = position_derail_probs(pod, sev, L).sum()
        rhs = sum(pod[k] * sev[k].mean() for k in range(1, L + 1))
        worst = max(worst, abs(lhs - rhs))
    assert worst <= 1e-9, worst
    return f"max difference {worst:.1e}"


def brute_force_tank_derail(pod, sev, consist):
    L = len(consist)
    out = np.zeros(sum(consist) + 1)
    for k in range(1, L + 1):
        for x in range(1, L - k + 2):
            out[sum(consist[k - 1:k - 1 + x])] += pod[k] * sev[k][x]
    return out


@criterion(6, "A/D tank cars derailed vs (k, x) enumeration, L <= 12, 1e-12")
def check_ad_brute_force():
    rng = np.random.default_rng(6)
    worst = 0.0
    cases = 0
    for L in range(1, 13):
        for _ in range(40):
            consist = tuple(bool(b) for b in rng.integers(0, 2, L))
            pod = rng.random(L)
            pod = DiscretePmf(np.r_[0.0, pod / pod.sum()])
            sev = [None]
            for k in range(1, L + 1):
                w = rng.random(L - k + 1)
                sev.append(DiscretePmf(np.r_[0.0, w / w.sum()]))
            got = ad_tank_derail_pmf(pod, sev, consist).masses
            worst = max(worst, float(np.max(np.abs(got - brute_force_tank_derail(pod, sev, consist)))))
            cases += 1
    assert worst <= 1e-12, worst
    return f"{cases} cases, max error {worst:.1e}"


@criterion(7, "en masse with buffer 0 equals alone bit for bit; point severity gives TT/(TT+19)")
def check_switching_approaches():
    for model in DEFAULT_YARD_SEVERITY.values():
        for tt in range(1, 21):
            a = switch_tank_derail_pmf(SwitchCut(SwitchingApproach.SWITCHED_ALONE, tt), model).masses
            b = switch_tank_derail_pmf(SwitchCut(SwitchingApproach.SWITCHED_EN_MASSE, tt, buffer_cars=0), model).masses
            assert a.tobytes() == b.tobytes(), tt
    point = YardSeverityModel(masses=(1.0,))
    for tt in range(1, 21):
        m = switch_tank_derail_pmf(SwitchCut(SwitchingApproach.SWITCHED_EN_MASSE, tt), point)
        assert m[1] == tt / (tt + 19), (tt, m[1])
    return "60 bitwise matches, 20 exact TT/(TT+19) values"


@criterion(8, "Monte Carlo TV <= 0.01 at 1e6 trials, all contexts on the demo, < 2 min")
def check_monte_carlo():
    t0 = time.perf_counter()
    report = validate_scenario(load_scenario(DEMO), SimConfig(trials=1_000_000), 0.01, quantities=False)
    elapsed = time.perf_counter() - t0
    assert report.passed, report.to_text()
    assert elapsed < 120.0, elapsed
    worst = max(report.entries, key=lambda e: e.tv)
    return f"{len(report.entries)} distributions, max TV {worst.tv:.4f} ({worst.name}), {elapsed:.0f} s"


def single_cause(context, train_type, metric_class):
    return CauseTable((CauseRow(context, train_type.value, "only", 100.0, MetricClass(metric_class)),))


@criterion(9, "derailment rate arithmetic vs hand evaluation, 1e-15 relative")
def check_rate_arithmetic():
    rates = load_rate_tables()
    seg = RouteSegment("s", 237.0, 40.0)
    checks = []
    for tt, (trm, tom, cm) in ((TrainType.UNIT, (0.85, 0.10, 8.14)), (TrainType.MANIFEST, (0.67, 0.14, 11.39))):
        train = TrainConfig(tt, 110, 15400.0, (True,) * 20 + (False,) * 90)
        checks.append((mainline_derailment_prob(train, seg, rates, single_cause("mainline", tt, "TrainMiles")),
                       trm * 1e-6 * 237.0))
        checks.append((mainline_derailment_prob(train, seg, rates, single_cause("mainline", tt, "TonMiles")),
                       tom * 1e-9 * 15400.0 * 237.0))
        checks.append((mainline_derailment_prob(train, seg, rates, single_cause("mainline", tt, "CarMiles")),
                       cm * 1e-9 * 110 * 237.0))
    unit = TrainConfig(TrainType.UNIT, 110, 15400.0, (True,) * 110)
    manifest = TrainConfig(TrainType.MANIFEST, 110, 9000.0, (True,) * 20 + (False,) * 90)
    for m in range(6):
        n = 2 + 2 * m
        plan = YardPlan(intermediate_yards=m)
        checks.append((ad_derailment_prob(unit, plan, rates, single_cause("ad", TrainType.UNIT, "TrainEvents")),
                       76.95e-6 * n))
        checks.append((ad_derailment_prob(unit, plan, rates, single_cause("ad", TrainType.UNIT, "CarEvents")),
                       0.74e-9 * 110 * n))
        checks.append((ad_derailment_prob(manifest, plan, rates, single_cause("ad", TrainType.MANIFEST, "TrainEvents")),
                       61.52e-6 * n))
        checks.append((ad_derailment_prob(manifest, plan, rates, single_cause("ad", TrainType.MANIFEST, "CarEvents")),
                       1.04e-9 * 110 * n))
        checks.append((switching_derailment_prob(manifest, plan, rates), 6.43e-6 * 110 * (m + 1)))
    worst = max(abs(got - hand) / hand for got, hand in checks)
    assert worst <= 1e-15, worst
    return f"{len(checks)} values, max relative error {worst:.1e}"


def hand_demand_totals(d, times):
    """Expected casualties for one-car trains, evaluated by hand from the rates and curves."""
    cpr, q = d["release"]["cpr"], d["release"]["yard_speed_factor"]
    li = d["route"]["segments"][0]["length_miles"]
    m = d["yards"]["intermediate_yards"]
    n = 2 + 2 * m
    gw_u = d["train"]["unit"]["gross_tonnage"]
    gw_m = d["train"]["manifest"]["gross_tonnage"]
    table = [(750, 0.336), (3750, 0.095), (10500, 0.133), (19500, 0.123), (27000, 0.313)]
    mean_loss = sum(g * p for g, p in table)
    dem = d["demand"]
    ships_u = math.ceil(dem["tank_cars_required"] / dem["unit_capacity"])
    ships_m = math.ceil(dem["tank_cars_required"] / dem["manifest_capacity"])
    out = {}
    for t in times:
        # every loss is below the first anchor, where C is linear from 0
        ec = mean_loss / 30000 * curve_value(30000, t)
        main_u = (0.85e-6 * li * 0.5 + 0.10e-9 * gw_u * li * 0.3 + 8.14e-9 * 1 * li * 0.2) * cpr * ec
        ad_u = 76.95e-6 * n * q * cpr * ec
        main_m = (0.67e-6 * li * 0.5 + 0.14e-9 * gw_m * li * 0.3 + 11.39e-9 * 1 * li * 0.2) * cpr * ec
        ad_m = (61.52e-6 * n * 0.6 + 1.04e-9 * 1 * n * 0.4) * q * cpr * ec
        sw_m = 6.43e-6 * 1 * (m + 1) * q * cpr * ec
        out[t] = ((main_u + ad_u) * ships_u, (main_m + ad_m + sw_m) * ships_m)
    return out, ships_u, ships_m


@criterion(10, "demand totals vs hand sum, ceiling jumps, n = 2 + 2m")
def check_aggregation(tmp_dir):
    base = small_scenario_dict(tmp_dir)
    d = merged(base, {
        "train": {"unit": {"length_cars": 1, "gross_tonnage": 143.0, "consist": "T"},
                  "manifest": {"length_cars": 1, "gross_tonnage": 90.0, "consist": "T"}},
        "yards": {"intermediate_yards": 2, "switching_approach": "SwitchedAlone"},
    })
    times = (0.0, 4.0, 30.0, 120.0)
    report = demand_total_casualties(parse_scenario(d, tmp_dir), times)
    hand, su, sm = hand_demand_totals(d, times)
    worst = 0.0
    for t in times:
        got = (report.options[TrainType.UNIT].demand_tc[t], report.options[TrainType.MANIFEST].demand_tc[t])
        for g, h in zip(got, hand[t]):
            worst = max(worst, abs(g - h) / h)
    assert worst <= 1e-12, worst
    assert (report.options[TrainType.UNIT].shipments, report.options[TrainType.MANIFEST].shipments) == (su, sm)
    for cap in (1, 4, 20, 100):
        prev = None
        for delta in range(1, 5 * cap + 2):
            s = merged(base, {"demand": {"tank_cars_required": delta, "unit_capacity": cap}})
            ships = parse_scenario(s, tmp_dir).demand.shipments(TrainType.UNIT)
            if prev is not None:
                assert (ships - prev == 1) == ((delta - 1) % cap == 0), (cap, delta)
            prev = ships
    for m in range(6):
        assert YardPlan(intermediate_yards=m).ad_events == 2 + 2 * m
    return f"max relative error {worst:.1e}; ceiling jumps only at multiples of capacity; n = 2 + 2m for m = 0..5"


@criterion(11, "byte-identical machine reports across runs; scenario round-trip")
def check_determinism(tmp_dir):
    outputs = []
    for i in range(2):
        out = tmp_dir / f"run{i}.json"
        subprocess.run([sys.executable, "-m", "railhazrisk", "run", "--scenario", str(DEMO),
                        "--format", "machine", "--output", str(out)], check=True)
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
    json.loads(outputs[0])
    demo = load_scenario(DEMO)
    path = tmp_dir / "roundtrip.toml"
    save_scenario(demo, path)
    again = load_scenario(path)
    assert scenario_to_dict(again) == scenario_to_dict(demo)
    assert dumps_scenario(again) == dumps_scenario(demo)
    assert again.unit == demo.unit and again.manifest == demo.manifest and again.segments == demo.segments
    return f"{len(outputs[0])} identical bytes; round-trip equal"


# --------------------------------------------------------------------------

def _call(fn, tmp_dir):
    return fn(tmp_dir) if fn.__code__.co_argcount else fn()


def _line(number, title, status, detail):
    return f"criterion {number:>2} {status}: {title}" + (f" [{detail}]" if detail else "")


@pytest.mark.parametrize("number,title,fn", CRITERIA, ids=[f"criterion_{n}" for n, _, _ in CRITERIA])
def test_criterion(number, title, fn, tmp_path, capsys):
    try:
        detail = _call(fn, tmp_path)
    except BaseException as exc:
        with capsys.disabled():
            print("\n" + _line(number, title, "FAIL", repr(exc)[:200]))
        raise
    with capsys.disabled():
        print("\n" + _line(number, title, "PASS", detail))


def main():
    import tempfile
    failed = 0
    for number, title, fn in CRITERIA:
        with tempfile.TemporaryDirectory() as d:
            try:
                print(_line(number, title, "PASS", _call(fn, Path(d))), flush=True)
            except Exception as exc:  # report and keep going
                failed += 1
                print(_line(number, title, "FAIL", repr(exc)[:300]), flush=True)
    print(f"{len(CRITERIA) - failed}/{len(CRITERIA)} criteria passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())

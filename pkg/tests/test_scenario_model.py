import math

import pytest

from railhazrisk.errors import ChecksumError, MissingCurve, ParseError, ValidationError
from railhazrisk.model import (
    DEFAULT_QUANTITY_TABLE,
    MetricClass,
    ReleaseConfig,
    SwitchCut,
    SwitchingApproach,
    TrainConfig,
    TrainType,
    YardPlan,
    check_quantity_table,
    consist_from_block,
    consist_from_string,
    consist_to_string,
)
from railhazrisk.scenario import dumps_scenario, load_scenario, parse_scenario, save_scenario, scenario_to_dict
from railhazrisk.tables import (
    load_cause_tables,
    load_consequence_curves,
    load_quantity_table,
    load_rate_tables,
)

from conftest import merged


def test_default_mainline_unit_rates():
    r = load_rate_tables().mainline(TrainType.UNIT)
    assert (r.train_miles, r.ton_miles, r.car_miles) == (0.85, 0.10, 8.14)


def test_default_mainline_manifest_rates():
    r = load_rate_tables().mainline(TrainType.MANIFEST)
    assert (r.train_miles, r.ton_miles, r.car_miles) == (0.67, 0.14, 11.39)


def test_default_yard_rates_manifest():
    r = load_rate_tables().yard("Manifest")
    assert (r.train_ad, r.car_ad, r.cars_processed) == (61.52, 1.04, 6.43)


def test_unit_yard_rows_have_no_switching_rate():
    rates = load_rate_tables()
    assert rates.yard("Unit").train_ad == 76.95
    assert rates.yard("LoadedUnit").train_ad == 126.31
    assert rates.yard("Unit").cars_processed is None


def test_broken_rails_share_unit_mainline():
    rows = [r for r in load_cause_tables().select("mainline", "Unit").rows if r.cause_group == "Broken Rails or Welds"]
    assert len(rows) == 1
    assert rows[0].percent == 17.87
    assert rows[0].metric_class is MetricClass.TON_MILES


def test_default_cause_tables_sum_to_100():
    causes = load_cause_tables()
    for ctx, tt in causes.partitions():
        assert abs(causes.select(ctx, tt).total_percent() - 100.0) <= 0.1


def test_named_cause_assignments():
    causes = load_cause_tables()
    for tt in ("Unit", "Manifest"):
        sel = {r.cause_group: r.metric_class for r in causes.select("mainline", tt).rows}
        assert sel["Obstructions"] is MetricClass.TRAIN_MILES
        assert sel["Broken Wheels (Car)"] is MetricClass.CAR_MILES


def test_cause_checksum_error(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("context,train_type,cause_group,percent,metric_class\nmainline,Unit,A,90,TrainMiles\n")
    with pytest.raises(ChecksumError):
        load_cause_tables(p)


def test_quantity_table_sums_exactly_to_one():
    table = load_quantity_table()
    assert [g for g, _ in table] == [750, 3750, 10500, 19500, 27000]
    check_quantity_table(table)
    check_quantity_table(DEFAULT_QUANTITY_TABLE)


def test_quantity_table_rejects_off_lattice_and_bad_sum():
    with pytest.raises(ValidationError):
        check_quantity_table([(700, 1.0)])
    with pytest.raises(ValidationError):
        check_quantity_table([(750, 0.5), (1500, 0.4)])


def test_curves_missing_triple(tmp_path):
    src = load_consequence_curves()
    lines = ["location_class,wind_class,anchor_gallons,time_min,casualties"]
    for (loc, wind, a), (times, vals) in src.curves:
        if (loc, wind, a) == ("Urban", "High", 90000):
            continue
        lines += [f"{loc},{wind},{a},{t},{v}" for t, v in zip(times, vals)]
    p = tmp_path / "curves.csv"
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(MissingCurve):
        load_consequence_curves(p)


def test_consist_helpers():
    c = consist_from_block(5, 2, 3)
    assert consist_to_string(c) == "NTTTN"
    assert consist_from_string("nt tt n") == c
    with pytest.raises(ValidationError):
        consist_from_string("NTX")
    with pytest.raises(ValidationError):
        consist_from_block(5, 4, 3)


def test_train_consist_length_mismatch():
    t = TrainConfig(TrainType.UNIT, 3, 100.0, (True, True))
    with pytest.raises(ValidationError) as exc:
        t.validate()
    assert exc.value.field == "train.consist"


def test_gross_tons_per_car_default():
    t = TrainConfig(TrainType.UNIT, 100, 14300.0, (True,) * 100)
    assert t.gt == 143.0 and t.lut == 1 and t.eut == 0


@pytest.mark.parametrize("m", range(6))
def test_ad_events(m):
    assert YardPlan(intermediate_yards=m).ad_events == 2 + 2 * m


def test_switch_cut_defaults_and_limits():
    assert SwitchCut(SwitchingApproach.SWITCHED_EN_MASSE, 5).total_considered == 24
    assert SwitchCut(SwitchingApproach.SWITCHED_ALONE, 5).total_considered == 5
    with pytest.raises(ValidationError):
        SwitchCut(SwitchingApproach.SWITCHED_ALONE, 21)


def test_release_config_validation():
    with pytest.raises(ValidationError):
        ReleaseConfig(1.5).validate()


def test_minimal_scenario(make_small):
    s = make_small(yards={"intermediate_yards": 0}, train={"manifest": None})
    assert s.manifest is None
    assert s.yards.ad_events == 2


def test_manifest_two_yards(make_small):
    assert make_small(yards={"intermediate_yards": 2}).yards.ad_events == 6


def test_consist_length_error_names_field(make_small):
    with pytest.raises(ValidationError) as exc:
        make_small(train={"unit": {"consist": "TTT"}})
    assert "consist" in exc.value.field


def test_unknown_key_rejected(make_small):
    with pytest.raises(ValidationError):
        make_small(release={"cpr": 0.3, "speeed": 2})


def test_manifest_block_above_twenty_rejected(make_small):
    with pytest.raises(ValidationError):
        make_small(train={"manifest": {"length_cars": 30, "consist": "T" * 21 + "N" * 9}})


def test_parse_error(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("name = [unterminated\n")
    with pytest.raises(ParseError):
        load_scenario(p)


def test_round_trip_demo(demo, tmp_path):
    path = tmp_path / "copy.toml"
    save_scenario(demo, path)
    again = load_scenario(path)
    assert scenario_to_dict(again) == scenario_to_dict(demo)
    assert dumps_scenario(again) == dumps_scenario(demo)


def test_round_trip_small(make_small, tmp_path):
    s = make_small(train={"manifest": {"consist": "TNTNNN"}}, severity={"pod": {"MainlineUnit": {"alpha": 1.0, "beta": 2.0}}})
    path = tmp_path / "small_copy.toml"
    save_scenario(s, path)
    again = load_scenario(path)
    assert scenario_to_dict(again) == scenario_to_dict(s)
    assert again.unit == s.unit and again.manifest == s.manifest
    assert dict(again.pods) == dict(s.pods)
    assert math.isclose(dict(again.pods)[list(dict(again.pods))[0]].alpha, 1.0)

import copy
from pathlib import Path

import pytest

from railhazrisk.scenario import load_scenario, parse_scenario

DEMO = Path(__file__).resolve().parents[1] / "src" / "railhazrisk" / "data" / "demo_scenario.toml"

# one cause per metric class, same split for both train types on the mainline
SYNTHETIC_CAUSES = """context,train_type,cause_group,percent,metric_class
mainline,Unit,A,50,TrainMiles
mainline,Unit,B,30,TonMiles
mainline,Unit,C,20,CarMiles
mainline,Manifest,A,50,TrainMiles
mainline,Manifest,B,30,TonMiles
mainline,Manifest,C,20,CarMiles
ad,Unit,X,100,TrainEvents
ad,Manifest,X,60,TrainEvents
ad,Manifest,Y,40,CarEvents
"""

# pre-mixed casualty curves, C(anchor, t) = level(anchor) * (1 + t / 60)
CURVE_LEVELS = {30000: 1.0, 90000: 2.5, 150000: 3.0}
CURVE_TIMES = (0.0, 4.0, 120.0)


def curve_value(anchor, t):
    return CURVE_LEVELS[anchor] * (1.0 + t / 60.0)


def write_mixed_curves(path):
    lines = ["location_class,wind_class,anchor_gallons,time_min,casualties"]
    for a in CURVE_LEVELS:
        for t in CURVE_TIMES:
            lines.append(f"Mixed,Mixed,{a},{t:g},{curve_value(a, t)!r}")
    path.write_text("\n".join(lines) + "\n")
    return path


def small_scenario_dict(tmp_path):
    """One segment, short trains, synthetic cause tables and pre-mixed curves."""
    (tmp_path / "causes.csv").write_text(SYNTHETIC_CAUSES)
    write_mixed_curves(tmp_path / "curves.csv")
    return {
        "name": "small",
        "train": {
            "unit": {"length_cars": 4, "gross_tonnage": 572.0, "loaded": True, "consist": "TTTT"},
            "manifest": {"length_cars": 6, "gross_tonnage": 400.0, "consist": "NTTNNN"},
        },
        "route": {"segments": [{"segment_id": "s1", "length_miles": 120.0, "derailment_speed_mph": 35.0}]},
        "yards": {"intermediate_yards": 1, "yard_type": "All", "switching_approach": "SwitchedAlone"},
        "tables": {"causes": "causes.csv"},
        "release": {"cpr": 0.3, "yard_speed_factor": 0.35},
        "demand": {"tank_cars_required": 9, "unit_capacity": 4, "manifest_capacity": 2},
        "curves": {"path": "curves.csv"},
    }


def merged(base, overrides):
    """Deep merge; a None value deletes the key."""
    out = copy.deepcopy(base)
    for k, v in overrides.items():
        if v is None:
            out.pop(k, None)
        elif isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merged(out[k], v)
        else:
            out[k] = v
    return out


@pytest.fixture(scope="session")
def demo():
    return load_scenario(DEMO)


@pytest.fixture
def small_dict(tmp_path):
    return small_scenario_dict(tmp_path)


@pytest.fixture
def make_small(tmp_path, small_dict):
    def build(**overrides):
        return parse_scenario(merged(small_dict, overrides), tmp_path)
    return build

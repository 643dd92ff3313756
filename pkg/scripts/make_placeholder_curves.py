"""Regenerate the synthetic consequence-curve placeholder shipped in the package.

The fire-spread curves used in the original analysis were never published, so
this writes a smooth stand-in with the right shape: zero at zero release,
growing with release size, wind, population density, and evacuation delay.
The numbers are NOT real casualty estimates. Use them for tests and demos only.

    python scripts/make_placeholder_curves.py > src/railhazrisk/data/curves_placeholder.csv
"""
import csv
import math
import sys

TIMES = [0, 4, 10, 20, 30, 45, 60, 90, 120]
LOCATION_BASE = {"Urban": 40.0, "Suburban": 8.0, "Rural": 0.5}
WIND_FACTOR = {"Low": 1.0, "Medium": 1.6, "High": 3.0}
ANCHOR_FACTOR = {30000: 1.0, 90000: 2.4, 150000: 3.5}
TIME_SCALE = 25.0


def casualties(location, wind, anchor, t):
    ramp = 0.05 + 0.95 * (1.0 - math.exp(-t / TIME_SCALE))
    return LOCATION_BASE[location] * WIND_FACTOR[wind] * ANCHOR_FACTOR[anchor] * ramp


def main():
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["location_class", "wind_class", "anchor_gallons", "time_min", "casualties"])
    for loc in LOCATION_BASE:
        for wind in WIND_FACTOR:
            for anchor in ANCHOR_FACTOR:
                for t in TIMES:
                    w.writerow([loc, wind, anchor, t, f"{casualties(loc, wind, anchor, t):.6f}"])


if __name__ == "__main__":
    main()

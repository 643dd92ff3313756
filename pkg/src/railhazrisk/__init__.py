"""Release risk of hazardous materials shipped by unit and manifest trains.

The analytic chain runs from derailment probabilities through the number of
tank cars derailed and releasing, to total gallons released and expected
casualties. ``railhazrisk.oracle`` is an independent Monte Carlo check of the
release-count distributions.
"""
from .errors import RiskInputError, ValidationError
from .report import demand_total_casualties
from .scenario import load_scenario

__all__ = ["RiskInputError", "ValidationError", "demand_total_casualties", "load_scenario"]
__version__ = "0.1.0"

"""Where a derailment starts and how many cars it takes with it.

Line-haul and A/D incidents: the normalized point of derailment (POD) is Beta
distributed, and the number of cars derailed behind it is a truncated
geometric whose stop probability is the logistic of a linear score ``z``.
Yard switching incidents use a discretized generalized-exponential count,
truncated at 20 cars (or the cars remaining in the cut) with the tail lumped
onto the cap.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import betainc, expit

from .model import (
    PodModel,
    RouteSegment,
    SeverityModel,
    TrainConfig,
    YardSeverityModel,
)
from .pmf import DiscretePmf

Z_CONTEXTS = ("mainline", "yard", "terminal")


def pod_pmf(model: PodModel, L: int) -> DiscretePmf:
    """POD over positions 1..L as consecutive differences of the Beta CDF."""
    if L < 1:
        raise ValueError("train length must be >= 1")
    edges = betainc(model.alpha, model.beta, np.arange(L + 1) / L)
    masses = np.zeros(L + 1)
    masses[1:] = np.diff(edges)
    return DiscretePmf(masses)


def z_value(context: str, train: TrainConfig, segment: RouteSegment | None, L_r: int,
            coeffs: SeverityModel = SeverityModel()) -> float:
    if context == "mainline":
        c = coeffs.mainline
        return (c.intercept + c.ds * segment.derailment_speed_mph + c.lr * L_r
                + c.gt * train.gt + c.eut * train.eut + c.lut * train.lut)
    if context == "yard":
        return coeffs.yard.intercept + coeffs.yard.l * train.length_cars
    if context == "terminal":
        return coeffs.terminal.intercept + coeffs.terminal.l * train.length_cars
    raise ValueError(f"unknown severity context {context!r}; expected one of {Z_CONTEXTS}")


def linehaul_severity_pmf(z: float, L_r: int) -> DiscretePmf:
    """Cars derailed x = 1..L_r given the POD leaves L_r cars at risk.

    P(x) = p (1-p)^(x-1) / (1 - (1-p)^L_r), p = exp(z) / (1 + exp(z)).
    """
    if L_r < 1:
        raise ValueError("L_r must be >= 1")
    p = expit(z)
    log_q = -math.log1p(math.exp(z)) if z < 30 else -z - math.log1p(math.exp(-z))
    x = np.arange(1, L_r + 1)
    norm = -math.expm1(L_r * log_q)
    masses = np.zeros(L_r + 1)
    masses[1:] = p * np.exp((x - 1) * log_q) / norm
    return DiscretePmf(masses)


def severity_by_pod(context, train: TrainConfig, segment=None, coeffs=SeverityModel()):
    """Severity pmf for every POD k = 1..L; entry 0 is unused (None)."""
    L = train.length_cars
    out = [None]
    fixed_z = None if context == "mainline" else z_value(context, train, segment, 1, coeffs)
    for k in range(1, L + 1):
        L_r = L - k + 1
        z = fixed_z if fixed_z is not None else z_value(context, train, segment, L_r, coeffs)
        out.append(linehaul_severity_pmf(z, L_r))
    return out


def _ge_support_end(model: YardSeverityModel) -> int:
    # exp(-rate * n) below 1e-18 past this point
    return model.truncation_cap + int(math.ceil(42.0 / model.rate)) + 1


@lru_cache(maxsize=64)
def yard_base_masses(model: YardSeverityModel) -> np.ndarray:
    """Normalized untruncated f(x); index 0 unused, indices 1..N hold f(1..N)."""
    if model.masses is not None:
        f = np.concatenate(([0.0], np.asarray(model.masses, dtype=float)))
    else:
        x = np.arange(1, _ge_support_end(model) + 1, dtype=float)
        a, lam = model.shape, model.rate
        dens = a * lam * np.exp(-lam * x) * (-np.expm1(-lam * x)) ** (a - 1.0)
        f = np.concatenate(([0.0], dens / dens.sum()))
    f.setflags(write=False)
    return f


def yard_switch_severity_pmf(model: YardSeverityModel, L: int, k: int) -> DiscretePmf:
    """Cars derailed x = 1..cap given the first derailed car is k-th of L in the cut."""
    if not 1 <= k <= L:
        raise ValueError(f"first derailed car {k} outside 1..{L}")
    cap = min(model.truncation_cap, L - k + 1)
    f = yard_base_masses(model)
    if f.size < cap + 1:
        f = np.pad(f, (0, cap + 1 - f.size))
    masses = np.zeros(cap + 1)
    masses[1:cap] = f[1:cap]
    masses[cap] = f[cap:].sum()
    return DiscretePmf(masses)

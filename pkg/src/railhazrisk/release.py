"""Number of tank cars releasing, given a derailment and per shipment.

Mainline incidents go through position-dependent derailment probabilities and
a Poisson-Binomial count over the tank positions. A/D and yard-switching
incidents first build the distribution of tank cars derailed, then thin it
binomially with the yard-reduced release probability. Zero classes that the
event-chain formulas leave implicit are filled in as complements.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    SwitchCut,
    SwitchingApproach,
    YardSeverityModel,
)
from .pmf import DiscretePmf
from .severity import yard_switch_severity_pmf


def _arr(p):
    return p.masses if isinstance(p, DiscretePmf) else np.asarray(p, dtype=float)


@dataclass(frozen=True, eq=False)
class PositionProfile:
    derail_prob: np.ndarray   # PD(j | derailment), index j-1
    release_prob: np.ndarray  # R(j | derailment), zero at non-tank positions

    @classmethod
    def build(cls, derail_prob, consist, cpr):
        pd = np.asarray(derail_prob, dtype=float)
        tank = np.asarray(consist, dtype=bool)
        if pd.shape != tank.shape:
            raise ValueError("derail_prob and consist must have the same length")
        return cls(pd, np.where(tank, pd * cpr, 0.0))


def position_derail_probs(pod, severity, L: int) -> np.ndarray:
    """PD(j) = sum_{k<=j} pod(k) * P(x >= j-k+1 | POD=k), for j = 1..L.

    ``severity[k]`` is the severity pmf (index = cars derailed) for POD k.
    """
    pod = _arr(pod)
    pd = np.zeros(L)
    for k in range(1, L + 1):
        w = pod[k] if k < pod.size else 0.0
        if w == 0.0:
            continue
        sev = _arr(severity[k])
        L_r = L - k + 1
        # survival S(m) = P(x >= m), m = 1..L_r
        surv = np.cumsum(sev[::-1])[::-1][1:]
        n = min(L_r, surv.size)
        pd[k - 1:k - 1 + n] += w * surv[:n]
    return pd


def poisson_binomial_pmf(probs) -> DiscretePmf:
    """Exact pmf of a sum of independent Bernoulli(probs[i]) by convolution."""
    probs = np.asarray(probs, dtype=float)
    out = np.zeros(probs.size + 1)
    out[0] = 1.0
    for i, r in enumerate(probs):
        # in place, highest index first
        out[1:i + 2] = out[1:i + 2] * (1.0 - r) + out[0:i + 1] * r
        out[0] *= 1.0 - r
    return DiscretePmf(out)


def release_count_pmf_mainline(profile: PositionProfile, consist=None) -> DiscretePmf:
    """Released tank cars given a mainline derailment.

    Only tank positions take part, so the support runs over 0..TT. Without a
    consist, positions with zero release probability are dropped.
    """
    if consist is not None:
        probs = profile.release_prob[np.asarray(consist, dtype=bool)]
    else:
        probs = profile.release_prob[profile.release_prob > 0]
    return poisson_binomial_pmf(probs)


def ad_tank_derail_pmf(pod, severity, consist) -> DiscretePmf:
    """Tank cars derailed given an A/D incident.

    The derailed block for POD k and severity x is positions k..k+x-1.
    """
    tank = np.asarray(consist, dtype=int)
    L = tank.size
    prefix = np.concatenate(([0], np.cumsum(tank)))
    pod = _arr(pod)
    out = np.zeros(int(prefix[-1]) + 1)
    for k in range(1, L + 1):
        w = pod[k] if k < pod.size else 0.0
        if w == 0.0:
            continue
        sev = _arr(severity[k])
        n = min(sev.size - 1, L - k + 1)
        x = np.arange(1, n + 1)
        counts = prefix[k - 1 + x] - prefix[k - 1]
        out += np.bincount(counts, weights=w * sev[1:n + 1], minlength=out.size)[: out.size]
    return DiscretePmf(out)


def _binomial_rows(n_max, q):
    """rows[y] = Binomial(y, q) pmf padded to n_max+1."""
    rows = np.zeros((n_max + 1, n_max + 1))
    rows[0, 0] = 1.0
    for y in range(1, n_max + 1):
        rows[y, 1:] = rows[y - 1, :-1] * q
        rows[y, :] += rows[y - 1, :] * (1.0 - q)
    return rows


def thin_release_pmf(derail_pmf: DiscretePmf, cpr: float, factor: float = 1.0) -> DiscretePmf:
    """Each derailed tank car releases independently with probability factor * cpr."""
    d = _arr(derail_pmf)
    q = factor * cpr
    rows = _binomial_rows(d.size - 1, q)
    return DiscretePmf(d @ rows)


def fcd_pmf(cut: SwitchCut) -> DiscretePmf:
    tcc = cut.total_considered
    masses = np.full(tcc + 1, 1.0 / tcc)
    masses[0] = 0.0
    return DiscretePmf(masses)


# The first derailed car is uniform over the cut, so both approaches sum the
# severity masses and divide by the cut length once at the end.

def _switched_alone(cut, yard_sev):
    tcc = cut.total_considered
    sev = [None] + [yard_switch_severity_pmf(yard_sev, tcc, k) for k in range(1, tcc + 1)]
    mass = [0.0] * (cut.tank_count + 1)
    for x in range(1, cut.tank_count + 1):
        acc = 0.0
        for k in range(1, tcc - x + 2):
            acc += sev[k][x]
        mass[x] = acc / tcc
    return mass


def _switched_en_masse(cut, yard_sev):
    tcc = cut.total_considered
    buf = cut.buffer_cars
    sev = [None] + [yard_switch_severity_pmf(yard_sev, tcc, k) for k in range(1, tcc + 1)]
    mass = [0.0] * (cut.tank_count + 1)
    for x in range(1, cut.tank_count + 1):
        head = 0.0
        # first derailed car inside the buffer: cars k..buf plus x tank cars derail
        for k in range(1, buf + 1):
            head += sev[k][buf - k + 1 + x]
        acc = head
        for k in range(buf + 1, tcc - x + 2):
            acc += sev[k][x]
        mass[x] = acc / tcc
    return mass


def switch_tank_derail_pmf(cut: SwitchCut, yard_sev: YardSeverityModel) -> DiscretePmf:
    """Tank cars derailed given a yard switching incident on this cut."""
    if cut.approach is SwitchingApproach.SWITCHED_ALONE and cut.buffer_cars == 0:
        mass = _switched_alone(cut, yard_sev)
    else:
        mass = _switched_en_masse(cut, yard_sev)
    mass[0] = max(0.0, 1.0 - sum(mass[1:]))
    return DiscretePmf(np.array(mass))


def per_shipment_release_pmf(conditional: DiscretePmf, derailment_prob: float) -> DiscretePmf:
    """Remove the conditioning on a derailment: scale x >= 1, complement at 0."""
    return per_shipment_mixture([(conditional, derailment_prob)])


def per_shipment_mixture(branches) -> DiscretePmf:
    """Several mutually exclusive incident branches [(conditional pmf, probability), ...]."""
    size = max(len(c) for c, _ in branches)
    out = np.zeros(size)
    for cond, p in branches:
        m = _arr(cond)
        out[1:m.size] += p * m[1:]
    out[0] = 1.0 - out[1:].sum()
    return DiscretePmf(out)

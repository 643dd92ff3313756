"""Dense probability mass functions on non-negative integer supports.

A :class:`DiscretePmf` is the common currency between the modules: counts of
cars (index = number of cars) or release quantities on a 750-gallon lattice
(index g = 750*g gallons). Lattice pmfs carry an ``overflow`` bucket for mass
that fell beyond the tracked range.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import SupportMismatch

GALLONS_PER_STEP = 750
NORMALIZATION_TOL = 1e-9


class SupportKind(str, enum.Enum):
    COUNT = "Count"
    GALLON_LATTICE_750 = "GallonLattice750"


@dataclass(frozen=True, eq=False)
class DiscretePmf:
    masses: np.ndarray
    kind: SupportKind = SupportKind.COUNT
    overflow: float = 0.0
    # True for pmfs that deliberately leave out the zero class (e.g. given-release)
    omits_zero: bool = False

    def __post_init__(self):
        m = np.array(self.masses, dtype=float)
        if m.ndim != 1:
            raise ValueError("masses must be one-dimensional")
        if m.size and m.min() < -1e-15:
            raise ValueError(f"negative mass {m.min()!r}")
        m = np.clip(m, 0.0, None)
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "kind", SupportKind(self.kind))

    @classmethod
    def point(cls, n, kind=SupportKind.COUNT):
        m = np.zeros(n + 1)
        m[n] = 1.0
        return cls(m, kind)

    @classmethod
    def from_dict(cls, d, kind=SupportKind.COUNT):
        if not d:
            return cls(np.zeros(1), kind)
        m = np.zeros(max(d) + 1)
        for k, v in d.items():
            m[k] = v
        return cls(m, kind)

    def to_dict(self, tol=0.0):
        return {int(i): float(p) for i, p in enumerate(self.masses) if p > tol}

    def __len__(self):
        return self.masses.size

    def __getitem__(self, i):
        if 0 <= i < self.masses.size:
            return float(self.masses[i])
        return 0.0

    @property
    def max_index(self):
        return self.masses.size - 1

    def total(self):
        return float(self.masses.sum()) + self.overflow

    def is_normalized(self, tol=NORMALIZATION_TOL):
        return abs(self.total() - 1.0) <= tol

    def mean(self):
        idx = np.arange(self.masses.size)
        return float(idx @ self.masses)

    def variance(self):
        idx = np.arange(self.masses.size)
        mu = self.mean()
        return float(((idx - mu) ** 2) @ self.masses)

    def cdf(self):
        return np.cumsum(self.masses)

    def prob_positive(self):
        return float(self.masses[1:].sum()) + self.overflow

    def padded(self, size):
        """Masses as a fresh array of at least ``size`` entries."""
        out = np.zeros(max(size, self.masses.size))
        out[: self.masses.size] = self.masses
        return out

    def trimmed(self, tol=0.0):
        """Drop trailing entries with mass <= tol (keeps index 0)."""
        nz = np.nonzero(self.masses > tol)[0]
        end = int(nz[-1]) + 1 if nz.size else 1
        return DiscretePmf(self.masses[:end], self.kind, self.overflow, self.omits_zero)


def mixture(pmfs, weights):
    """Weighted sum of pmfs sharing one support kind."""
    pmfs = list(pmfs)
    kinds = {p.kind for p in pmfs}
    if len(kinds) != 1:
        raise SupportMismatch(f"cannot mix supports {sorted(k.value for k in kinds)}")
    size = max(len(p) for p in pmfs)
    acc = np.zeros(size)
    overflow = 0.0
    for p, w in zip(pmfs, weights):
        acc[: len(p)] += w * p.masses
        overflow += w * p.overflow
    return DiscretePmf(acc, kinds.pop(), overflow)


def gallons(index):
    return index * GALLONS_PER_STEP

"""Occupancy statistics, Ewens weights and their one-vertex increments.

Weights are carried multiplicatively: ``ewens_weight`` returns ``exp(H)`` as
an exact rational, and :func:`log_weight` is the float logarithm of it.
Functions that take a configuration also accept a plain sequence of spins.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Optional, Sequence, Union

from .errors import ConstraintError, EmptyDomainError
from .exact import as_theta
from .partitions import AlleleCounts, esf_normalizer
from .tree import SpinConfiguration

Spins = Union[SpinConfiguration, Sequence[int]]


def spin_values(config: Spins) -> list[int]:
    if isinstance(config, SpinConfiguration):
        return config.values()
    return [int(s) for s in config]


@dataclass(frozen=True)
class Occupancy:
    """``counts[j-1] = b_j``: number of spin values used exactly ``j`` times."""

    size: int
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.counts) != self.size:
            raise ConstraintError("occupancy vector length must equal the region size")
        if sum(j * b for j, b in enumerate(self.counts, start=1)) != self.size:
            raise ConstraintError(f"sum of j*b_j differs from {self.size}")

    def b(self, j: int) -> int:
        return self.counts[j - 1] if 1 <= j <= self.size else 0

    def as_allele_counts(self) -> AlleleCounts:
        if self.size == 0:
            raise EmptyDomainError("empty configuration has no partition")
        return AlleleCounts(self.counts)


def occupancy(config: Spins) -> Occupancy:
    values = spin_values(config)
    counts = [0] * len(values)
    for m in Counter(values).values():
        counts[m - 1] += 1
    return Occupancy(len(values), tuple(counts))


def multiplicity(config: Spins, s: int) -> int:
    """How many vertices carry spin ``s``."""
    return sum(1 for t in spin_values(config) if t == s)


def _weight_from_occupancy(occ: Occupancy, theta: Fraction) -> Fraction:
    w = Fraction(1)
    for j, bj in enumerate(occ.counts, start=1):
        if bj:
            w *= (theta / j) ** bj / math.factorial(bj)
    return w


def ewens_weight(config: Spins, theta) -> Fraction:
    """``exp(H)`` for the configuration: ``prod_j (theta/j)^{b_j} / b_j!``."""
    return _weight_from_occupancy(occupancy(config), as_theta(theta))


def log_weight(config: Spins, theta) -> float:
    """``H = sum_j [b_j ln(theta/j) - ln b_j!]`` in double precision."""
    theta = as_theta(theta)
    log_theta = math.log(theta.numerator) - math.log(theta.denominator)
    return sum(
        bj * (log_theta - math.log(j)) - math.lgamma(bj + 1)
        for j, bj in enumerate(occupancy(config).counts, start=1)
        if bj
    )


def config_probability(config: Spins, theta) -> Fraction:
    values = spin_values(config)
    if not values:
        raise EmptyDomainError("configuration probability needs at least one vertex")
    return ewens_weight(values, theta) / esf_normalizer(len(values), theta)


@dataclass(frozen=True)
class IncrementFactor:
    factor: Fraction
    case: Literal["fresh", "repeat"]
    i0: Optional[int] = None

    @property
    def log(self) -> float:
        return math.log(self.factor)


def _fresh_factor(occ: Occupancy, theta: Fraction) -> Fraction:
    return theta / (occ.b(1) + 1)


def _repeat_factor(occ: Occupancy, i0: int) -> Fraction:
    return Fraction(i0 * occ.b(i0), (i0 + 1) * (occ.b(i0 + 1) + 1))


def increment_factor(config: Spins, s: int, theta) -> IncrementFactor:
    """Ratio ``W(config + s) / W(config)`` for one added vertex with spin ``s``."""
    theta = as_theta(theta)
    occ = occupancy(config)
    i0 = multiplicity(config, s)
    if i0 == 0:
        return IncrementFactor(_fresh_factor(occ, theta), "fresh")
    return IncrementFactor(_repeat_factor(occ, i0), "repeat", i0)


def distinct_multiplicity_count(config: Spins, s: int) -> int:
    """Distinct values occurring as often as ``s`` does.

    This is the literal reading of the index in the consistency equation's
    statement; :func:`increment_factor` uses :func:`multiplicity` instead,
    which is what the weight ratio actually requires.
    """
    m = multiplicity(config, s)
    return 0 if m == 0 else occupancy(config).b(m)


# --------------------------------------------------------------------------
# summability of the potential


def _log_theta(theta: Fraction) -> float:
    return math.log(theta.numerator) - math.log(theta.denominator)


def potential_sup_term(n: int, theta) -> float:
    """``|ln(theta^n / n!)|``, the sup-norm of the region potential at size ``n``."""
    if n < 1:
        raise EmptyDomainError(f"n must be positive, got {n}")
    return abs(n * _log_theta(as_theta(theta)) - math.lgamma(n + 1))


def stirling_index(theta, bound: float) -> int:
    """Smallest ``n`` with ``n (ln(n/theta) - 1) > bound``.

    Since ``ln n! >= n ln n - n``, the left side is a lower bound for the
    potential term, so the term exceeds ``bound`` at this index at the latest.
    """
    theta = as_theta(theta)
    lt = _log_theta(theta)

    def lower(n: int) -> float:
        return n * (math.log(n) - lt - 1.0)

    hi = 1
    while lower(hi) <= bound:
        hi *= 2
    lo = hi // 2 + 1 if hi > 1 else 1
    # lower() is increasing once positive, so bisect on [lo, hi]
    while lo < hi:
        mid = (lo + hi) // 2
        if lower(mid) > bound:
            hi = mid
        else:
            lo = mid + 1
    return hi


@dataclass
class SummabilityReport:
    theta: Fraction
    bound: float
    n_max: int
    terms: list[tuple[int, float]] = field(default_factory=list)
    first_crossing: Optional[int] = None
    stirling_index: int = 0

    @property
    def verdict(self) -> str:
        return "divergent" if self.first_crossing is not None else "inconclusive"

    def to_json(self) -> dict:
        return {
            "theta": str(self.theta),
            "bound": self.bound,
            "n_max": self.n_max,
            "terms": [{"n": n, "t": t} for n, t in self.terms],
            "first_crossing": self.first_crossing,
            "stirling_index": self.stirling_index,
            "verdict": self.verdict,
        }


def summability_scan(theta, bound: float, n_max: int) -> SummabilityReport:
    """Look for the first region size whose potential term exceeds ``bound``.

    A crossing certifies that the terms do not tend to zero, so the sum over
    regions through a vertex diverges.
    """
    theta = as_theta(theta)
    if not bound > 0:
        raise ConstraintError(f"bound must be positive, got {bound}")
    if n_max < 1:
        raise ConstraintError(f"n_max must be positive, got {n_max}")
    report = SummabilityReport(theta, float(bound), n_max, stirling_index=stirling_index(theta, bound))
    for n in range(1, n_max + 1):
        t = potential_sup_term(n, theta)
        report.terms.append((n, t))
        if t > bound:
            report.first_crossing = n
            break
    return report


def occupancy_after(occ: Occupancy, i0: int) -> Occupancy:
    """Occupancy after adding one vertex whose spin already had multiplicity ``i0``."""
    counts = list(occ.counts) + [0]
    if i0 == 0:
        counts[0] += 1
    else:
        counts[i0 - 1] -= 1
        counts[i0] += 1
    return Occupancy(occ.size + 1, tuple(counts))


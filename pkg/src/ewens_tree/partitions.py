"""Integer partitions and the Ewens sampling formula.

A partition of ``n`` is stored as its multiplicity vector ``(a_1, ..., a_n)``
where ``a_j`` counts the blocks of size ``j``.  Everything on the exact path
uses :class:`fractions.Fraction`; only the sampler touches floats.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Iterable, Iterator, Mapping

import numpy as np
from scipy import stats

from .errors import ConstraintError, EmptyDomainError, ResourceBoundError
from .exact import as_theta

MAX_ORACLE_N = 8


@dataclass(frozen=True)
class AlleleCounts:
    """Multiplicity vector ``counts[j-1] = a_j`` of a partition of ``n``."""

    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if not counts:
            raise EmptyDomainError("a partition needs n >= 1")
        if any(c < 0 for c in counts):
            raise ConstraintError(f"negative multiplicity in {counts}")
        total = sum(j * c for j, c in enumerate(counts, start=1))
        if total != len(counts):
            raise ConstraintError(
                f"sum of j*a_j is {total}, expected n={len(counts)} for {counts}"
            )

    @property
    def n(self) -> int:
        return len(self.counts)

    def a(self, j: int) -> int:
        """Number of blocks of size ``j`` (zero outside ``1..n``)."""
        return self.counts[j - 1] if 1 <= j <= self.n else 0

    @property
    def blocks(self) -> int:
        return sum(self.counts)

    @classmethod
    def from_block_sizes(cls, sizes: Iterable[int]) -> "AlleleCounts":
        sizes = list(sizes)
        n = sum(sizes)
        if n < 1:
            raise EmptyDomainError("a partition needs n >= 1")
        counts = [0] * n
        for size in sizes:
            if size < 1:
                raise ConstraintError(f"block size must be positive, got {size}")
            counts[size - 1] += 1
        return cls(tuple(counts))

    @classmethod
    def parse(cls, text: str) -> "AlleleCounts":
        body = text.strip().strip("()[]")
        return cls(tuple(int(part) for part in body.split(",") if part.strip()))

    def __str__(self) -> str:
        return "(" + ",".join(str(c) for c in self.counts) + ")"


def _check_n(n: int) -> None:
    if n < 1:
        raise EmptyDomainError(f"n must be a positive integer, got {n}")


def _descending_parts(n: int, largest: int) -> Iterator[list[int]]:
    if n == 0:
        yield []
        return
    for part in range(min(n, largest), 0, -1):
        for rest in _descending_parts(n - part, part):
            yield [part, *rest]


def enumerate_partitions(n: int) -> list[AlleleCounts]:
    """All partitions of ``n``.

    Order: lexicographic on the reversed vector ``(a_n, ..., a_1)``, descending.
    For ``n = 3`` this gives ``(0,0,1), (1,1,0), (3,0,0)``.
    """
    _check_n(n)
    parts = [AlleleCounts.from_block_sizes(p) for p in _descending_parts(n, n)]
    parts.sort(key=lambda a: a.counts[::-1], reverse=True)
    return parts


def rising_factorial(x: Fraction, n: int) -> Fraction:
    out = Fraction(1)
    for i in range(n):
        out *= x + i
    return out


def esf_normalizer(n: int, theta) -> Fraction:
    """``Z_n(theta) = theta (theta+1) ... (theta+n-1) / n!``."""
    _check_n(n)
    theta = as_theta(theta)
    return rising_factorial(theta, n) / math.factorial(n)


def esf_weight(a: AlleleCounts, theta) -> Fraction:
    """Unnormalised ESF term ``prod_j (theta/j)^{a_j} / a_j!``."""
    theta = as_theta(theta)
    w = Fraction(1)
    for j, aj in enumerate(a.counts, start=1):
        if aj:
            w *= (theta / j) ** aj / math.factorial(aj)
    return w


def esf_probability(a: AlleleCounts, theta) -> Fraction:
    if not isinstance(a, AlleleCounts):
        a = AlleleCounts(tuple(a))
    return esf_weight(a, theta) / esf_normalizer(a.n, theta)


def esf_distribution(n: int, theta) -> dict[AlleleCounts, Fraction]:
    """Exact ESF law over :func:`enumerate_partitions` order."""
    theta = as_theta(theta)
    return {a: esf_probability(a, theta) for a in enumerate_partitions(n)}


# --------------------------------------------------------------------------
# sampling


def _crp_labels(n: int, theta: float, rng: np.random.Generator) -> list[int]:
    labels = [0]
    sizes = [1]
    uniforms = rng.random(n - 1)
    for i in range(1, n):
        # customer i+1 sees i seated customers
        x = uniforms[i - 1] * (i + theta)
        table = len(sizes)
        acc = 0.0
        for t, m in enumerate(sizes):
            acc += m
            if x < acc:
                table = t
                break
        if table == len(sizes):
            sizes.append(1)
        else:
            sizes[table] += 1
        labels.append(table)
    return labels


def _labels_to_counts(labels: list[int]) -> AlleleCounts:
    return AlleleCounts.from_block_sizes(Counter(labels).values())


def crp_sample(n: int, theta, seed: int) -> tuple[list[int], AlleleCounts]:
    """One Chinese restaurant process draw of ``n`` labels.

    Labels are table indices in order of opening.  The seed fully determines
    the output.
    """
    _check_n(n)
    theta_f = float(as_theta(theta))
    rng = np.random.default_rng(seed)
    labels = _crp_labels(n, theta_f, rng)
    return labels, _labels_to_counts(labels)


def sample_partitions(n: int, theta, count: int, seed: int) -> Counter:
    """Tally of ``count`` CRP partitions drawn from one seeded generator."""
    _check_n(n)
    if count < 1:
        raise ConstraintError(f"count must be positive, got {count}")
    theta_f = float(as_theta(theta))
    rng = np.random.default_rng(seed)
    tally: Counter = Counter()
    for _ in range(count):
        tally[_labels_to_counts(_crp_labels(n, theta_f, rng))] += 1
    return tally


@dataclass(frozen=True)
class GoodnessOfFit:
    statistic: float
    dof: int
    p_value: float

    def passes(self, alpha: float = 1e-3) -> bool:
        return self.p_value > alpha


def esf_goodness_of_fit(tally: Mapping[AlleleCounts, int], n: int, theta) -> GoodnessOfFit:
    """Pearson chi-square of observed partition counts against the exact ESF."""
    probs = esf_distribution(n, theta)
    unknown = set(tally) - set(probs)
    if unknown:
        raise ConstraintError(f"observations outside partitions of {n}: {unknown}")
    total = sum(tally.values())
    observed = np.array([tally.get(a, 0) for a in probs], dtype=float)
    expected = np.array([float(p) * total for p in probs.values()])
    if len(probs) == 1:
        return GoodnessOfFit(0.0, 0, 1.0)
    statistic, p_value = stats.chisquare(observed, expected)
    return GoodnessOfFit(float(statistic), len(probs) - 1, float(p_value))


# --------------------------------------------------------------------------
# oracle


def cycle_type(perm: tuple[int, ...]) -> AlleleCounts:
    seen = [False] * len(perm)
    lengths = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        i = start
        while not seen[i]:
            seen[i] = True
            i = perm[i]
            length += 1
        lengths.append(length)
    return AlleleCounts.from_block_sizes(lengths)


def permutation_cycle_oracle(n: int) -> dict[AlleleCounts, Fraction]:
    """Cycle-type frequencies over all of ``S_n`` (the ESF at theta = 1)."""
    _check_n(n)
    if n > MAX_ORACLE_N:
        raise ResourceBoundError(f"n={n} exceeds the oracle bound {MAX_ORACLE_N}")
    tally = Counter(cycle_type(p) for p in permutations(range(n)))
    total = math.factorial(n)
    return {a: Fraction(c, total) for a, c in tally.items()}

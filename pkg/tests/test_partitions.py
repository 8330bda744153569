import math
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ewens_tree.errors import ConstraintError, EmptyDomainError, ResourceBoundError
from ewens_tree.partitions import (
    AlleleCounts,
    crp_sample,
    cycle_type,
    enumerate_partitions,
    esf_distribution,
    esf_goodness_of_fit,
    esf_normalizer,
    esf_probability,
    permutation_cycle_oracle,
    sample_partitions,
)


def euler_partition_count(n):
    # pentagonal number recurrence, independent of the enumerator
    p = [1] + [0] * n
    for m in range(1, n + 1):
        total, k = 0, 1
        while True:
            g1 = k * (3 * k - 1) // 2
            g2 = k * (3 * k + 1) // 2
            if g1 > m:
                break
            sign = 1 if k % 2 else -1
            total += sign * p[m - g1]
            if g2 <= m:
                total += sign * p[m - g2]
            k += 1
        p[m] = total
    return p[n]


def test_enumerate_small():
    assert enumerate_partitions(1) == [AlleleCounts((1,))]
    assert [a.counts for a in enumerate_partitions(3)] == [(0, 0, 1), (1, 1, 0), (3, 0, 0)]


@pytest.mark.parametrize("n", range(1, 16))
def test_enumerate_count_matches_euler(n):
    parts = enumerate_partitions(n)
    assert len(parts) == euler_partition_count(n)
    assert len(set(parts)) == len(parts)


def test_enumerate_twelve():
    assert len(enumerate_partitions(12)) == 77


def test_enumerate_rejects_zero():
    with pytest.raises(EmptyDomainError):
        enumerate_partitions(0)


def test_allele_counts_constraint():
    with pytest.raises(ConstraintError):
        AlleleCounts((1, 1))
    with pytest.raises(ConstraintError):
        AlleleCounts((3, -1, 1))
    assert AlleleCounts.parse("(1,1,0)") == AlleleCounts((1, 1, 0))
    assert str(AlleleCounts((1, 1, 0))) == "(1,1,0)"


@pytest.mark.parametrize(
    "n, theta, expected",
    [(1, 1, Fraction(1)), (2, 1, Fraction(1)), (3, Fraction(1, 2), Fraction(5, 16))],
)
def test_normalizer_examples(n, theta, expected):
    assert esf_normalizer(n, theta) == expected


def test_normalizer_recursion():
    for theta in (Fraction(1, 2), Fraction(1), Fraction(2), Fraction(7, 3)):
        for n in range(1, 21):
            assert esf_normalizer(n + 1, theta) * (n + 1) == esf_normalizer(n, theta) * (theta + n)


def test_normalizer_rejects_bad_theta():
    with pytest.raises(ConstraintError):
        esf_normalizer(3, 0)
    with pytest.raises(ConstraintError):
        esf_normalizer(3, 0.5)


def test_probability_examples():
    assert esf_probability(AlleleCounts((1,)), Fraction(7, 3)) == 1
    assert esf_probability(AlleleCounts((0, 0, 1)), 1) == Fraction(1, 3)
    assert esf_probability(AlleleCounts((3, 0, 0)), 2) == Fraction(1, 3)


@pytest.mark.parametrize("theta", [Fraction(1, 2), Fraction(1), Fraction(2), Fraction(7, 3)])
def test_normalization_exact(theta):
    for n in range(1, 13):
        assert sum(esf_distribution(n, theta).values()) == 1


def test_probability_rejects_invalid_counts():
    with pytest.raises(ConstraintError):
        esf_probability((2, 1), 1)


def test_cycle_type():
    assert cycle_type((1, 2, 0, 3)) == AlleleCounts((1, 0, 1, 0))


def test_oracle_examples():
    assert permutation_cycle_oracle(1) == {AlleleCounts((1,)): 1}
    assert permutation_cycle_oracle(3) == {
        AlleleCounts((3, 0, 0)): Fraction(1, 6),
        AlleleCounts((1, 1, 0)): Fraction(1, 2),
        AlleleCounts((0, 0, 1)): Fraction(1, 3),
    }
    assert permutation_cycle_oracle(5)[AlleleCounts((5, 0, 0, 0, 0))] == Fraction(1, 120)


def test_oracle_bound():
    with pytest.raises(ResourceBoundError):
        permutation_cycle_oracle(9)


@pytest.mark.parametrize("n", range(1, 8))
def test_oracle_equals_esf_at_theta_one(n):
    oracle = permutation_cycle_oracle(n)
    assert sum(oracle.values()) == 1
    assert oracle == esf_distribution(n, 1)


def test_crp_single():
    for seed in (0, 1, 2**63 - 1):
        assert crp_sample(1, 1, seed) == ([0], AlleleCounts((1,)))


def test_crp_deterministic_and_consistent():
    labels, counts = crp_sample(20, Fraction(3, 2), 42)
    assert crp_sample(20, Fraction(3, 2), 42) == (labels, counts)
    assert labels[0] == 0
    # tables open in order
    assert all(l <= max(labels[:i], default=-1) + 1 for i, l in enumerate(labels))
    assert counts == AlleleCounts.from_block_sizes(Counter(labels).values())


def test_crp_large_theta_two_singletons():
    theta = 1000
    trials = 100_000
    tally = sample_partitions(2, theta, trials, seed=5)
    p = theta / (theta + 1)
    sigma = math.sqrt(p * (1 - p) / trials)
    assert abs(tally[AlleleCounts((2, 0))] / trials - p) <= 3 * sigma


@pytest.mark.slow
@pytest.mark.parametrize("n, theta", [(4, 1), (4, 2), (6, 1), (6, 2)])
def test_sampler_chi_square(n, theta):
    tally = sample_partitions(n, theta, 100_000, seed=1234 + n)
    assert esf_goodness_of_fit(tally, n, theta).p_value > 1e-3


def test_goodness_of_fit_rejects_wrong_law():
    tally = sample_partitions(5, 1, 20_000, seed=3)
    assert esf_goodness_of_fit(tally, 5, 4).p_value < 1e-3


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=6), min_size=1, max_size=8))
def test_block_sizes_roundtrip(sizes):
    a = AlleleCounts.from_block_sizes(sizes)
    assert a.n == sum(sizes)
    assert a.blocks == len(sizes)
    assert a in enumerate_partitions(a.n)

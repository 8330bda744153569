"""Acceptance criteria 1 to 9.

Each test is named ``test_criterion_<k>_...``; ``conftest.py`` folds the
outcomes into one PASS/FAIL line per criterion at the end of the run.
Oracles here are written from scratch and share no code with the package
beyond the functions under test.
"""
import itertools
import json
import math
import random
import subprocess
import sys
import time
from collections import Counter
from fractions import Fraction

import pytest
from scipy.stats import chi2

from ewens_tree import cli
from ewens_tree import consistency as fc
from ewens_tree import hamiltonian as ham
from ewens_tree.partitions import (
    AlleleCounts,
    enumerate_partitions,
    esf_normalizer,
    esf_probability,
    sample_partitions,
)
from ewens_tree.tree import configurations
from ewens_tree.verify import growth_steps, random_field_table, solver_instances

HALF = Fraction(1, 2)


def counts_from_sizes(sizes, n):
    c = [0] * n
    for s in sizes:
        c[s - 1] += 1
    return tuple(c)


def brute_weight(spins, theta):
    mult = Counter(Counter(spins).values())
    w = Fraction(1)
    for j, bj in mult.items():
        w *= (Fraction(theta) / j) ** bj / math.factorial(bj)
    return w


# 1 ---------------------------------------------------------------------------


def test_criterion_1_esf_normalization():
    start = time.perf_counter()
    for theta in (HALF, Fraction(1), Fraction(2), Fraction(7, 3)):
        for n in range(1, 13):
            total = sum(esf_probability(a, theta) for a in enumerate_partitions(n))
            assert total == 1, (n, theta)
    assert time.perf_counter() - start < 5


# 2 ---------------------------------------------------------------------------


def cycle_sizes(perm):
    seen = [False] * len(perm)
    sizes = []
    for i in range(len(perm)):
        length = 0
        while not seen[i]:
            seen[i] = True
            i = perm[i]
            length += 1
        if length:
            sizes.append(length)
    return sizes


def test_criterion_2_permutation_oracle():
    start = time.perf_counter()
    for n in range(1, 8):
        tally = Counter(counts_from_sizes(cycle_sizes(p), n) for p in itertools.permutations(range(n)))
        total = math.factorial(n)
        parts = enumerate_partitions(n)
        assert {a.counts for a in parts} == set(tally)
        for a in parts:
            assert esf_probability(a, 1) == Fraction(tally[a.counts], total), (n, a)
    assert time.perf_counter() - start < 30


# 3 ---------------------------------------------------------------------------


def test_criterion_3_increment_identities():
    start = time.perf_counter()
    for theta in (HALF, Fraction(1), Fraction(3)):
        for size in range(6):
            for spins in itertools.product(range(5), repeat=size):
                base = brute_weight(spins, theta)
                b = Counter(Counter(spins).values())
                for s in range(5):
                    inc = ham.increment_factor(spins, s, theta)
                    assert ham.ewens_weight(spins + (s,), theta) == inc.factor * ham.ewens_weight(spins, theta)
                    assert brute_weight(spins + (s,), theta) == inc.factor * base
                    i0 = spins.count(s)
                    if i0 == 0:
                        assert inc.case == "fresh"
                        assert inc.factor == theta / (b[1] + 1)
                    else:
                        assert inc.case == "repeat"
                        assert inc.factor == Fraction(i0 * b[i0], (i0 + 1) * (b[i0 + 1] + 1))
    assert time.perf_counter() - start < 60


# 4 ---------------------------------------------------------------------------


def rising_normalizer(n, theta):
    z = Fraction(1)
    for i in range(n):
        z *= (theta + i) / Fraction(i + 1)
    return z


def test_criterion_4_normalizer_ratio():
    for theta in (HALF, Fraction(1), Fraction(3)):
        for n in range(1, 21):
            assert esf_normalizer(n, theta) == rising_normalizer(n, theta)
            assert fc.esf_ratio(n, theta) == esf_normalizer(n + 1, theta) / esf_normalizer(n, theta)
            assert fc.esf_ratio(n, theta) == Fraction(n + theta, n + 1)


# 5 ---------------------------------------------------------------------------


def predicted_index(theta, bound):
    n = 1
    while n * (math.log(n / theta) - 1) <= bound:
        n += 1
    return n


def exact_term(n, theta):
    w = Fraction(theta) ** n / math.factorial(n)
    return abs(math.log(w.numerator) - math.log(w.denominator))


@pytest.mark.parametrize("theta", [HALF, Fraction(1), Fraction(10)])
@pytest.mark.parametrize("bound", [10, 100, 1000])
def test_criterion_5_divergence_certificate(theta, bound):
    limit = predicted_index(float(theta), bound)
    report = ham.summability_scan(theta, bound, limit)
    assert report.verdict == "divergent"
    assert report.first_crossing is not None and report.first_crossing <= limit
    assert exact_term(report.first_crossing, theta) > bound
    assert all(exact_term(n, theta) <= bound for n in range(1, report.first_crossing))


def test_criterion_5_spot_value():
    ln_fact = math.fsum(math.log(i) for i in range(2, 101))
    got = ham.potential_sup_term(100, 1)
    assert abs(got - ln_fact) <= 1e-6 * ln_fact
    assert abs(got - 363.739) < 5e-4


# 6 ---------------------------------------------------------------------------


def test_criterion_6_marginalization_identity():
    start = time.perf_counter()
    rng = random.Random(2024)
    checked = 0
    for step in growth_steps(2, 4):
        base_sites, ext_sites = fc.field_sites(step)
        for q in (1, 2, 3):
            g = random_field_table(step, q, rng)
            for beta in (-1, 0, 1):
                for theta in (HALF, Fraction(1)):
                    for config in configurations(step.base, q):
                        w_base = fc.field_weight(config, theta, beta, g, base_sites)
                        total = Fraction(0)
                        for s in range(q):
                            ext = config.region.add(step.added)
                            spins = dict(config.spins)
                            spins[step.added] = s
                            grown = type(config)(ext, spins)
                            total += fc.field_weight(grown, theta, beta, g, ext_sites)
                        rhs = fc.consistency_rhs(config, step, theta, beta, g, q)
                        assert isinstance(rhs, Fraction)
                        assert total / w_base == rhs
                        checked += 1
    assert checked > 10_000
    assert time.perf_counter() - start < 120


# 7 ---------------------------------------------------------------------------


def brute_residual(step, theta, beta, g, q):
    base_sites, ext_sites = fc.field_sites(step)
    base = fc.field_distribution(step.base, theta, beta, g, q, base_sites)
    ext = fc.field_distribution(step.extended, theta, beta, g, q, ext_sites)
    marg = Counter()
    for c, p in ext.items():
        marg[c.restrict(step.base.vertices)] += p
    return max(abs(float(marg[c] - p)) for c, p in base.items())


def test_criterion_7_solver_soundness():
    converged = 0
    for step, theta, beta, q, g in solver_instances("full"):
        result = fc.solve_boundary_field(step, theta, beta, q, g)
        if not result.converged:
            assert result.report.verdict == "unresolved"
            continue
        converged += 1
        assert result.spread <= 1e-12
        check = fc.marginal_check(step, theta, beta, result.table, q)
        assert float(check.max_residual) <= 1e-10
        assert brute_residual(step, theta, beta, result.table, q) <= 1e-10
    assert converged >= 3


# 8 ---------------------------------------------------------------------------


def chi_square_p(tally, n, theta, count):
    parts = enumerate_partitions(n)
    stat = 0.0
    for a in parts:
        expected = count * float(esf_probability(a, theta))
        stat += (tally.get(a, 0) - expected) ** 2 / expected
    return chi2.sf(stat, len(parts) - 1)


@pytest.mark.parametrize("n, theta, seed", [(6, 1, 7), (4, 2, 7), (6, 1, 99), (4, 2, 99)])
def test_criterion_8_sampler_statistics(n, theta, seed):
    tally = sample_partitions(n, theta, 100_000, seed)
    assert sum(tally.values()) == 100_000
    assert all(isinstance(a, AlleleCounts) and a.n == n for a in tally)
    assert chi_square_p(tally, n, theta, 100_000) > 1e-3


# 9 ---------------------------------------------------------------------------


def test_criterion_9_quick_verification_cli():
    start = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "ewens_tree", "verify", "--level", "quick", "--quiet"],
        capture_output=True,
        text=True,
    )
    elapsed = time.perf_counter() - start
    assert proc.returncode == 0, proc.stdout + proc.stderr
    report = json.loads(proc.stdout)
    assert report["verdict"] == "pass" and report["failed"] == []
    assert elapsed < 60


def test_criterion_9_mutation_is_caught(monkeypatch, tmp_path, capsys):
    original = ham._repeat_factor
    monkeypatch.setattr(ham, "_repeat_factor", lambda occ, i0: 1 / original(occ, i0))
    out = tmp_path / "report.json"
    code = cli.main(["verify", "--level", "quick", "--quiet", "--output", str(out)])
    assert code == 1
    report = json.loads(out.read_text())
    assert report["verdict"] == "fail"
    assert "increment_identities" in report["failed"]

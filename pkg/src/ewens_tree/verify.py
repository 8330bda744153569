"""Verification suites run by ``ewens-tree verify``.

Every check pairs an implementation path with an independent oracle
(enumeration, direct weight ratios, brute-force marginalisation) and records
the largest deviation it saw.  A report passes iff all its checks pass.
"""
from __future__ import annotations

import itertools
import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator

from . import consistency as fc
from . import hamiltonian as ham
from . import partitions as pc
from . import tree as tl

SOLVER_TOLERANCE = 1e-12


@dataclass
class CheckRecord:
    name: str
    identity: str
    domain: str
    max_deviation: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: max deviation {self.max_deviation:.3e} ({self.domain})"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "identity": self.identity,
            "domain": self.domain,
            "max_deviation": self.max_deviation,
            "passed": self.passed,
            "detail": self.detail,
        }


@dataclass
class VerificationReport:
    suite: str
    level: str
    records: list[CheckRecord] = field(default_factory=list)
    duration: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def failed(self) -> list[str]:
        return [r.name for r in self.records if not r.passed]

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "level": self.level,
            "verdict": self.verdict,
            "failed": self.failed(),
            "duration_seconds": self.duration,
            "checks": [r.to_json() for r in self.records],
        }


@dataclass(frozen=True)
class Bounds:
    esf_n: int
    oracle_n: int
    recursion_n: int
    increment_size: int
    increment_alphabet: int
    region_size: int
    q_max: int
    sampler_cases: tuple[tuple[int, Fraction], ...]
    samples: int
    tree_radius: int


LEVELS = {
    "quick": Bounds(
        esf_n=6,
        oracle_n=6,
        recursion_n=6,
        increment_size=3,
        increment_alphabet=3,
        region_size=3,
        q_max=3,
        sampler_cases=((4, Fraction(2)), (6, Fraction(1))),
        samples=20_000,
        tree_radius=3,
    ),
    "full": Bounds(
        esf_n=12,
        oracle_n=7,
        recursion_n=20,
        increment_size=5,
        increment_alphabet=5,
        region_size=4,
        q_max=3,
        sampler_cases=((4, Fraction(1)), (4, Fraction(2)), (6, Fraction(1)), (6, Fraction(2))),
        samples=100_000,
        tree_radius=5,
    ),
}

ESF_THETAS = (Fraction(1, 2), Fraction(1), Fraction(2), Fraction(7, 3))
INCREMENT_THETAS = (Fraction(1, 2), Fraction(1), Fraction(3))
RATIO_THETAS = (Fraction(1, 2), Fraction(1), Fraction(3))
SUMMABILITY_THETAS = (Fraction(1, 2), Fraction(1), Fraction(10))
SUMMABILITY_BOUNDS = (10.0, 100.0, 1000.0)
MARGINAL_THETAS = (Fraction(1, 2), Fraction(1))
MARGINAL_BETAS = (-1, 0, 1)
SAMPLER_ALPHA = 1e-3


# --------------------------------------------------------------------------
# partition_core


def check_esf_normalization(n_max: int, thetas: Iterable[Fraction] = ESF_THETAS) -> CheckRecord:
    worst = Fraction(0)
    for theta in thetas:
        for n in range(1, n_max + 1):
            total = sum(pc.esf_distribution(n, theta).values(), Fraction(0))
            worst = max(worst, abs(total - 1))
    return CheckRecord(
        "esf_normalization",
        "sum over partitions of esf_probability == 1",
        f"n<={n_max}, theta in {{1/2,1,2,7/3}}",
        float(worst),
        worst == 0,
    )


def check_permutation_oracle(n_max: int) -> CheckRecord:
    worst = Fraction(0)
    for n in range(1, n_max + 1):
        oracle = pc.permutation_cycle_oracle(n)
        exact = pc.esf_distribution(n, 1)
        if set(oracle) != set(exact):
            return CheckRecord("permutation_oracle", "", f"n={n}", math.inf, False, "support mismatch")
        worst = max(worst, max(abs(oracle[a] - exact[a]) for a in exact))
    return CheckRecord(
        "permutation_oracle",
        "esf_probability(., theta=1) == cycle-type frequency in S_n",
        f"n<={n_max}",
        float(worst),
        worst == 0,
    )


def check_normalizer_recursion(n_max: int, thetas: Iterable[Fraction] = ESF_THETAS) -> CheckRecord:
    worst = Fraction(0)
    for theta in thetas:
        for n in range(1, n_max):
            lhs = pc.esf_normalizer(n + 1, theta) * (n + 1)
            rhs = pc.esf_normalizer(n, theta) * (theta + n)
            worst = max(worst, abs(lhs - rhs))
    return CheckRecord(
        "normalizer_recursion",
        "Z_{n+1} (n+1) == Z_n (theta+n)",
        f"n<={n_max}",
        float(worst),
        worst == 0,
    )


def check_sampler(cases, samples: int, seed: int = 20240917) -> CheckRecord:
    worst_p = 1.0
    worst_stat = 0.0
    details = []
    for i, (n, theta) in enumerate(cases):
        tally = pc.sample_partitions(n, theta, samples, seed + i)
        fit = pc.esf_goodness_of_fit(tally, n, theta)
        worst_p = min(worst_p, fit.p_value)
        worst_stat = max(worst_stat, fit.statistic)
        details.append(f"n={n},theta={theta}: chi2={fit.statistic:.2f}, p={fit.p_value:.4f}")
    return CheckRecord(
        "sampler_chi_square",
        f"CRP partition frequencies fit the ESF (p > {SAMPLER_ALPHA})",
        f"{samples} samples per case",
        worst_stat,
        worst_p > SAMPLER_ALPHA,
        "; ".join(details),
    )


# --------------------------------------------------------------------------
# tree_lattice


def connected_regions(k: int, max_size: int) -> list[tl.TreeRegion]:
    """Connected regions containing the root, up to ``max_size`` vertices."""
    layer = {frozenset([()])}
    out = list(layer)
    for _ in range(max_size - 1):
        nxt = set()
        for verts in layer:
            for y in tl.outer_boundary(tl.TreeRegion(k, verts)):
                nxt.add(verts | {y})
        layer = nxt
        out.extend(sorted(layer, key=lambda s: sorted(map(tl.vertex_order, s))))
    return [tl.TreeRegion(k, v) for v in out]


def growth_steps(k: int, max_size: int) -> Iterator[tl.GrowthStep]:
    for region in connected_regions(k, max_size):
        for v in sorted(tl.outer_boundary(region), key=tl.vertex_order):
            yield tl.growth_step(region, v)


def check_tree_invariants(radius: int) -> CheckRecord:
    failures = []
    for k in (1, 2, 3):
        for r in range(radius + 1):
            if len(tl.build_ball(k, r)) != tl.ball_size(k, r):
                failures.append(f"ball k={k} r={r}")
    ball = tl.build_ball(2, 2)
    verts = sorted(ball.vertices, key=tl.vertex_order)
    for size in range(1, 7):
        for subset in itertools.combinations(verts, size):
            region = tl.TreeRegion(2, frozenset(subset))
            if not region.is_connected():
                continue
            outer = tl.outer_boundary(region)
            for v in outer:
                inside = [y for y in tl.neighbors(v, 2) if y in region]
                if len(inside) != 1:
                    failures.append(f"anchor not unique for {v}")
                grown = region.add(v)
                fresh = {y for y in tl.neighbors(v, 2) if y not in grown}
                if tl.outer_boundary(grown) != (outer - {v}) | fresh:
                    failures.append(f"boundary update for {v}")
    return CheckRecord(
        "tree_invariants",
        "ball sizes, unique anchors, outer-boundary update rule",
        f"k in {{1,2,3}}, r<={radius}; connected subsets of ball(2,2), size<=6",
        float(len(failures)),
        not failures,
        "; ".join(failures[:5]),
    )


# --------------------------------------------------------------------------
# hamiltonian_engine


def check_increment_identities(size_max: int, alphabet: int, thetas=INCREMENT_THETAS) -> CheckRecord:
    """Increment factor against the direct ratio of weights, plus both closed forms."""
    worst = Fraction(0)
    problems = []
    for theta in thetas:
        for size in range(size_max + 1):
            for spins in itertools.product(range(alphabet), repeat=size):
                base_w = ham.ewens_weight(spins, theta)
                occ = ham.occupancy(spins)
                for s in range(alphabet):
                    inc = ham.increment_factor(spins, s, theta)
                    ratio = ham.ewens_weight(spins + (s,), theta) / base_w
                    worst = max(worst, abs(inc.factor - ratio))
                    i0 = spins.count(s)
                    if i0 == 0:
                        closed = theta / (occ.b(1) + 1)
                        ok_case = inc.case == "fresh"
                    else:
                        closed = Fraction(i0 * occ.b(i0), (i0 + 1) * (occ.b(i0 + 1) + 1))
                        ok_case = inc.case == "repeat" and inc.i0 == i0
                    worst = max(worst, abs(ratio - closed))
                    if not ok_case:
                        problems.append(f"case tag for {spins}+{s}")
    return CheckRecord(
        "increment_identities",
        "W(sigma+s) == increment_factor * W(sigma); fresh theta/(b1+1), repeat i0 b_i0/((i0+1)(b_{i0+1}+1))",
        f"|Lambda|<={size_max}, alphabet {alphabet}, theta in {{1/2,1,3}}",
        float(worst),
        worst == 0 and not problems,
        "; ".join(problems[:5]),
    )


def check_occupancy_bookkeeping(size_max: int, alphabet: int) -> CheckRecord:
    bad = 0
    for size in range(size_max + 1):
        for spins in itertools.product(range(alphabet), repeat=size):
            occ = ham.occupancy(spins)
            for s in range(alphabet):
                if ham.occupancy(spins + (s,)) != ham.occupancy_after(occ, spins.count(s)):
                    bad += 1
    return CheckRecord(
        "occupancy_bookkeeping",
        "fresh: b1+1; repeat i0: b_i0-1, b_{i0+1}+1",
        f"|Lambda|<={size_max}, alphabet {alphabet}",
        float(bad),
        bad == 0,
    )


def check_exchangeability(size_max: int, alphabet: int, theta=Fraction(3, 2)) -> CheckRecord:
    worst = Fraction(0)
    relabels = list(itertools.permutations(range(alphabet)))
    for size in range(1, size_max + 1):
        for spins in itertools.product(range(alphabet), repeat=size):
            w = ham.ewens_weight(spins, theta)
            ref = pc.esf_weight(ham.occupancy(spins).as_allele_counts(), theta)
            worst = max(worst, abs(w - ref))
            for perm in relabels[:: max(1, len(relabels) // 6)]:
                moved = tuple(perm[s] for s in reversed(spins))
                worst = max(worst, abs(ham.ewens_weight(moved, theta) - w))
            worst = max(worst, abs(ham.config_probability(spins, theta)
                                   - pc.esf_probability(ham.occupancy(spins).as_allele_counts(), theta)))
    return CheckRecord(
        "exchangeability",
        "ewens_weight depends only on occupancy; config_probability == esf_probability",
        f"|Lambda|<={size_max}, alphabet {alphabet}",
        float(worst),
        worst == 0,
    )


def check_summability(thetas=SUMMABILITY_THETAS, bounds=SUMMABILITY_BOUNDS) -> CheckRecord:
    problems = []
    for theta in thetas:
        for bound in bounds:
            predicted = ham.stirling_index(theta, bound)
            report = ham.summability_scan(theta, bound, predicted)
            if report.first_crossing is None or report.first_crossing > predicted:
                problems.append(f"theta={theta}, B={bound}")
    t100 = ham.potential_sup_term(100, 1)
    oracle = math.fsum(math.log(i) for i in range(2, 101))
    rel = abs(t100 - oracle) / oracle
    return CheckRecord(
        "summability_divergence",
        "t_n > B at or before the Stirling index; t_100(theta=1) == ln 100!",
        "theta in {1/2,1,10}, B in {10,100,1000}",
        rel,
        not problems and rel <= 1e-6,
        "; ".join(problems),
    )


# --------------------------------------------------------------------------
# field_consistency


def random_field_table(step: tl.GrowthStep, q: int, rng: random.Random) -> fc.FieldTable:
    entries = {}
    for x in step.extended.ordered():
        for s in range(q):
            entries[(s, x)] = Fraction(rng.randint(1, 4), rng.randint(1, 4))
    return fc.FieldTable(entries=entries)


def check_marginal_identity(
    size_max: int,
    q_max: int,
    betas=MARGINAL_BETAS,
    thetas=MARGINAL_THETAS,
    seed: int = 7,
) -> CheckRecord:
    rng = random.Random(seed)
    worst = Fraction(0)
    inexact = 0
    count = 0
    for step in growth_steps(2, size_max):
        for q in range(1, q_max + 1):
            g = random_field_table(step, q, rng)
            for beta in betas:
                for theta in thetas:
                    for config in tl.configurations(step.base, q):
                        direct = fc.extension_ratio(config, step, theta, beta, g, q)
                        rhs = fc.consistency_rhs(config, step, theta, beta, g, q)
                        if not (isinstance(direct, Fraction) and isinstance(rhs, Fraction)):
                            inexact += 1
                        worst = max(worst, abs(Fraction(direct) - Fraction(rhs)))
                        count += 1
    return CheckRecord(
        "marginal_identity",
        "sum_s W_Delta(sigma+s)/W_Lambda(sigma) == consistency_rhs(sigma)",
        f"connected |Lambda|<={size_max}, q<={q_max}, beta in {{-1,0,1}}, theta in {{1/2,1}}; {count} configurations",
        float(worst),
        worst == 0 and inexact == 0,
    )


def check_field_normalization(size_max: int, q_max: int, seed: int = 11) -> CheckRecord:
    """Normalisation of the field law, the Ewens bridge, and the kernel factorisation."""
    rng = random.Random(seed)
    worst_exact = Fraction(0)
    worst_real = 0.0
    steps = [s for s in growth_steps(2, min(size_max, 3))][:: 3]
    for step in steps:
        for q in range(2, q_max + 1):
            g = random_field_table(step, q, rng)
            site_base, site_ext = fc.field_sites(step)
            for theta in (Fraction(1, 2), Fraction(2)):
                for beta in (-1, 0, 1, 0.5):
                    base = fc.field_distribution(step.base, theta, beta, g, q, site_base)
                    total = sum(base.values(), Fraction(0))
                    if isinstance(total, Fraction):
                        worst_exact = max(worst_exact, abs(total - 1))
                    else:
                        worst_real = max(worst_real, abs(total - 1))
                    ext = fc.field_distribution(step.extended, theta, beta, g, q, site_ext)
                    z_ratio = fc.region_partition_function(
                        step.extended, theta, beta, g, q, site_ext
                    ) / fc.region_partition_function(step.base, theta, beta, g, q, site_base)
                    for config, p in ext.items():
                        kernel = fc.multiplicative_kernel(step, config, theta, beta, g, z_ratio)
                        p_base = base[config.restrict(step.base.vertices)]
                        worst_real = max(worst_real, abs(float(p) - float(kernel * p_base)))
            ewens = fc.field_distribution(step.base, Fraction(3, 2), -1, fc.FieldTable(), q)
            cond = {c: ham.config_probability(c, Fraction(3, 2)) for c in ewens}
            z = sum(cond.values(), Fraction(0))
            worst_exact = max(worst_exact, max(abs(ewens[c] - cond[c] / z) for c in ewens))
    passed = worst_exact == 0 and worst_real <= 1e-12
    return CheckRecord(
        "field_normalization",
        "field law sums to 1; beta=-1,g=1 gives the conditioned Ewens law; P_Delta == kernel * P_Lambda",
        f"|Lambda|<={min(size_max, 3)}, q<={q_max}",
        max(float(worst_exact), worst_real),
        passed,
    )


def check_esf_ratio(n_max: int, thetas=RATIO_THETAS) -> CheckRecord:
    worst = Fraction(0)
    for theta in thetas:
        for n in range(1, n_max + 1):
            quotient = pc.esf_normalizer(n + 1, theta) / pc.esf_normalizer(n, theta)
            worst = max(worst, abs(fc.esf_ratio(n, theta) - quotient))
    return CheckRecord(
        "esf_ratio",
        "esf_ratio(n) == Z_{n+1}/Z_n",
        f"n<={n_max}, theta in {{1/2,1,3}}",
        float(worst),
        worst == 0,
    )


def solver_instances(level: str) -> list[tuple[tl.GrowthStep, Fraction, int, int, fc.FieldTable]]:
    single = tl.growth_step(tl.build_ball(2, 0), (0,))
    pair = tl.growth_step(tl.TreeRegion(2, frozenset([(), (0,)])), (1,))
    out = []
    for theta, beta in ((Fraction(1, 2), -1), (Fraction(2), 1), (Fraction(1), 0)):
        for gu in ((1, 1), (1, Fraction(3, 2)), (Fraction(4, 3), 1)):
            out.append((single, theta, beta, 2, fc.FieldTable().with_vertex((), gu)))
    out.append((single, Fraction(1), -1, 3, fc.FieldTable()))
    out.append((single, Fraction(1, 3), -1, 3, fc.FieldTable().with_vertex((), (1, Fraction(5, 4), 1))))
    out.append((pair, Fraction(2), -1, 3, fc.FieldTable()))
    if level == "full":
        out.append((pair, Fraction(1, 2), 1, 2, fc.FieldTable()))
        out.append((single, Fraction(1, 4), -1, 4, fc.FieldTable().with_vertex((), (1, Fraction(6, 5), 1, Fraction(9, 10)))))
    return out


def check_solver_soundness(level: str) -> CheckRecord:
    worst = 0.0
    converged = 0
    failures = []
    for step, theta, beta, q, g in solver_instances(level):
        result = fc.solve_boundary_field(step, theta, beta, q, g)
        if result.converged:
            converged += 1
            residual = float(result.report.max_residual)
            worst = max(worst, residual)
            if residual > fc.RESIDUAL_TOLERANCE:
                failures.append(f"theta={theta}, beta={beta}, q={q}")
    return CheckRecord(
        "solver_soundness",
        "converged solver output passes the brute-force marginal check (<=1e-10)",
        f"{len(solver_instances(level))} instances, {converged} converged",
        worst,
        not failures and converged > 0,
        "; ".join(failures),
    )


# --------------------------------------------------------------------------


def run_verification(level: str = "quick", progress: Callable[[CheckRecord], None] | None = None) -> VerificationReport:
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}")
    b = LEVELS[level]
    started = time.perf_counter()
    report = VerificationReport("ewens-tree", level)
    checks: list[Callable[[], CheckRecord]] = [
        lambda: check_esf_normalization(b.esf_n),
        lambda: check_permutation_oracle(b.oracle_n),
        lambda: check_normalizer_recursion(b.recursion_n),
        lambda: check_esf_ratio(b.recursion_n),
        lambda: check_tree_invariants(b.tree_radius),
        lambda: check_increment_identities(b.increment_size, b.increment_alphabet),
        lambda: check_occupancy_bookkeeping(b.increment_size, b.increment_alphabet),
        lambda: check_exchangeability(min(b.increment_size, 5), min(b.increment_alphabet, 4)),
        lambda: check_summability(),
        lambda: check_marginal_identity(b.region_size, b.q_max),
        lambda: check_field_normalization(b.region_size, b.q_max),
        lambda: check_solver_soundness(level),
        lambda: check_sampler(b.sampler_cases, b.samples),
    ]
    for check in checks:
        record = check()
        report.records.append(record)
        if progress is not None:
            progress(record)
    report.duration = time.perf_counter() - started
    return report

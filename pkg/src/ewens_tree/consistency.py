"""Boundary-field distributions on finite regions and their consistency.

A region distribution has unnormalised weight

    W(sigma) = exp(H(sigma)) ** (-beta) * prod_{x in B} g[sigma(x), x]

where ``g = exp(h)`` is a positive field table and ``B`` is the set of sites
where the field acts.  With ``beta = -1`` and ``g = 1`` this is the Ewens
configuration law.  Integer ``beta`` with rational ``theta`` and ``g`` keeps
every quantity an exact :class:`~fractions.Fraction`; other ``beta`` values
fall back to floats.

For a growth step ``Delta = Lambda + {v}`` anchored at ``u`` the field sites
default to ``{u}`` for ``Lambda`` and ``{v}`` for ``Delta`` (the ``"pair"``
convention).  Under that convention the ratio of summed extension weights to
the base weight is exactly :func:`consistency_rhs`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Literal, Mapping, Optional, Sequence

import numpy as np

from . import hamiltonian as ham
from .errors import (
    ConstraintError,
    EmptyDomainError,
    MissingFieldError,
    MissingSpinError,
    StructuralError,
)
from .exact import Number, as_beta, as_theta, encode_number, parse_rational, power
from .partitions import esf_normalizer
from .tree import (
    GrowthStep,
    SpinConfiguration,
    TreeRegion,
    Vertex,
    configurations,
    extend_configuration,
    inner_boundary,
    validate_address,
    vertex_order,
)

DEFAULT_BUDGET = 10**7
RESIDUAL_TOLERANCE = 1e-10
FIELD_CONVENTIONS = ("pair", "inner", "none")


@dataclass(frozen=True)
class FieldTable:
    """Multiplicative boundary fields ``g[t, x] = exp(h[t, x])``.

    ``default`` fills entries that were not set explicitly; with
    ``default=None`` a lookup of an unset entry raises.  In ``"tail"`` mode
    ``tails[x]`` is the aggregate field mass of all spin values not present
    in the configuration being extended.
    """

    mode: Literal["finite", "tail"] = "finite"
    entries: Mapping[tuple[int, Vertex], Fraction] = field(default_factory=dict)
    default: Optional[Fraction] = Fraction(1)
    tails: Mapping[Vertex, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.mode not in ("finite", "tail"):
            raise ConstraintError(f"unknown field mode {self.mode!r}")
        entries = {(int(t), tuple(x)): Fraction(g) for (t, x), g in self.entries.items()}
        tails = {tuple(x): Fraction(m) for x, m in self.tails.items()}
        if any(g <= 0 for g in entries.values()):
            raise ConstraintError("field weights must be positive")
        if any(m < 0 for m in tails.values()):
            raise ConstraintError("tail masses must be nonnegative")
        if self.default is not None:
            default = Fraction(self.default)
            if default <= 0:
                raise ConstraintError("default field weight must be positive")
            object.__setattr__(self, "default", default)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "tails", tails)

    def g(self, spin: int, x: Vertex) -> Fraction:
        try:
            return self.entries[(spin, x)]
        except KeyError:
            if self.default is None:
                raise MissingFieldError(f"no field entry for spin {spin} at {x}") from None
            return self.default

    def tail(self, x: Vertex) -> Fraction:
        if self.mode != "tail":
            raise ConstraintError("tail masses exist only in 'tail' mode")
        try:
            return self.tails[x]
        except KeyError:
            raise MissingFieldError(f"no tail mass at {x}") from None

    def with_vertex(self, x: Vertex, values: Sequence) -> "FieldTable":
        """Copy with ``g[s, x] = values[s]`` for every ``s``."""
        entries = dict(self.entries)
        for s, value in enumerate(values):
            entries[(s, tuple(x))] = Fraction(value)
        return replace(self, entries=entries)

    @classmethod
    def uniform(cls) -> "FieldTable":
        return cls()

    def to_json(self) -> dict:
        ordered = sorted(self.entries.items(), key=lambda kv: (vertex_order(kv[0][1]), kv[0][0]))
        return {
            "mode": self.mode,
            "default": None if self.default is None else str(self.default),
            "entries": [
                {"spin": t, "vertex": list(x), "g": str(g)} for (t, x), g in ordered
            ],
            "tails": [
                {"vertex": list(x), "mass": str(m)}
                for x, m in sorted(self.tails.items(), key=lambda kv: vertex_order(kv[0]))
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "FieldTable":
        default = data.get("default", "1")
        return cls(
            mode=data.get("mode", "finite"),
            entries={
                (int(e["spin"]), tuple(int(i) for i in e["vertex"])): parse_rational(e["g"])
                for e in data.get("entries", [])
            },
            default=None if default is None else parse_rational(default),
            tails={
                tuple(int(i) for i in e["vertex"]): parse_rational(e["mass"])
                for e in data.get("tails", [])
            },
        )


def field_sites(step: GrowthStep, convention: str = "pair") -> tuple[frozenset, frozenset]:
    """Sites where the field acts for the base region and for the extended region."""
    if convention == "pair":
        return frozenset([step.anchor]), frozenset([step.added])
    if convention == "inner":
        return inner_boundary(step.base), inner_boundary(step.extended)
    if convention == "none":
        return frozenset(), frozenset()
    raise ConstraintError(f"unknown field convention {convention!r}")


def field_weight(
    config: SpinConfiguration,
    theta,
    beta,
    g: FieldTable,
    boundary: Iterable[Vertex] = (),
) -> Number:
    theta = as_theta(theta)
    beta = as_beta(beta)
    w = power(ham.ewens_weight(config, theta), -beta)
    for x in sorted(boundary, key=vertex_order):
        if x not in config.region:
            raise MissingSpinError(f"field site {x} carries no spin")
        w *= g.g(config[x], x)
    return w


def region_partition_function(
    region: TreeRegion,
    theta,
    beta,
    g: FieldTable,
    q: int,
    boundary: Iterable[Vertex] = (),
    budget: int = DEFAULT_BUDGET,
) -> Number:
    boundary = frozenset(boundary)
    return sum(
        (field_weight(c, theta, beta, g, boundary) for c in configurations(region, q, budget)),
        Fraction(0),
    )


def field_distribution(
    region: TreeRegion,
    theta,
    beta,
    g: FieldTable,
    q: int,
    boundary: Iterable[Vertex] = (),
    budget: int = DEFAULT_BUDGET,
) -> dict[SpinConfiguration, Number]:
    boundary = frozenset(boundary)
    weights = {c: field_weight(c, theta, beta, g, boundary) for c in configurations(region, q, budget)}
    z = sum(weights.values(), Fraction(0))
    return {c: w / z for c, w in weights.items()}


def esf_ratio(n: int, theta) -> Fraction:
    """``Z_{n+1} / Z_n = (n + theta) / (n + 1)`` for the ESF normaliser."""
    if n < 1:
        raise EmptyDomainError(f"region size must be positive, got {n}")
    theta = as_theta(theta)
    return (n + theta) / (n + 1)


def multiplicative_kernel(
    step: GrowthStep,
    config: SpinConfiguration,
    theta,
    beta,
    g: FieldTable,
    z_ratio: Optional[Number] = None,
) -> Number:
    """``P_Delta(sigma) / P_Lambda(sigma restricted to Lambda)`` under the pair convention.

    ``z_ratio`` is ``Z_Delta / Z_Lambda``; it defaults to :func:`esf_ratio`.
    """
    if config.region != step.extended:
        raise StructuralError("configuration must live on the extended region of the step")
    theta = as_theta(theta)
    beta = as_beta(beta)
    base = config.restrict(step.base.vertices)
    inc = ham.increment_factor(base, config[step.added], theta).factor
    if z_ratio is None:
        z_ratio = esf_ratio(len(step.base), theta)
    return (
        power(inc, -beta)
        * g.g(config[step.added], step.added)
        / g.g(config[step.anchor], step.anchor)
        / z_ratio
    )


def consistency_rhs(
    config: SpinConfiguration,
    step: GrowthStep,
    theta,
    beta,
    g: FieldTable,
    q: Optional[int] = None,
) -> Number:
    """Right side of the one-step consistency equation for a base configuration.

    Fresh values share the factor ``(theta/(b_1+1))**(-beta)``; a repeated
    value of multiplicity ``i0`` gets ``(i0 b_i0 / ((i0+1)(b_{i0+1}+1)))**(-beta)``.
    Each term carries ``g[w, v] / g[sigma(u), u]``.  In ``"tail"`` mode the
    fresh values contribute through ``g.tail(v)`` and ``q`` is ignored.
    """
    if config.region != step.base:
        raise StructuralError("configuration must live on the base region of the step")
    theta = as_theta(theta)
    beta = as_beta(beta)
    v, u = step.added, step.anchor
    values = config.values()
    used = sorted(set(values))
    occ = ham.occupancy(values)
    fresh = power(ham._fresh_factor(occ, theta), -beta)
    if g.mode == "tail":
        total = fresh * g.tail(v)
    else:
        if q is None:
            raise ConstraintError("finite-alphabet mode needs the alphabet size q")
        if used and used[-1] >= q:
            raise ConstraintError(f"spin {used[-1]} lies outside the alphabet 0..{q - 1}")
        total = sum((fresh * g.g(s, v) for s in range(q) if s not in used), Fraction(0))
    for s in used:
        i0 = values.count(s)
        total += power(ham._repeat_factor(occ, i0), -beta) * g.g(s, v)
    return total / g.g(config[u], u)


def extension_ratio(
    config: SpinConfiguration,
    step: GrowthStep,
    theta,
    beta,
    g: FieldTable,
    q: int,
) -> Number:
    """``sum_s W_Delta(config + s) / W_Lambda(config)`` by direct evaluation."""
    site_base, site_ext = field_sites(step, "pair")
    base = field_weight(config, theta, beta, g, site_base)
    total = sum(
        (
            field_weight(extend_configuration(config, step.added, s), theta, beta, g, site_ext)
            for s in range(q)
        ),
        Fraction(0),
    )
    return total / base


# --------------------------------------------------------------------------
# reports


@dataclass
class ConfigurationResidual:
    config: SpinConfiguration
    rhs: Number
    residual: Number


@dataclass
class ConsistencyReport:
    step: GrowthStep
    theta: Fraction
    beta: Number
    q: int
    convention: str
    entries: list[ConfigurationResidual]
    z_ratio_enumerated: Number
    z_ratio_esf: Fraction
    tolerance: float = RESIDUAL_TOLERANCE
    verdict_override: Optional[str] = None

    @property
    def max_residual(self) -> Number:
        return max((abs(e.residual) for e in self.entries), default=Fraction(0))

    @property
    def rhs_spread(self) -> Number:
        rhs = [e.rhs for e in self.entries]
        return max(rhs) - min(rhs) if rhs else Fraction(0)

    @property
    def ratio_agreement(self) -> bool:
        a, b = self.z_ratio_enumerated, self.z_ratio_esf
        if isinstance(a, Fraction):
            return a == b
        return math.isclose(float(a), float(b), rel_tol=1e-12)

    @property
    def consistent(self) -> bool:
        return float(self.max_residual) <= self.tolerance

    @property
    def verdict(self) -> str:
        if self.verdict_override:
            return self.verdict_override
        return "consistent" if self.consistent else "inconsistent"

    def to_json(self) -> dict:
        return {
            "step": self.step.to_json(),
            "theta": str(self.theta),
            "beta": encode_number(self.beta)["exact"],
            "q": self.q,
            "convention": self.convention,
            "configurations": [
                {
                    "spins": e.config.to_json()["spins"],
                    "rhs": encode_number(e.rhs),
                    "residual": encode_number(e.residual),
                }
                for e in self.entries
            ],
            "max_residual": encode_number(self.max_residual),
            "rhs_spread": encode_number(self.rhs_spread),
            "z_ratio_enumerated": encode_number(self.z_ratio_enumerated),
            "z_ratio_esf": encode_number(self.z_ratio_esf),
            "ratio_agreement": self.ratio_agreement,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
        }


def marginal_check(
    step: GrowthStep,
    theta,
    beta,
    g: FieldTable,
    q: int,
    convention: str = "pair",
    budget: int = DEFAULT_BUDGET,
    tolerance: float = RESIDUAL_TOLERANCE,
) -> ConsistencyReport:
    """Brute-force marginalisation of the extended distribution onto the base region.

    Each distribution is normalised by its own enumerated partition function;
    the residual for ``sigma`` is ``sum_s P_Delta(sigma + s) - P_Lambda(sigma)``.
    """
    if g.mode != "finite":
        raise ConstraintError("marginal_check enumerates spins and needs a finite-alphabet table")
    theta = as_theta(theta)
    beta = as_beta(beta)
    configurations(step.extended, q, budget)  # budget check only
    site_base, site_ext = field_sites(step, convention)
    base_configs = list(configurations(step.base, q, budget))
    base_w = [field_weight(c, theta, beta, g, site_base) for c in base_configs]
    ext_w = [
        [
            field_weight(extend_configuration(c, step.added, s), theta, beta, g, site_ext)
            for s in range(q)
        ]
        for c in base_configs
    ]
    z_base = sum(base_w, Fraction(0))
    z_ext = sum((w for row in ext_w for w in row), Fraction(0))
    entries = [
        ConfigurationResidual(
            c,
            consistency_rhs(c, step, theta, beta, g, q),
            sum(row, Fraction(0)) / z_ext - w / z_base,
        )
        for c, w, row in zip(base_configs, base_w, ext_w)
    ]
    return ConsistencyReport(
        step=step,
        theta=theta,
        beta=beta,
        q=q,
        convention=convention,
        entries=entries,
        z_ratio_enumerated=z_ext / z_base,
        z_ratio_esf=esf_ratio(len(step.base), theta),
        tolerance=tolerance,
    )


# --------------------------------------------------------------------------
# solver


@dataclass
class SolverResult:
    table: FieldTable
    report: ConsistencyReport
    converged: bool
    iterations: int
    spread: float

    def to_json(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "spread": self.spread,
            "fields": self.table.to_json(),
            "report": self.report.to_json(),
        }


def _relative_spread(r: np.ndarray) -> float:
    return float((r.max() - r.min()) / r.mean())


def solve_boundary_field(
    step: GrowthStep,
    theta,
    beta,
    q: int,
    g: Optional[FieldTable] = None,
    damping: float = 0.5,
    tol: float = 1e-12,
    max_iter: int = 10_000,
    budget: int = DEFAULT_BUDGET,
) -> SolverResult:
    """Tune ``g[., v]`` so the consistency right side is the same for every base configuration.

    A common value ``C`` means every base weight is extended by the same
    factor, which makes the pair of region laws consistent with
    ``Z_Delta / Z_Lambda = C``.  The update is a damped multiplicative step on
    the log-fields: each ``g[s, v]`` moves towards the mean log right side,
    weighted by its share in each configuration's sum.  Fields elsewhere are
    held fixed.  Failure to converge is reported, not raised, because the
    system has one equation per configuration and only ``q`` unknowns.
    """
    if q < 2:
        raise ConstraintError(f"solver needs q >= 2, got {q}")
    g = g if g is not None else FieldTable.uniform()
    if g.mode != "finite":
        raise ConstraintError("solver works on finite-alphabet tables")
    theta = as_theta(theta)
    beta = as_beta(beta)
    v, u = step.added, step.anchor
    base_configs = list(configurations(step.base, q, budget))
    coeff = np.empty((len(base_configs), q))
    anchor = np.empty(len(base_configs))
    for i, c in enumerate(base_configs):
        values = c.values()
        occ = ham.occupancy(values)
        fresh = float(power(ham._fresh_factor(occ, theta), -beta))
        for s in range(q):
            m = values.count(s)
            coeff[i, s] = fresh if m == 0 else float(power(ham._repeat_factor(occ, m), -beta))
        anchor[i] = float(g.g(c[u], u))

    x = np.array([float(g.g(s, v)) for s in range(q)])
    log_scale = np.log(x).mean()
    r = coeff @ x / anchor
    spread = _relative_spread(r)
    iterations = 0
    while spread > tol and iterations < max_iter:
        share = coeff * x / (anchor * r)[:, None]
        log_r = np.log(r)
        target = log_r.mean()
        per_spin = (share * log_r[:, None]).sum(axis=0) / share.sum(axis=0)
        x = x * np.exp(damping * (target - per_spin))
        x *= math.exp(log_scale - np.log(x).mean())
        r = coeff @ x / anchor
        spread = _relative_spread(r)
        iterations += 1
        if not np.all(np.isfinite(x)) or np.any(x <= 0):
            break

    converged = spread <= tol
    table = g if iterations == 0 else g.with_vertex(v, [Fraction(float(val)) for val in x])
    report = marginal_check(step, theta, beta, table, q, budget=budget)
    if not converged:
        report.verdict_override = "unresolved"
    return SolverResult(table, report, converged, iterations, spread)

"""Finite pieces of the (k+1)-regular tree.

Vertices are addressed by their path from a fixed root: a tuple of child
indices whose first entry lies in ``0..k`` (the root has ``k+1`` children)
and whose later entries lie in ``0..k-1``.  The root is ``()``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    ConstraintError,
    DetachedVertexError,
    DuplicateVertexError,
    EmptyDomainError,
    ResourceBoundError,
)

Vertex = tuple[int, ...]

BOUNDARY_CONVENTIONS = ("outer", "inner")


def validate_address(path: Sequence[int], k: int) -> Vertex:
    path = tuple(int(i) for i in path)
    for depth, step in enumerate(path):
        limit = k + 1 if depth == 0 else k
        if not 0 <= step < limit:
            raise ConstraintError(f"address {path} is not a vertex of the tree with k={k}")
    return path


def neighbors(x: Vertex, k: int) -> list[Vertex]:
    out = [x[:-1]] if x else []
    width = k if x else k + 1
    out.extend(x + (i,) for i in range(width))
    return out


def adjacent(x: Vertex, y: Vertex) -> bool:
    return (len(x) == len(y) + 1 and x[:-1] == y) or (len(y) == len(x) + 1 and y[:-1] == x)


def vertex_order(x: Vertex) -> tuple[int, Vertex]:
    """Breadth-first sort key used for every deterministic traversal."""
    return (len(x), x)


@dataclass(frozen=True)
class TreeRegion:
    k: int
    vertices: frozenset[Vertex] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ConstraintError(f"k must be >= 1, got {self.k}")
        verts = frozenset(validate_address(v, self.k) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)

    def __contains__(self, x: object) -> bool:
        return x in self.vertices

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self) -> Iterator[Vertex]:
        return iter(self.ordered())

    def ordered(self) -> list[Vertex]:
        return sorted(self.vertices, key=vertex_order)

    def add(self, v: Vertex) -> "TreeRegion":
        return TreeRegion(self.k, self.vertices | {v})

    def is_connected(self) -> bool:
        if not self.vertices:
            return True
        start = next(iter(self.vertices))
        seen = {start}
        stack = [start]
        while stack:
            x = stack.pop()
            for y in neighbors(x, self.k):
                if y in self.vertices and y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == len(self.vertices)

    def to_json(self) -> dict:
        return {"k": self.k, "vertices": [list(v) for v in self.ordered()]}

    @classmethod
    def from_json(cls, data: Mapping) -> "TreeRegion":
        k = int(data["k"])
        return cls(k, frozenset(validate_address(v, k) for v in data["vertices"]))


def build_ball(k: int, r: int) -> TreeRegion:
    """All vertices within distance ``r`` of the root."""
    if k < 1 or r < 0:
        raise ConstraintError(f"need k >= 1 and r >= 0, got k={k}, r={r}")
    layer: list[Vertex] = [()]
    verts = [()]
    for _ in range(r):
        layer = [y for x in layer for y in neighbors(x, k) if len(y) > len(x)]
        verts.extend(layer)
    return TreeRegion(k, frozenset(verts))


def ball_size(k: int, r: int) -> int:
    if k == 1:
        return 1 + 2 * r
    return 1 + (k + 1) * (k**r - 1) // (k - 1)


def outer_boundary(region: TreeRegion) -> frozenset[Vertex]:
    """Vertices outside the region adjacent to some vertex inside it."""
    return frozenset(
        y for x in region.vertices for y in neighbors(x, region.k) if y not in region
    )


def inner_boundary(region: TreeRegion) -> frozenset[Vertex]:
    """Vertices of the region with at least one neighbour outside it."""
    return frozenset(
        x for x in region.vertices if any(y not in region for y in neighbors(x, region.k))
    )


def boundary(region: TreeRegion, convention: str = "outer") -> frozenset[Vertex]:
    if convention == "outer":
        return outer_boundary(region)
    if convention == "inner":
        return inner_boundary(region)
    raise ConstraintError(f"unknown boundary convention {convention!r}")


@dataclass(frozen=True)
class GrowthStep:
    """One-vertex extension ``base + {added}`` with ``anchor`` the base-neighbour of ``added``."""

    base: TreeRegion
    added: Vertex
    anchor: Vertex

    def __post_init__(self) -> None:
        if self.added in self.base:
            raise DuplicateVertexError(f"{self.added} already lies in the region")
        if self.anchor not in self.base:
            raise DetachedVertexError(f"anchor {self.anchor} is not in the region")
        if not adjacent(self.added, self.anchor):
            raise DetachedVertexError(f"{self.anchor} and {self.added} are not adjacent")

    @property
    def extended(self) -> TreeRegion:
        return self.base.add(self.added)

    def to_json(self) -> dict:
        return {
            "region": self.base.to_json(),
            "added": list(self.added),
            "anchor": list(self.anchor),
        }


def growth_step(region: TreeRegion, v: Sequence[int]) -> GrowthStep:
    """Pair ``v`` with its neighbour in ``region``; ties go to the smallest address."""
    v = validate_address(v, region.k)
    if v in region:
        raise DuplicateVertexError(f"{v} already lies in the region")
    inside = [y for y in neighbors(v, region.k) if y in region]
    if not inside:
        raise DetachedVertexError(f"{v} has no neighbour in the region")
    return GrowthStep(region, v, min(inside))


@dataclass(frozen=True)
class SpinConfiguration:
    """Spin labels on every vertex of a region, nothing outside it."""

    region: TreeRegion
    spins: Mapping[Vertex, int]

    def __post_init__(self) -> None:
        spins = {tuple(x): int(s) for x, s in self.spins.items()}
        if set(spins) != set(self.region.vertices):
            raise ConstraintError("spins must cover exactly the vertices of the region")
        object.__setattr__(self, "spins", spins)

    def __getitem__(self, x: Vertex) -> int:
        return self.spins[x]

    def __len__(self) -> int:
        return len(self.spins)

    def __hash__(self) -> int:
        return hash((self.region, self.key()))

    def values(self) -> list[int]:
        """Spins in breadth-first vertex order."""
        return [self.spins[x] for x in self.region.ordered()]

    def key(self) -> tuple[tuple[Vertex, int], ...]:
        return tuple((x, self.spins[x]) for x in self.region.ordered())

    def restrict(self, vertices: Iterable[Vertex]) -> "SpinConfiguration":
        keep = frozenset(vertices)
        missing = keep - self.region.vertices
        if missing:
            raise ConstraintError(f"cannot restrict to vertices outside the region: {missing}")
        return SpinConfiguration(
            TreeRegion(self.region.k, keep), {x: self.spins[x] for x in keep}
        )

    def to_json(self) -> dict:
        return {
            "k": self.region.k,
            "spins": [{"vertex": list(x), "spin": s} for x, s in self.key()],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "SpinConfiguration":
        k = int(data["k"])
        spins = {validate_address(e["vertex"], k): int(e["spin"]) for e in data["spins"]}
        return cls(TreeRegion(k, frozenset(spins)), spins)

    @classmethod
    def empty(cls, k: int) -> "SpinConfiguration":
        return cls(TreeRegion(k), {})


def extend_configuration(config: SpinConfiguration, v: Sequence[int], s: int) -> SpinConfiguration:
    v = validate_address(v, config.region.k)
    if v in config.region:
        raise DuplicateVertexError(f"{v} already carries a spin")
    spins = dict(config.spins)
    spins[v] = s
    return SpinConfiguration(config.region.add(v), spins)


def configurations(region: TreeRegion, q: int, budget: int | None = None) -> Iterator[SpinConfiguration]:
    """Every configuration over spins ``0..q-1``, in product order over :meth:`TreeRegion.ordered`."""
    if q < 1:
        raise EmptyDomainError(f"alphabet size must be positive, got {q}")
    if budget is not None and q ** len(region) > budget:
        raise ResourceBoundError(
            f"{q}^{len(region)} configurations exceed the enumeration budget {budget}"
        )
    order = region.ordered()
    return (
        SpinConfiguration(region, dict(zip(order, spins)))
        for spins in itertools.product(range(q), repeat=len(order))
    )

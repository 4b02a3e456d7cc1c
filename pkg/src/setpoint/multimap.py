"""Set-valued maps F: X -> 2^Y on a finite universe Y."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, NamedTuple

import numpy as np

from .metric import MetricSpace, StructuralError, hausdorff, point_set

__all__ = [
    "GraphPair",
    "MultiMap",
    "gap",
    "fixed_points",
    "lipschitz_estimate",
    "graph",
    "halving_map",
    "shrink_toward_map",
    "map_from_rule",
]


class GraphPair(NamedTuple):
    x: int
    t: int


@dataclass(frozen=True, eq=False)
class MultiMap:
    """A total set-valued map on ``domain`` with values in ``space``.

    Values may leave the domain (non-self maps).  Every value is a
    nonempty sorted tuple of universe indices.
    """

    space: MetricSpace
    domain: tuple[int, ...]
    values: Mapping[int, tuple[int, ...]]
    _domain_set: frozenset = field(init=False, repr=False)

    def __post_init__(self):
        dom = point_set(self.space, self.domain)
        vals = {}
        for x in dom:
            if x not in self.values:
                raise StructuralError(f"values.{x}: missing")
            raw = tuple(self.values[x])
            if not raw:
                raise StructuralError(f"values.{x}: empty")
            try:
                vals[x] = point_set(self.space, raw)
            except StructuralError as exc:
                raise StructuralError(f"values.{x}: {exc}") from None
        extra = set(self.values) - set(dom)
        if extra:
            raise StructuralError(f"values.{min(extra)}: not in domain")
        object.__setattr__(self, "domain", dom)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_domain_set", frozenset(dom))

    @classmethod
    def from_table(cls, space: MetricSpace, table: Mapping[int, Iterable[int]],
                   domain: Iterable[int] | None = None) -> "MultiMap":
        dom = tuple(table) if domain is None else tuple(domain)
        return cls(space, dom, {int(k): tuple(v) for k, v in table.items()})

    def __call__(self, x: int) -> tuple[int, ...]:
        try:
            return self.values[x]
        except KeyError:
            raise StructuralError(f"{x} is outside the domain") from None

    def in_domain(self, x: int) -> bool:
        return x in self._domain_set

    def is_fixed(self, x: int) -> bool:
        return x in self.values[x]

    @property
    def is_self_map(self) -> bool:
        return all(y in self._domain_set for v in self.values.values() for y in v)

    @cached_property
    def gaps(self) -> dict[int, float]:
        rows = self.space.rows
        return {x: min(rows[x][y] for y in v) for x, v in self.values.items()}

    def gap(self, x: int) -> float:
        if x not in self._domain_set:
            raise StructuralError(f"{x} is outside the domain")
        return self.gaps[x]

    def dist_to_value(self, z: int, x: int) -> float:
        """d(z, F(x)) for any universe point z."""
        row = self.space.rows[z]
        return min(row[y] for y in self.values[x])

    def value_hausdorff(self, x: int, y: int) -> float:
        return hausdorff(self.space, self.values[x], self.values[y])

    @cached_property
    def image(self) -> tuple[int, ...]:
        return tuple(sorted({y for v in self.values.values() for y in v}))

    def to_dict(self) -> dict:
        return {"domain": list(self.domain),
                "values": {str(x): list(v) for x, v in self.values.items()}}


def gap(fmap: MultiMap, x: int) -> float:
    return fmap.gap(x)


def fixed_points(fmap: MultiMap) -> list[int]:
    """Brute-force oracle: every x with x in F(x)."""
    return [x for x in fmap.domain if x in fmap.values[x]]


def lipschitz_estimate(fmap: MultiMap) -> float:
    """max over x != y of D(F(x), F(y)) / d(x, y); 0 on a singleton domain."""
    dom = fmap.domain
    rows = fmap.space.rows
    best = 0.0
    for a, x in enumerate(dom):
        for y in dom[a + 1:]:
            ratio = fmap.value_hausdorff(x, y) / rows[x][y]
            if ratio > best:
                best = ratio
    return best


def graph(fmap: MultiMap) -> list[GraphPair]:
    return [GraphPair(x, t) for x in fmap.domain for t in fmap.values[x]]


def _snap(coords: np.ndarray, target: np.ndarray, space: MetricSpace) -> int:
    """Index of the universe point nearest ``target``; ties go to the smaller norm."""
    d = space.distances_to(target)
    best = d.min()
    cand = np.nonzero(d <= best + 1e-12 * max(1.0, float(best)))[0]
    return int(min(cand, key=lambda i: (float(np.abs(coords[i]).sum()), i)))


def map_from_rule(space: MetricSpace, rule: Callable[[np.ndarray], list[np.ndarray]],
                  domain: Iterable[int] | None = None) -> MultiMap:
    """Materialise a coordinate rule into a table, snapping values to the grid."""
    if space.kind != "embedded":
        raise StructuralError("rule-defined maps need an embedded space")
    dom = space.points if domain is None else tuple(domain)
    coords = space.coords
    table = {x: tuple({_snap(coords, np.asarray(v, float), space) for v in rule(coords[x])})
             for x in dom}
    return MultiMap.from_table(space, table, dom)


def halving_map(space: MetricSpace, domain: Iterable[int] | None = None) -> MultiMap:
    """F(x) = {x/2} snapped to the grid (ties toward 0)."""
    return map_from_rule(space, lambda u: [u / 2.0], domain)


def shrink_toward_map(space: MetricSpace, center, step: float,
                      domain: Iterable[int] | None = None) -> MultiMap:
    """Per coordinate u -> c + sign(u-c) * max(|u-c| - step, 0) / 2.

    A 1/2-contraction under any monotone norm whose value at a domain point
    one ``step`` away from ``center`` is ``center`` itself.
    """
    c = np.atleast_1d(np.asarray(center, float))

    def rule(u):
        w = u - c
        return [c + np.sign(w) * np.maximum(np.abs(w) - step, 0.0) / 2.0]

    return map_from_rule(space, rule, domain)

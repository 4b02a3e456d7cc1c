"""Greedy descents realising the Caristi-type tool theorems on finite maps.

Every descent moves strictly downhill in a bounded-below quantity, so on a
finite domain it stops either at a fixed point or at a point where no
admissible move exists.  The latter is a certificate that the hypothesis of
the corresponding tool theorem fails there.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from .conditions import (ConditionParams, ConditionParamsError, ConditionReport,
                         check_condition, co16_admissible, co18_lhs, co20_admissible)
from .metric import MetricSpace, StructuralError, validate_metric
from .multimap import GraphPair, MultiMap, graph


class PreconditionError(ValueError):
    """A tool theorem's standing hypothesis fails on the instance."""


@dataclass(frozen=True)
class Potential:
    """A real function on the domain with a finite lower bound."""

    values: Mapping[int, float]
    lower_bound: float = 0.0

    def __post_init__(self):
        low = [x for x, v in self.values.items() if v < self.lower_bound]
        if low:
            raise StructuralError(f"phi.{low[0]}: below the lower bound {self.lower_bound}")

    @classmethod
    def of_gap(cls, fmap: MultiMap) -> "Potential":
        return cls(dict(fmap.gaps), 0.0)

    def __call__(self, x: int) -> float:
        try:
            return self.values[x]
        except KeyError:
            raise StructuralError(f"phi.{x}: missing") from None


@dataclass(frozen=True)
class ScaledMetric:
    """delta = scale * d, or an explicit symmetric table over an index set."""

    base: MetricSpace
    scale: float | None = 1.0
    table: Mapping[tuple[int, int], float] | None = None

    def __post_init__(self):
        if self.table is None:
            if self.scale is None or self.scale <= 0:
                raise StructuralError("scale must be positive")
            return
        idx = sorted({i for pair in self.table for i in pair})
        pos = {i: n for n, i in enumerate(idx)}
        m = np.zeros((len(idx), len(idx)))
        for (i, j), v in self.table.items():
            m[pos[i], pos[j]] = m[pos[j], pos[i]] = v
        bad = validate_metric(m, self.base.tolerance)
        if bad:
            raise StructuralError(f"delta table is not a metric: {bad[0].axiom} at "
                                  f"{tuple(idx[k] for k in bad[0].indices)}")

    def __call__(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        if self.table is None:
            return self.scale * self.base.rows[i][j]
        if (i, j) in self.table:
            return self.table[(i, j)]
        return self.table[(j, i)]

    def equivalence_bounds(self, pairs: Iterable[tuple[int, int]]) -> tuple[float, float]:
        """min and max of delta/d over the given pairs (sampled bi-Lipschitz bounds)."""
        ratios = [self(i, j) / self.base.rows[i][j] for i, j in pairs if i != j]
        return (min(ratios), max(ratios)) if ratios else (1.0, 1.0)


@dataclass(frozen=True)
class GraphMetric:
    """A metric on the graph pairs of a map, stored as a validated table."""

    pairs: tuple[GraphPair, ...]
    matrix: np.ndarray
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {GraphPair(*p): n for n, p in enumerate(self.pairs)})

    @classmethod
    def from_function(cls, fmap: MultiMap, fn: Callable) -> "GraphMetric":
        pairs = tuple(graph(fmap))
        m = np.array([[fn(p, q) if p != q else 0.0 for q in pairs] for p in pairs], float)
        bad = validate_metric(m, fmap.space.tolerance)
        if bad:
            which = tuple(tuple(pairs[k]) for k in bad[0].indices)
            raise StructuralError(f"graph metric fails {bad[0].axiom} at {which}")
        return cls(pairs, m)

    def __call__(self, p, q) -> float:
        return float(self.matrix[self.index[GraphPair(*p)], self.index[GraphPair(*q)]])


def co18_graph_metric(fmap: MultiMap, alpha: float, epsilon: float) -> GraphMetric:
    """(1-a-e) * max(d(x,z), d(t,v)/(a+e)), the left side of (18), as a graph metric."""
    rows = fmap.space.rows
    return GraphMetric.from_function(
        fmap, lambda p, q: co18_lhs(alpha, epsilon, rows[p[0]][q[0]], rows[p[1]][q[1]]))


@dataclass
class DescentVerdict:
    success: bool
    status: str
    point: int | None
    start: object
    moves: list[dict] = field(default_factory=list)
    violation_at: object = None
    reports: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def path(self) -> list:
        return [self.start] + [m["to"] for m in self.moves]

    def to_dict(self) -> dict:
        def js(v):
            return list(v) if isinstance(v, tuple) else v

        return {"success": self.success, "status": self.status, "fixed_point": self.point,
                "start": js(self.start), "violation_at": js(self.violation_at),
                "moves": [{k: js(v) for k, v in m.items()} for m in self.moves],
                "reports": {k: r.to_dict() for k, r in self.reports.items()},
                "notes": list(self.notes)}


def move_record(step, src, dst, before, after) -> dict:
    return {"step": step, "from": src, "to": dst, "potential_before": before,
            "potential_after": after}


def caristi_descent(fmap: MultiMap, phi, delta, x0: int, max_iter: int | None = None,
                    forced: Mapping[int, int] | None = None) -> DescentVerdict:
    """Walk to a fixed point along moves with delta(x, z) <= phi(x) - phi(z).

    The admissible z of least phi is taken (ties: smallest index).  With
    ``forced`` (a single-valued g), the only candidate at x is g(x).
    """
    if not fmap.in_domain(x0):
        raise StructuralError(f"x0={x0} is outside the domain")
    tol = fmap.space.tolerance
    if max_iter is None:
        max_iter = len(fmap.domain) + 1
    verdict = DescentVerdict(False, "max_iter", None, x0)
    x = x0
    for step in range(max_iter + 1):
        if fmap.is_fixed(x):
            verdict.success, verdict.status, verdict.point = True, "fixed", x
            return verdict
        if step == max_iter:
            break
        px = phi(x)
        cands = [forced[x]] if forced is not None else [z for z in fmap.domain if z != x]
        adm = [z for z in cands if fmap.in_domain(z) and z != x
               and delta(x, z) <= px - phi(z) + tol and phi(z) < px - tol]
        if not adm:
            verdict.status, verdict.violation_at = "violation", x
            verdict.notes.append(f"no admissible move at {x}")
            return verdict
        z = min(adm, key=lambda z: (phi(z), z))
        verdict.moves.append(move_record(step, x, z, px, phi(z)))
        x = z
    return verdict


def telescoping_holds(verdict: DescentVerdict, delta, tolerance: float) -> bool:
    """Every logged move satisfies delta(x_n, x_{n+1}) <= phi(x_n) - phi(x_{n+1})."""
    return all(delta(m["from"], m["to"]) <= m["potential_before"] - m["potential_after"] + tolerance
               for m in verdict.moves)


def gap_descent(fmap: MultiMap, delta, x0: int, max_iter: int | None = None) -> DescentVerdict:
    """Caristi descent with the gap x -> d(x, F(x)) as potential."""
    verdict = caristi_descent(fmap, Potential.of_gap(fmap), delta, x0, max_iter)
    if not telescoping_holds(verdict, delta, fmap.space.tolerance):
        verdict.notes.append("gap telescoping violated")
    return verdict


def _require_contraction(fmap: MultiMap, alpha: float) -> ConditionReport:
    rep = check_condition(fmap, 2, ConditionParams(alpha=alpha))
    if not rep.holds:
        raise PreconditionError(f"(2) fails with alpha={alpha} at pair {rep.falsifier}")
    return rep


def build_co15_step(fmap: MultiMap, alpha: float, epsilon: float,
                    co14_witnesses: Mapping[int, int] | None = None) -> ConditionReport:
    """Turn (14) witnesses into (15) witnesses for an alpha-contraction.

    gap(z) <= d(z, F(x)) + D(F(x), F(z)) <= d(z, F(x)) + alpha d(x, z), so a
    (14) witness z gives (1 - alpha - eps) d(x, z) <= gap(x) - gap(z).
    """
    if alpha + epsilon >= 1 or epsilon < 0 or alpha < 0:
        raise ConditionParamsError("build_co15_step needs alpha, epsilon >= 0 and alpha + epsilon < 1")
    _require_contraction(fmap, alpha)
    if co14_witnesses is None:
        co14_witnesses = check_condition(fmap, 14, ConditionParams(epsilon=epsilon)).witnesses
    rows, gaps, tol = fmap.space.rows, fmap.gaps, fmap.space.tolerance
    c = 1 - alpha - epsilon
    rep = ConditionReport("co15", True, notes=[f"coefficient {c!r}"])
    for x in fmap.domain:
        if fmap.is_fixed(x):
            continue
        z = co14_witnesses.get(x)
        if z is None or z == x or (1 - epsilon) * rows[x][z] > gaps[x] - fmap.dist_to_value(z, x) + tol:
            rep.holds, rep.falsifier = False, x
            rep.notes.append(f"(14) has no witness at {x}; (15) not asserted there")
            return rep
        if c * rows[x][z] > gaps[x] - gaps[z] + tol:
            rep.holds, rep.falsifier = False, x
            rep.notes.append(f"(15) fails at {x} with z={z}")
            return rep
        rep.witnesses[x] = z
    return rep


def _pair_descent(fmap: MultiMap, start, max_iter, admissible) -> DescentVerdict:
    x, t = start
    if not fmap.in_domain(x) or t not in fmap.values[x]:
        raise StructuralError(f"start {tuple(start)} is not a graph pair")
    rows, tol = fmap.space.rows, fmap.space.tolerance
    if max_iter is None:
        max_iter = sum(len(v) for v in fmap.values.values()) + 1
    verdict = DescentVerdict(False, "max_iter", None, (x, t))
    for step in range(max_iter + 1):
        if fmap.is_fixed(x):
            verdict.success, verdict.status, verdict.point = True, "fixed", x
            return verdict
        if step == max_iter:
            break
        dxt = rows[x][t]
        adm = [(z, v) for z, v in admissible(x, t) if rows[z][v] < dxt - tol]
        if not adm:
            verdict.status, verdict.violation_at = "violation", (x, t)
            verdict.notes.append(f"no admissible move at {(x, t)}")
            return verdict
        z, v = min(adm, key=lambda p: (rows[p[0]][p[1]], p))
        verdict.moves.append(move_record(step, (x, t), (z, v), dxt, rows[z][v]))
        x, t = z, v
    return verdict


def graph_descent_co16(fmap: MultiMap, delta, k: float, start, max_iter: int | None = None) -> DescentVerdict:
    """Descent on graph pairs through (16)-admissible moves, minimising d(z, v)."""
    if k <= 0:
        raise ConditionParamsError("k must be positive")
    tol = fmap.space.tolerance
    return _pair_descent(fmap, start, max_iter,
                         lambda x, t: co16_admissible(fmap, delta, k, x, t, tol))


def pair_descent_co20(fmap: MultiMap, graph_metric: GraphMetric, start,
                      max_iter: int | None = None) -> DescentVerdict:
    """Descent on graph pairs through (20)-admissible moves."""
    if not isinstance(graph_metric, GraphMetric):
        raise StructuralError("pair_descent_co20 needs a validated GraphMetric")
    tol = fmap.space.tolerance
    return _pair_descent(fmap, start, max_iter,
                         lambda x, t: co20_admissible(fmap, graph_metric, x, t, tol))


def build_co18_step(fmap: MultiMap, alpha: float, epsilon: float, epsilon1: float,
                    co17_witnesses: Mapping[tuple, int] | None = None) -> ConditionReport:
    """Complete (17) witnesses z to (18) witnesses (z, v).

    v is the point of F(z) nearest t (ties ascending); the contraction
    gives d(t, v) <= alpha d(x, z), which is checked as (19).
    """
    if alpha < 0 or alpha + epsilon >= 1:
        raise ConditionParamsError("build_co18_step needs 0 <= alpha and alpha + epsilon < 1")
    if not 0 < epsilon1 < epsilon:
        raise ConditionParamsError("build_co18_step needs 0 < epsilon1 < epsilon")
    _require_contraction(fmap, alpha)
    if co17_witnesses is None:
        co17_witnesses = check_condition(
            fmap, 17, ConditionParams(epsilon=epsilon, epsilon1=epsilon1)).witnesses
    rows, tol = fmap.space.rows, fmap.space.tolerance
    rep = ConditionReport("co18", True, notes=[
        f"descent parameters: delta = {1 - alpha - epsilon!r} * d, k = {alpha + epsilon!r}"])
    for x in fmap.domain:
        if fmap.is_fixed(x):
            continue
        for t in fmap.values[x]:
            z = co17_witnesses.get((x, t))
            if z is None or z == x or (1 - epsilon1) * rows[x][z] > rows[x][t] - rows[z][t] + tol:
                rep.holds, rep.falsifier = False, [x, t]
                rep.notes.append(f"(17) has no witness at {(x, t)}")
                return rep
            v = min(fmap.values[z], key=lambda v: (rows[t][v], v))
            if rows[t][v] > (alpha + epsilon - epsilon1) * rows[x][z] + tol:
                rep.holds, rep.falsifier = False, [x, t]
                rep.notes.append(f"(19) unrealizable at {(x, t)}: the instance is rejected")
                return rep
            if co18_lhs(alpha, epsilon, rows[x][z], rows[t][v]) > rows[x][t] - rows[z][v] + tol:
                rep.holds, rep.falsifier = False, [x, t]
                rep.notes.append(f"(18) fails at {(x, t)} with {(z, v)}")
                return rep
            rep.witnesses[(x, t)] = (z, v)
    return rep


def co18_descent_params(fmap: MultiMap, alpha: float, epsilon: float) -> tuple[ScaledMetric, float]:
    """(delta, k) for graph_descent_co16 derived from (18)."""
    return ScaledMetric(fmap.space, 1 - alpha - epsilon), alpha + epsilon

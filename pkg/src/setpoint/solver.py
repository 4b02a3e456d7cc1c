"""Successive-approximation engines for set-valued maps.

Each engine walks x_{n+1} in F(x_n) with a deterministic selection rule and
records an :class:`IterationTrace`.  :func:`resolve_limit` turns a trace into
a fixed-point verdict, either along the Cauchy route (geometrically decaying
steps, last point is the limit) or the cluster route (minimal-gap point).
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

from .conditions import ConditionParams, ConditionParamsError, check_condition
from .multimap import MultiMap

MAX_ITER_CAP = 100_000


@dataclass
class IterationTrace:
    points: list[int]
    chosen: list[int]
    gaps: list[float]
    steps: list[float]
    params: ConditionParams
    status: str = "max_iter"
    failed_at: int | None = None
    rule: str = ""

    def records(self):
        for n, x in enumerate(self.points):
            yield {
                "n": n,
                "x": x,
                "y": self.chosen[n] if n < len(self.chosen) else None,
                "gap": self.gaps[n],
                "step": self.steps[n] if n < len(self.steps) else None,
            }

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["n", "x", "y", "gap", "step"], lineterminator="\n")
        writer.writeheader()
        for r in self.records():
            writer.writerow({k: "" if v is None else v for k, v in r.items()})
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"rule": self.rule, "status": self.status, "failed_at": self.failed_at,
                "points": self.points, "chosen": self.chosen, "gaps": self.gaps,
                "steps": self.steps, "params": self.params.to_dict()}


def default_max_iter(rate: float, tolerance: float) -> int:
    if rate <= 0:
        return 10
    if rate >= 1:
        return MAX_ITER_CAP
    return min(MAX_ITER_CAP, 10 * math.ceil(math.log(tolerance) / math.log(rate)))


def _run(fmap: MultiMap, x0: int, params: ConditionParams, max_iter: int, choose, rule: str) -> IterationTrace:
    if not fmap.in_domain(x0):
        raise ValueError(f"x0={x0} is outside the domain")
    rows, gaps, tol = fmap.space.rows, fmap.gaps, fmap.space.tolerance
    trace = IterationTrace([x0], [], [gaps[x0]], [], params, rule=rule)
    x = x0
    seen = {x0}
    for _ in range(max_iter):
        if fmap.is_fixed(x):
            trace.status = "converged"
            return trace
        y = choose(x)
        if y is None:
            if gaps[x] <= tol:
                trace.status = "converged"
            else:
                trace.status = "selection_failed"
                trace.failed_at = x
            return trace
        trace.chosen.append(y)
        trace.points.append(y)
        trace.gaps.append(gaps[y])
        trace.steps.append(rows[x][y])
        x = y
        if y in seen:
            # deterministic selection: a revisit repeats forever
            break
        seen.add(y)
    trace.status = "converged" if fmap.is_fixed(x) or gaps[x] <= tol else "max_iter"
    return trace


def iterate_co3(fmap: MultiMap, x0: int, alpha: float, epsilon: float,
                max_iter: int | None = None) -> IterationTrace:
    """Iterate with the (3)-admissible value of least gap.

    Candidates are y in F(x) with alpha*d(y, x) <= (alpha+eps)*d(F(x), x);
    the step fails when (3) has no witness at x.
    """
    if not (0 < alpha and alpha + epsilon < 1 and epsilon >= 0):
        raise ConditionParamsError("iterate_co3 needs alpha > 0, epsilon >= 0, alpha + epsilon < 1")
    params = ConditionParams(alpha=alpha, epsilon=epsilon)
    rows, gaps, tol = fmap.space.rows, fmap.gaps, fmap.space.tolerance
    rate = alpha + epsilon

    def choose(x):
        g = gaps[x]
        cands = [y for y in fmap.values[x] if y in gaps and alpha * rows[y][x] <= rate * g + tol]
        if not any(gaps[y] <= alpha * rows[y][x] + tol for y in cands):
            return None
        return min(cands, key=lambda y: (gaps[y], y))

    if max_iter is None:
        max_iter = default_max_iter(rate, tol)
    return _run(fmap, x0, params, max_iter, choose, "co3")


def iterate_nearest(fmap: MultiMap, x0: int, alpha: float, max_iter: int | None = None) -> IterationTrace:
    """Iterate through nearest points of F(x), checking gap(y) <= alpha*gap(x).

    Among several nearest points the one of least gap is taken (then the
    smallest index), so that (5) holding at x is never missed by a tie.
    """
    if not 0 <= alpha < 1:
        raise ConditionParamsError("iterate_nearest needs 0 <= alpha < 1")
    params = ConditionParams(alpha=alpha)
    rows, gaps, tol = fmap.space.rows, fmap.gaps, fmap.space.tolerance

    def choose(x):
        g = gaps[x]
        near = [y for y in fmap.values[x] if rows[x][y] <= g + tol and y in gaps]
        if not near:
            return None
        y = min(near, key=lambda y: (gaps[y], y))
        return y if gaps[y] <= alpha * g + tol else None

    if max_iter is None:
        max_iter = default_max_iter(alpha, tol)
    return _run(fmap, x0, params, max_iter, choose, "nearest")


def iterate_co7(fmap: MultiMap, x0: int, alpha: float, max_iter: int | None = None) -> IterationTrace:
    """Iterate with the value of least gap; steps need not shrink."""
    if not 0 <= alpha < 1:
        raise ConditionParamsError("iterate_co7 needs 0 <= alpha < 1")
    params = ConditionParams(alpha=alpha)
    gaps, tol = fmap.gaps, fmap.space.tolerance

    def choose(x):
        cands = [y for y in fmap.values[x] if y in gaps]
        return min(cands, key=lambda y: (gaps[y], y)) if cands else None

    if max_iter is None:
        max_iter = default_max_iter(alpha, tol)
    return _run(fmap, x0, params, max_iter, choose, "co7")


def gap_decay_holds(trace: IterationTrace, tolerance: float = 1e-9) -> bool:
    """gaps[n] <= alpha^n * gaps[0] along the trace (geometric gap decay)."""
    a = trace.params.alpha
    return all(g <= a ** n * trace.gaps[0] + tolerance for n, g in enumerate(trace.gaps))


def step_decay_holds(trace: IterationTrace, tolerance: float = 1e-9) -> bool:
    """Cauchy certificate: steps[n] <= rate^(n+1) * gaps[0] / alpha."""
    a = trace.params.alpha
    rate = a + trace.params.epsilon
    if a <= 0:
        return all(s <= tolerance for s in trace.steps)
    return all(s <= rate ** (n + 1) * trace.gaps[0] / a + tolerance
               for n, s in enumerate(trace.steps))


@dataclass
class FixedPointVerdict:
    found: bool
    point: int | None
    route: str
    min_gap: float
    oracle_confirmed: bool = False
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"found": self.found, "fixed_point": self.point, "route": self.route,
                "min_gap": self.min_gap, "oracle_confirmed": self.oracle_confirmed,
                "notes": list(self.notes)}


def resolve_limit(fmap: MultiMap, trace: IterationTrace) -> FixedPointVerdict:
    """Extract a fixed point from a trace.

    Cauchy route when the steps obey the geometric bound, otherwise the
    cluster route through the minimal-gap trace point.
    """
    if not trace.points:
        raise ValueError("empty trace")
    tol = fmap.space.tolerance
    if trace.rule in ("co3", "nearest") and step_decay_holds(trace, tol):
        x, route = trace.points[-1], "cauchy"
    else:
        x = min(trace.points, key=lambda p: (fmap.gaps[p], p))
        route = "cluster"
    g = fmap.gaps[x]
    found = g <= tol
    notes = []
    if found and not fmap.is_fixed(x):
        # gap below tolerance without exact membership: the limit is a value
        # of F(x) that is itself fixed
        near = [y for y in fmap.values[x] if fmap.in_domain(y) and fmap.is_fixed(y)
                and fmap.space.rows[x][y] <= tol]
        if near:
            x = near[0]
            notes.append("limit taken within tolerance")
    verdict = FixedPointVerdict(found, x if found else None, route, min(trace.gaps), notes=notes)
    verdict.oracle_confirmed = found and fmap.is_fixed(x)
    if not found:
        verdict.notes.append(f"no fixed point: least gap reached {min(trace.gaps)!r}")
    return verdict


def solve(fmap: MultiMap, x0: int, method: str = "co3", alpha: float = 0.5, epsilon: float = 0.1,
          max_iter: int | None = None) -> tuple[IterationTrace, FixedPointVerdict, list]:
    """Run an engine and resolve; returns the trace, verdict and the hypothesis report."""
    if method == "co3":
        trace = iterate_co3(fmap, x0, alpha, epsilon, max_iter)
        hyp = check_condition(fmap, 3, ConditionParams(alpha=alpha, epsilon=epsilon))
    elif method == "nearest":
        trace = iterate_nearest(fmap, x0, alpha, max_iter)
        hyp = check_condition(fmap, 5, ConditionParams(alpha=alpha))
    elif method == "co7":
        trace = iterate_co7(fmap, x0, alpha, max_iter)
        hyp = check_condition(fmap, 7, ConditionParams(alpha=alpha))
    else:
        raise ValueError(f"unknown method {method!r}")
    return trace, resolve_limit(fmap, trace), [hyp]

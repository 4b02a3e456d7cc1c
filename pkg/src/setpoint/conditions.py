"""Exhaustive checkers for the numbered fixed-point conditions.

Each checker evaluates its quantifiers over the finite domain.  For
"for each x there exists y" conditions the witness table stores the
smallest-index satisfier.  Conditions that need auxiliary data (a potential,
a second metric, a centre and a sequence) read it from
:class:`ConditionParams`.

Conventions for non-self maps: conditions that evaluate ``d(F(y), y)`` for a
chosen value ``y`` only accept ``y`` in the domain.  Condition (4) is
falsified by a value outside the domain since ``F(y)`` is undefined there.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .metric import StructuralError
from .multimap import MultiMap

CONDITION_IDS = (1, 2, 3, 4, 5, 7, 11, 12, 13, 14, 15, 16, 17, 18, 20, 21)


class ConditionParamsError(ValueError):
    """Parameters violate a checker's constraints."""


@dataclass(frozen=True)
class ConditionParams:
    alpha: float = 0.5
    epsilon: float = 0.0
    epsilon1: float = 0.0
    k: float = 1.0
    beta: float = 1.0
    lambda_: float = 0.0
    # extensions: phi(x) -> real, delta(i, j) -> real, graph_metric((x,t),(z,v)) -> real
    phi: Any = None
    delta: Any = None
    graph_metric: Any = None
    center: int | None = None
    sequence: Sequence[int] | None = None

    def to_dict(self) -> dict:
        out = {"alpha": self.alpha, "epsilon": self.epsilon, "epsilon1": self.epsilon1,
               "k": self.k, "beta": self.beta, "lambda": self.lambda_}
        if self.center is not None:
            out["center"] = self.center
        if self.sequence is not None:
            out["sequence"] = list(self.sequence)
        return out


@dataclass
class ConditionReport:
    condition_id: str
    holds: bool
    witnesses: dict = field(default_factory=dict)
    falsifier: Any = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        def key(k):
            return ",".join(map(str, k)) if isinstance(k, tuple) else str(k)

        def val(v):
            return list(v) if isinstance(v, tuple) else v

        return {
            "condition_id": self.condition_id,
            "holds": self.holds,
            "witnesses": {key(k): val(v) for k, v in self.witnesses.items()},
            "falsifier": self.falsifier,
            "notes": list(self.notes),
        }

    def __bool__(self) -> bool:
        return self.holds


def normalize_id(cid) -> int:
    if isinstance(cid, str):
        s = cid.strip().lower().lstrip("co").strip("()")
        try:
            cid = int(s)
        except ValueError:
            raise ConditionParamsError(f"unknown condition id {cid!r}") from None
    if cid not in CONDITION_IDS:
        raise ConditionParamsError(f"unknown condition id {cid!r}")
    return int(cid)


def _call(f, *args):
    if callable(f):
        return f(*args)
    return f[args[0]] if len(args) == 1 else f[args]


def _need(params: ConditionParams, name: str, cid: int):
    value = getattr(params, name)
    if value is None:
        raise ConditionParamsError(f"condition ({cid}) needs params.{name}")
    return value


def _check_alpha(params: ConditionParams, cid: int, with_eps: bool):
    a, e = params.alpha, params.epsilon
    if not 0.0 <= a <= 1.0:
        raise ConditionParamsError(f"({cid}): alpha must lie in [0, 1], got {a}")
    if e < 0:
        raise ConditionParamsError(f"({cid}): epsilon must be nonnegative")
    if with_eps and a + e >= 1.0:
        raise ConditionParamsError(f"({cid}): needs alpha + epsilon < 1, got {a + e}")


def _exists_each(cid, items, find) -> ConditionReport:
    """Shared driver for "for each item there is a witness" conditions."""
    witnesses = {}
    for item in items:
        w = find(item)
        if w is None:
            return ConditionReport(f"co{cid}", False, witnesses, _jsonable(item))
        witnesses[item] = w
    return ConditionReport(f"co{cid}", True, witnesses)


def _jsonable(item):
    return list(item) if isinstance(item, tuple) else item


def _pairwise_lipschitz(fmap: MultiMap, cid: int, alpha: float, dist) -> ConditionReport:
    rows = fmap.space.rows
    tol = fmap.space.tolerance
    worst, worst_ratio = None, -1.0
    dom = fmap.domain
    for a, x in enumerate(dom):
        for y in dom[a + 1:]:
            v = dist(x, y)
            if v > alpha * rows[x][y] + tol:
                ratio = v / rows[x][y]
                if ratio > worst_ratio + 1e-15:
                    worst, worst_ratio = [x, y], ratio
    if worst is None:
        return ConditionReport(f"co{cid}", True)
    return ConditionReport(f"co{cid}", False, falsifier=worst,
                           notes=[f"worst ratio {worst_ratio!r}"])


def check_condition(fmap: MultiMap, cid, params: ConditionParams = ConditionParams()) -> ConditionReport:
    """Evaluate condition ``cid`` on ``fmap``; see the module docstring."""
    cid = normalize_id(cid)
    return _CHECKERS[cid](fmap, params)


# -- single pairwise conditions ---------------------------------------------

def _co1(fmap, params):
    _check_alpha(params, 1, False)
    if any(len(v) != 1 for v in fmap.values.values()):
        raise ConditionParamsError("(1) needs a single-valued map")
    rows = fmap.space.rows
    f = {x: v[0] for x, v in fmap.values.items()}
    return _pairwise_lipschitz(fmap, 1, params.alpha, lambda x, y: rows[f[x]][f[y]])


def _co2(fmap, params):
    # Lipschitz form: any alpha >= 0 is meaningful here
    if params.alpha < 0:
        raise ConditionParamsError("(2): alpha must be nonnegative")
    return _pairwise_lipschitz(fmap, 2, params.alpha, fmap.value_hausdorff)


# -- existence conditions ----------------------------------------------------

def _co3(fmap, params):
    _check_alpha(params, 3, True)
    a, e = params.alpha, params.epsilon
    rows, gaps, tol = fmap.space.rows, fmap.gaps, fmap.space.tolerance

    def find(x):
        g = gaps[x]
        for y in fmap.values[x]:
            if y in gaps and gaps[y] <= a * rows[y][x] + tol and a * rows[y][x] <= (a + e) * g + tol:
                return y
        return None

    rep = _exists_each(3, fmap.domain, find)
    if a == 0:
        rep.notes.append("alpha=0 convention: the witness must be a fixed point inside F(x)")
    return rep


def _co4(fmap, params):
    _check_alpha(params, 4, False)
    a = params.alpha
    rows, tol = fmap.space.rows, fmap.space.tolerance
    pairs = [(x, y) for x in fmap.domain for y in fmap.values[x]]

    def find(pair):
        x, y = pair
        if not fmap.in_domain(y):
            return None
        for z in fmap.values[y]:
            if rows[z][y] <= a * rows[y][x] + tol:
                return z
        return None

    return _exists_each(4, pairs, find)


def _co5(fmap, params):
    _check_alpha(params, 5, False)
    a = params.alpha
    rows, gaps, tol = fmap.space.rows, fmap.gaps, fmap.space.tolerance

    def find(x):
        g = gaps[x]
        for y in fmap.values[x]:
            if y in gaps and abs(rows[y][x] - g) <= tol and gaps[y] <= a * g + tol:
                return y
        return None

    return _exists_each(5, fmap.domain, find)


def _co7(fmap, params):
    _check_alpha(params, 7, False)
    a = params.alpha
    gaps, tol = fmap.gaps, fmap.space.tolerance

    def find(x):
        for y in fmap.values[x]:
            if y in gaps and gaps[y] <= a * gaps[x] + tol:
                return y
        return None

    return _exists_each(7, fmap.domain, find)


# -- centre conditions -------------------------------------------------------

def _center_data(fmap, params, cid):
    x = _need(params, "center", cid)
    seq = list(_need(params, "sequence", cid))
    if not fmap.in_domain(x) or not all(fmap.in_domain(s) for s in seq):
        raise StructuralError(f"({cid}): centre and sequence must lie in the domain")
    return x, seq


def _co11(fmap, params):
    x, seq = _center_data(fmap, params, 11)
    rows, tol = fmap.space.rows, fmap.space.tolerance

    def find(n):
        xn = seq[n]
        for y in fmap.values[xn]:
            if fmap.dist_to_value(y, x) <= rows[x][xn] + tol:
                return y
        return None

    return _exists_each(11, range(len(seq)), find)


def _co12(fmap, params):
    x, seq = _center_data(fmap, params, 12)
    rows, tol = fmap.space.rows, fmap.space.tolerance
    for n, xn in enumerate(seq):
        for y in fmap.values[xn]:
            if fmap.dist_to_value(y, x) > rows[x][xn] + tol:
                return ConditionReport("co12", False, falsifier=[n, y])
    return ConditionReport("co12", True)


# -- descent conditions ------------------------------------------------------

def _non_fixed(fmap):
    return [x for x in fmap.domain if not fmap.is_fixed(x)]


def _non_fixed_pairs(fmap):
    return [(x, t) for x in _non_fixed(fmap) for t in fmap.values[x]]


def caristi_admissible(fmap, phi, delta, x, tol) -> list[int]:
    px = _call(phi, x)
    return [z for z in fmap.domain
            if z != x and _call(delta, x, z) <= px - _call(phi, z) + tol]


def _co13(fmap, params):
    phi = _need(params, "phi", 13)
    delta = _need(params, "delta", 13)
    tol = fmap.space.tolerance

    def find(x):
        adm = caristi_admissible(fmap, phi, delta, x, tol)
        return adm[0] if adm else None

    return _exists_each(13, _non_fixed(fmap), find)


def _co14(fmap, params):
    e = params.epsilon
    if e < 0:
        raise ConditionParamsError("(14): epsilon must be nonnegative")
    rows, gaps, tol = fmap.space.rows, fmap.gaps, fmap.space.tolerance

    def find(x):
        for z in fmap.domain:
            if z != x and (1 - e) * rows[x][z] <= gaps[x] - fmap.dist_to_value(z, x) + tol:
                return z
        return None

    return _exists_each(14, _non_fixed(fmap), find)


def _co15(fmap, params):
    _check_alpha(params, 15, True)
    c = 1 - params.alpha - params.epsilon
    rows, gaps, tol = fmap.space.rows, fmap.gaps, fmap.space.tolerance

    def find(x):
        for z in fmap.domain:
            if z != x and c * rows[x][z] <= gaps[x] - gaps[z] + tol:
                return z
        return None

    return _exists_each(15, _non_fixed(fmap), find)


def pair_moves(fmap, x):
    """Candidate graph moves (z, v): z in X minus {x}, v in F(z)."""
    return [(z, v) for z in fmap.domain if z != x for v in fmap.values[z]]


def co16_admissible(fmap, delta, k, x, t, tol):
    rows = fmap.space.rows
    dxt = rows[x][t]
    out = []
    for z, v in pair_moves(fmap, x):
        drop = dxt - rows[z][v]
        if _call(delta, x, z) <= drop + tol and _call(delta, t, v) <= k * drop + tol:
            out.append((z, v))
    return out


def _co16(fmap, params):
    delta = _need(params, "delta", 16)
    k = params.k
    if k <= 0:
        raise ConditionParamsError("(16): k must be positive")
    tol = fmap.space.tolerance

    def find(pair):
        adm = co16_admissible(fmap, delta, k, *pair, tol)
        return adm[0] if adm else None

    return _exists_each(16, _non_fixed_pairs(fmap), find)


def _co17(fmap, params):
    e1, e = params.epsilon1, params.epsilon
    if not 0 < e1 < e:
        raise ConditionParamsError(f"(17): needs 0 < epsilon1 < epsilon, got {e1}, {e}")
    rows, tol = fmap.space.rows, fmap.space.tolerance

    def find(pair):
        x, t = pair
        for z in fmap.domain:
            if z != x and (1 - e1) * rows[x][z] <= rows[x][t] - rows[z][t] + tol:
                return z
        return None

    return _exists_each(17, _non_fixed_pairs(fmap), find)


def co18_lhs(alpha, eps, dxz, dtv):
    return (1 - alpha - eps) * max(dxz, dtv / (alpha + eps))


def _co18(fmap, params):
    _check_alpha(params, 18, True)
    a, e = params.alpha, params.epsilon
    if a + e <= 0:
        raise ConditionParamsError("(18): needs alpha + epsilon > 0")
    rows, tol = fmap.space.rows, fmap.space.tolerance

    def find(pair):
        x, t = pair
        for z, v in pair_moves(fmap, x):
            if co18_lhs(a, e, rows[x][z], rows[t][v]) <= rows[x][t] - rows[z][v] + tol:
                return (z, v)
        return None

    return _exists_each(18, _non_fixed_pairs(fmap), find)


def co20_admissible(fmap, graph_metric, x, t, tol):
    rows = fmap.space.rows
    return [(z, v) for z, v in pair_moves(fmap, x)
            if _call(graph_metric, (x, t), (z, v)) <= rows[x][t] - rows[z][v] + tol]


def _co20(fmap, params):
    gm = _need(params, "graph_metric", 20)
    tol = fmap.space.tolerance

    def find(pair):
        adm = co20_admissible(fmap, gm, *pair, tol)
        return adm[0] if adm else None

    return _exists_each(20, _non_fixed_pairs(fmap), find)


def _co21(fmap, params):
    gaps, tol = fmap.gaps, fmap.space.tolerance

    def find(x):
        for z in fmap.domain:
            if gaps[z] < gaps[x] - tol:
                return z
        return None

    return _exists_each(21, _non_fixed(fmap), find)


_CHECKERS: dict[int, Callable] = {
    1: _co1, 2: _co2, 3: _co3, 4: _co4, 5: _co5, 7: _co7, 11: _co11, 12: _co12,
    13: _co13, 14: _co14, 15: _co15, 16: _co16, 17: _co17, 18: _co18, 20: _co20, 21: _co21,
}


def check_co6_trace(fmap: MultiMap, trace, zero_tol: float = 1e-6) -> ConditionReport:
    """Trace-level form of (6): vanishing gaps force a zero gap at the limit.

    The limit of a finite trace is its last point.  The antecedent is that the
    recorded gaps have fallen below ``zero_tol``; the conclusion recomputes the
    gap at the limit from the map itself.
    """
    if not trace.points:
        raise StructuralError("empty trace")
    limit = trace.points[-1]
    if not fmap.in_domain(limit):
        raise StructuralError(f"trace point {limit} outside the domain")
    vanishing = trace.gaps[-1] <= zero_tol
    g = fmap.gap(limit)
    if not vanishing:
        return ConditionReport("co6", True, {"limit": limit},
                               notes=["vacuous: gaps do not tend to 0 along the trace"])
    if g <= zero_tol:
        return ConditionReport("co6", True, {"limit": limit, "limit_gap": g})
    return ConditionReport("co6", False, {"limit": limit}, falsifier=limit)


# -- implication scanning -------------------------------------------------------

@dataclass
class ScanReport:
    checked: int = 0
    trials: int = 0
    violations: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"checked": self.checked, "trials": self.trials, "violations": self.violations}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _spec(item):
    cid, params = item
    if isinstance(params, dict):
        params = ConditionParams(**params)
    return normalize_id(cid), params


def implication_scan(generator: Callable[[int], MultiMap], trials: int,
                     pairs: Iterable[tuple], seed: int = 0, offset: int = 0) -> dict[str, ScanReport]:
    """Check hypothesis => conclusion on ``trials`` sampled instances.

    ``generator(trial_seed)`` must return a MultiMap.  ``pairs`` holds
    ``((hyp_id, hyp_params), (concl_id, concl_params))`` entries; the result
    is keyed ``"h=>c"``.  Trials are numbered from ``offset`` so that a scan
    split into chunks draws the same per-trial seeds as an unsplit one.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    pairs = [(_spec(h), _spec(c)) for h, c in pairs]
    reports = {f"{h[0]}=>{c[0]}": ScanReport(trials=trials) for h, c in pairs}
    for trial in range(offset, offset + trials):
        trial_seed = trial_seed_for(seed, trial)
        fmap = generator(trial_seed)
        for (hid, hp), (cid, cp) in pairs:
            rep = reports[f"{hid}=>{cid}"]
            hyp = check_condition(fmap, hid, hp)
            if not hyp.holds:
                continue
            rep.checked += 1
            concl = check_condition(fmap, cid, cp)
            if not concl.holds:
                rep.violations.append({
                    "trial": trial,
                    "seed": trial_seed,
                    "instance": {"space": fmap.space.to_dict(), "map": fmap.to_dict()},
                    "hypothesis_report": hyp.to_dict(),
                    "conclusion_report": concl.to_dict(),
                })
    return reports


def counterexample_search(generator: Callable[[int], MultiMap], holds: tuple, fails: tuple,
                          budget: int, seed: int = 0) -> MultiMap | None:
    """First sampled instance satisfying ``holds`` and violating ``fails``."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    hid, hp = _spec(holds)
    fid, fp = _spec(fails)
    for trial in range(budget):
        fmap = generator(trial_seed_for(seed, trial))
        if check_condition(fmap, hid, hp).holds and not check_condition(fmap, fid, fp).holds:
            # re-verify from scratch on a rebuilt instance
            again = MultiMap(fmap.space, fmap.domain, dict(fmap.values))
            assert check_condition(again, hid, hp).holds
            assert not check_condition(again, fid, fp).holds
            return fmap
    return None


def trial_seed_for(seed: int, trial: int) -> int:
    """Counter-based seed split: a stable 63-bit seed per (file seed, trial)."""
    return int(np.random.SeedSequence([seed, trial]).generate_state(2, np.uint64)[0] >> np.uint64(1))

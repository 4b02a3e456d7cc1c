"""Bead-space moduli, asymptotic centres and the nonexpansive pipeline.

Asymptotic objects are computed on finite traces with a periodic-extension
convention: a trace is read as its longest eventually periodic tail repeated
forever.  The tail family ``A_n = {x_k : k >= n}`` then stabilises on the set
of cycle values, which carries the asymptotic radius.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .conditions import ConditionParams, ConditionReport, check_condition
from .metric import MetricSpace, StructuralError, _norm, chebyshev, point_set
from .multimap import MultiMap
from .solver import IterationTrace, iterate_co7

TRUNCATION_NOTE = ("finite-truncation convention: the trace is extended periodically "
                   "from its terminal cycle; the last tail carries the radius")


# -- bead modulus ------------------------------------------------------------

@dataclass(frozen=True)
class BeadSampler:
    """Sampling budget for :func:`bead_modulus`."""

    points_per_pair: int = 10_000
    bisect_steps: int = 40
    seed: int = 0
    reverify_factor: int = 10

    def __post_init__(self):
        if self.points_per_pair < 1 or self.bisect_steps < 1 or self.reverify_factor < 1:
            raise ValueError("degenerate sampler budget")


@dataclass
class BeadCertificate:
    r: float
    beta: float
    delta: float
    witnesses: dict = field(default_factory=dict)
    sampled_points: int = 0
    vacuous: bool = False
    failure: dict | None = None
    zero_level: float = 0.0  # deltas at or below this are numerically zero

    @property
    def failed(self) -> bool:
        """A violating pair was found and the modulus is numerically zero."""
        return self.failure is not None and self.delta <= self.zero_level

    def to_dict(self) -> dict:
        return {"r": self.r, "beta": self.beta, "delta": self.delta,
                "witnesses": {f"{x},{y}": z for (x, y), z in self.witnesses.items()},
                "sampled_points": self.sampled_points, "vacuous": self.vacuous,
                "failure": self.failure, "failed": self.failed}


def _box_samples(space: MetricSpace, x, y, rad: float, n: int, rng) -> np.ndarray:
    """Uniform samples of the bounding box of B(x, rad) ∩ B(y, rad)."""
    lo = np.maximum(x, y) - rad
    hi = np.minimum(x, y) + rad
    if (hi < lo).any():
        return np.empty((0, x.size))
    return lo + (hi - lo) * rng.random((n, x.size))


def _deterministic_candidates(space: MetricSpace, x, y, rad: float) -> np.ndarray:
    """Box corners and, in the plane, the two lens tips on the bisector."""
    lo = np.maximum(x, y) - rad
    hi = np.minimum(x, y) + rad
    if (hi < lo).any():
        return np.empty((0, x.size))
    corners = np.array(list(itertools.product(*zip(lo, hi))), dtype=float)
    pts = [corners]
    if x.size == 2:
        mid = (x + y) / 2.0
        u = y - x
        normal = np.array([-u[1], u[0]])
        normal /= np.abs(normal).max()
        for sign in (1.0, -1.0):
            a, b = 0.0, 2.0 * rad + 1.0
            for _ in range(60):
                m = (a + b) / 2.0
                w = mid + sign * m * normal
                if max(space.norm_distance(w, x), space.norm_distance(w, y)) <= rad:
                    a = m
                else:
                    b = m
            pts.append((mid + sign * a * normal)[None, :])
    return np.vstack(pts)


def _within(space: MetricSpace, pts: np.ndarray, c, rad: float) -> np.ndarray:
    return _norm(pts - c[None, :], space.norm, space.p) <= rad


def _far(space: MetricSpace, pts: np.ndarray, c) -> np.ndarray:
    return _norm(pts - c[None, :], space.norm, space.p)


class _EmbeddedPair:
    def __init__(self, space, i, j, r, n, rng):
        self.space = space
        self.x, self.y = space.coords[i], space.coords[j]
        self.z = (self.x + self.y) / 2.0
        rad = 2.0 * r  # the largest ball radius r + delta
        self.pool = np.vstack([_box_samples(space, self.x, self.y, rad, n, rng),
                               _deterministic_candidates(space, self.x, self.y, rad)])
        self.r = r

    def violation(self, delta: float, tol: float):
        rad = self.r + delta
        extra = _deterministic_candidates(self.space, self.x, self.y, rad)
        pts = np.vstack([self.pool, extra]) if len(extra) else self.pool
        keep = _within(self.space, pts, self.x, rad + tol) & _within(self.space, pts, self.y, rad + tol)
        inside = pts[keep]
        if not len(inside):
            return None, 0
        far = _far(self.space, inside, self.z)
        k = int(far.argmax())
        if far[k] > self.r - delta + tol:
            return inside[k], len(inside)
        return None, len(inside)


def bead_modulus(space: MetricSpace, r: float, beta: float,
                 sampler: BeadSampler = BeadSampler()) -> BeadCertificate:
    """Largest sampled delta with B(x,r+δ) ∩ B(y,r+δ) ⊂ B(z,r−δ) for d(x,y) >= beta.

    Embedded spaces use the coordinate midpoint as z and sample the ball
    intersection (box rejection sampling plus box corners and bisector lens
    tips).  Matrix spaces scan every point both as sample and as centre.
    """
    if r <= 0 or beta <= 0:
        raise ValueError("r and beta must be positive")
    tol = space.tolerance
    rows = space.rows
    # pairs whose intersection can be nonempty for some delta <= r
    pairs = [(i, j) for i in range(space.size) for j in range(i + 1, space.size)
             if beta - tol <= rows[i][j] <= 4 * r + tol]
    if not pairs:
        return BeadCertificate(r, beta, r, vacuous=True)

    if space.kind == "embedded":
        rng = np.random.default_rng(sampler.seed)
        checkers = {p: _EmbeddedPair(space, *p, r, sampler.points_per_pair, rng) for p in pairs}

        def violation(pair, delta):
            return checkers[pair].violation(delta, tol)

        def witness(pair):
            return checkers[pair].z.tolist()
    else:
        d = space.dist

        def covering(pair, delta):
            i, j = pair
            inside = np.nonzero(np.maximum(d[i], d[j]) <= r + delta + tol)[0]
            if not len(inside):
                return None, None, 0
            cover = d[:, inside].max(axis=1)
            z = int(cover.argmin())
            return z, inside, len(inside)

        def violation(pair, delta):
            z, inside, n = covering(pair, delta)
            if z is None or d[z, inside].max() <= r - delta + tol:
                return None, n
            return int(inside[d[z, inside].argmax()]), n

        def witness(pair):
            return covering(pair, 0.0)[0]

    def first_violation(delta):
        count = 0
        for pair in pairs:
            w, n = violation(pair, delta)
            count += n
            if w is not None:
                return pair, w, count
        return None, None, count

    sampled = 0
    bad, w, n = first_violation(r)
    sampled += n
    if bad is None:
        lo, hi, fail = r, r, None
    else:
        lo, hi, fail = 0.0, r, (bad, w)
        bad0, w0, n = first_violation(0.0)
        sampled += n
        if bad0 is not None:
            hi, fail = 0.0, (bad0, w0)
        else:
            for _ in range(sampler.bisect_steps):
                mid = (lo + hi) / 2.0
                bad, w, n = first_violation(mid)
                sampled += n
                if bad is None:
                    lo = mid
                else:
                    hi, fail = mid, (bad, w)

    zero = 10 * max(tol, r * 2.0 ** -sampler.bisect_steps)
    cert = BeadCertificate(r, beta, lo, sampled_points=sampled, zero_level=zero)
    for pair in pairs:
        cert.witnesses[pair] = witness(pair)
    if fail is not None:
        (i, j), point = fail
        cert.failure = _failure_record(space, (i, j), point, hi, r, sampler)
    return cert


def _failure_record(space, pair, point, delta, r, sampler) -> dict:
    i, j = pair
    rec = {"pair": [i, j], "delta_tested": delta, "limit": r - delta}
    if space.kind == "embedded":
        z = (space.coords[i] + space.coords[j]) / 2.0
        rec["point"] = [float(v) for v in point]
        rec["distance"] = space.norm_distance(point, z)
        # re-verify with a larger sample budget
        rng = np.random.default_rng(sampler.seed + 1)
        big = _EmbeddedPair(space, i, j, r, sampler.points_per_pair * sampler.reverify_factor, rng)
        rec["reverified"] = big.violation(delta, space.tolerance)[0] is not None
    else:
        rec["point"] = int(point)
        rec["reverified"] = True  # matrix scan is exhaustive
    return rec


# -- centres -----------------------------------------------------------------

@dataclass
class CenterResult:
    radius: float
    centers: tuple[int, ...]
    tail_radii: list[float]
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"radius": self.radius, "centers": list(self.centers),
                "tail_radii": list(self.tail_radii), "notes": list(self.notes)}


def family_center(space: MetricSpace, family: Sequence[Iterable[int]],
                  Z: Iterable[int] | None = None) -> CenterResult:
    """Radius and central points of a family shrinking under inclusion."""
    if not family:
        raise StructuralError("family is empty")
    members = []
    for n, A in enumerate(family):
        try:
            members.append(point_set(space, A))
        except StructuralError as exc:
            raise StructuralError(f"family.{n}: {exc}") from None
    pool = point_set(space, space.points if Z is None else Z)
    d = space.dist
    radii = [chebyshev(space, A, pool).radius for A in members]
    radius = min(radii)
    # covering value of x: inf over members of max_{a in A} d(x, a)
    cover = np.min([d[np.ix_(pool, A)].max(axis=1) for A in members], axis=0)
    centers = tuple(z for z, c in zip(pool, cover) if c <= radius + space.tolerance)
    notes = []
    if radius == 0.0:
        notes.append("zero radius reported for a family with a singleton member")
    return CenterResult(radius, centers, radii, notes)


def terminal_cycle(seq: Sequence[int]) -> tuple[int, int]:
    """(start, period) of the terminal cycle of a finite sequence.

    The period is the smallest p whose p-periodic suffix covers at least half
    the sequence and at least two full periods; otherwise the last element
    alone (p = 1) is the cycle.
    """
    L = len(seq)
    for p in range(1, L // 2 + 1):
        n = p
        while n < L and seq[L - 1 - n] == seq[L - 1 - n + p]:
            n += 1
        if n >= 2 * p and 2 * n >= L:
            return L - n, p
    return L - 1, 1


def asymptotic_center(space: MetricSpace, seq: Sequence[int],
                      Z: Iterable[int] | None = None) -> CenterResult:
    """Centre of the tail family of ``seq`` under the periodic convention."""
    seq = [int(s) for s in seq]
    if not seq:
        raise StructuralError("sequence is empty")
    start, _ = terminal_cycle(seq)
    family = [set(seq[n:]) for n in range(start + 1)]
    res = family_center(space, family, Z)
    res.notes.append(TRUNCATION_NOTE)
    return res


@dataclass
class RegularityReport:
    regular: bool
    radius: float
    min_radius: float
    min_subsequence: list[int]
    checked: int
    exhaustive: bool

    def to_dict(self) -> dict:
        return {"regular": self.regular, "radius": self.radius, "min_radius": self.min_radius,
                "min_subsequence": list(self.min_subsequence), "checked": self.checked,
                "exhaustive": self.exhaustive}


def _phase_subsets(period: int, budget: int, seed: int):
    if period <= 12:
        for size in range(1, period + 1):
            yield from itertools.combinations(range(period), size)
        return
    rng = np.random.default_rng(seed)
    yield tuple(range(period))
    for _ in range(budget):
        mask = rng.random(period) < 0.5
        if mask.any():
            yield tuple(int(i) for i in np.nonzero(mask)[0])


def regularity_check(space: MetricSpace, seq: Sequence[int], budget: int = 4096,
                     Z: Iterable[int] | None = None, seed: int = 0) -> RegularityReport:
    """Compare the asymptotic radius of ``seq`` with those of its subsequences.

    Under the periodic convention a subsequence is determined, asymptotically,
    by the set of cycle phases it visits infinitely often, so subsequences are
    enumerated as phase subsets: exhaustively for cycles of length <= 12 and
    by ``budget`` random draws beyond.
    """
    seq = [int(s) for s in seq]
    if len(seq) < 2:
        raise ValueError("regularity needs a sequence of length >= 2")
    pool = space.points if Z is None else tuple(Z)
    full = asymptotic_center(space, seq, pool).radius
    start, p = terminal_cycle(seq)
    best, best_idx, checked = None, None, 0
    for phases in _phase_subsets(p, budget, seed):
        checked += 1
        idx = [i for i in range(start, len(seq)) if (i - start) % p in phases]
        rad = chebyshev(space, [seq[i] for i in idx], pool).radius
        if best is None or rad < best - space.tolerance or (abs(rad - best) <= space.tolerance
                                                             and idx < best_idx):
            best, best_idx = rad, idx
    regular = abs(best - full) <= space.tolerance
    if regular:
        best_idx = list(range(len(seq)))
    return RegularityReport(regular, full, best, best_idx, checked, p <= 12)


def regular_subsequence(space: MetricSpace, seq: Sequence[int],
                        Z: Iterable[int] | None = None) -> list[int]:
    """Indices of a subsequence of least asymptotic radius (the whole sequence if regular)."""
    if len(seq) == 1:
        return [0]
    return regularity_check(space, seq, Z=Z).min_subsequence


# -- nonexpansive pipeline ---------------------------------------------------

@dataclass
class NonexpansiveVerdict:
    found: bool
    point: int | None
    stage_failed: str | None
    trace: IterationTrace
    subsequence: list[int] = field(default_factory=list)
    center: CenterResult | None = None
    reports: dict = field(default_factory=dict)
    oracle_confirmed: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        """Stages (a) to (d) all certified."""
        return self.stage_failed is None or self.stage_failed == "e"

    def to_dict(self) -> dict:
        return {"found": self.found, "fixed_point": self.point, "stage_failed": self.stage_failed,
                "subsequence": list(self.subsequence),
                "center": None if self.center is None else self.center.to_dict(),
                "reports": {k: v.to_dict() for k, v in self.reports.items()},
                "oracle_confirmed": self.oracle_confirmed, "notes": list(self.notes)}


def _co10_report(fmap: MultiMap, x: int, seq: list[int]) -> ConditionReport:
    """lim sup d(F(x), y_n) <= lim sup d(x, x_n) over the terminal cycle of ``seq``.

    y_n is a nearest value of F(x_n), so d(y_n, x_n) = gap(x_n).
    """
    rows, tol = fmap.space.rows, fmap.space.tolerance
    start, _ = terminal_cycle(seq)
    tail = seq[start:]
    ys = [min(fmap.values[xn], key=lambda y: (rows[xn][y], y)) for xn in tail]
    lhs = max(fmap.dist_to_value(y, x) for y in ys)
    rhs = max(rows[x][xn] for xn in tail)
    rep = ConditionReport("co10", lhs <= rhs + tol, notes=[f"lhs={lhs!r} rhs={rhs!r}"])
    if not rep.holds:
        rep.falsifier = [x, lhs, rhs]
    return rep


def nonexpansive_solve(fmap: MultiMap, x0: int, alpha: float = 0.5,
                       max_iter: int | None = None) -> NonexpansiveVerdict:
    """Fixed point through the centre of a regular gap-vanishing sequence.

    Stages: (a) a (7)-driven iteration whose gaps vanish, (b) a regular
    subsequence, (c) its asymptotic centre x with the domain as pool,
    (d) the centre conditions (12), (11), (10), (e) x in F(x) by oracle.
    """
    tol = fmap.space.tolerance
    trace = iterate_co7(fmap, x0, alpha, max_iter)
    verdict = NonexpansiveVerdict(False, None, None, trace)
    verdict.reports["co7"] = check_condition(fmap, 7, ConditionParams(alpha=alpha))
    if fmap.is_fixed(x0):
        verdict.found, verdict.point, verdict.oracle_confirmed = True, x0, True
        verdict.notes.append("x0 is fixed")
        return verdict
    if min(trace.gaps) > tol or trace.gaps[-1] > tol:
        verdict.stage_failed = "a"
        verdict.notes.append(f"no gap-vanishing sequence: least gap {min(trace.gaps)!r}")
        return verdict

    seq = trace.points
    sub = regular_subsequence(fmap.space, seq, fmap.domain)
    verdict.subsequence = sub
    sub_pts = [seq[i] for i in sub]
    if len(sub_pts) >= 2 and not regularity_check(fmap.space, sub_pts, Z=fmap.domain).regular:
        verdict.stage_failed = "b"
        return verdict

    center = asymptotic_center(fmap.space, sub_pts, fmap.domain)
    verdict.center = center
    x = center.centers[0]
    if len(center.centers) > 1:
        verdict.notes.append(f"{len(center.centers)} central points; smallest index taken")

    params = ConditionParams(center=x, sequence=sub_pts)
    verdict.reports["co12"] = check_condition(fmap, 12, params)
    verdict.reports["co11"] = check_condition(fmap, 11, params)
    verdict.reports["co10"] = _co10_report(fmap, x, sub_pts)
    if not verdict.reports["co10"].holds:
        verdict.stage_failed = "d"
        return verdict

    verdict.oracle_confirmed = fmap.is_fixed(x)
    verdict.found = verdict.oracle_confirmed
    verdict.point = x if verdict.found else None
    if not verdict.found:
        verdict.stage_failed = "e"
    return verdict

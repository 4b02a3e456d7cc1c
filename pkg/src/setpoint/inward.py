"""Inward sets, generalized inward sets and the inward fixed-point pipelines.

Generalized inwardness of t at x asks, for each beta > 0, for a point s of
the segment (x, t] and some z in X with d(z, s) <= beta d(x, s).  The z is
read existentially.  A finite schedule of beta values stands in for "each
beta > 0"; certificates that rely on it are labelled ``numerical_member``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .conditions import ConditionParams, ConditionReport, check_condition
from .descent import DescentVerdict, move_record
from .metric import MetricSpace, StructuralError, metric_segment, point_set
from .multimap import MultiMap

DEFAULT_SCHEDULE = tuple(math.ldexp(1.0, -k) for k in range(1, 21))
LAMBDA_MAX = 1e6


class ScheduleDepthError(ValueError):
    """The beta schedule does not reach the level a witness needs."""


def _schedule(schedule) -> tuple[float, ...]:
    betas = DEFAULT_SCHEDULE if schedule is None else tuple(float(b) for b in schedule)
    if not betas or any(b <= 0 for b in betas) or any(a <= b for a, b in zip(betas, betas[1:])):
        raise ValueError("beta schedule must be positive and strictly decreasing")
    return betas


# -- normed inward set -------------------------------------------------------

@dataclass
class NormedInward:
    member: bool
    lam: float | None = None
    z: int | None = None

    def __bool__(self) -> bool:
        return self.member


def inward_membership_normed(space: MetricSpace, X: Iterable[int], x: int, t) -> NormedInward:
    """Is t = x + lam (z - x) for some z in X and lam >= 1?

    ``t`` is a universe index or a coordinate vector.  For each z the only
    candidate lam is the projection coefficient, so the search is exact up
    to the tolerance; lam is capped at ``LAMBDA_MAX``.
    """
    if space.kind != "embedded":
        raise StructuralError("the inward set needs an embedded (normed) space")
    X = point_set(space, X)
    if x not in X:
        raise StructuralError(f"x={x} is not in X")
    tol = space.tolerance
    tc = space.coords[t] if np.ndim(t) == 0 else np.asarray(t, float)
    xc = space.coords[x]
    w = tc - xc
    if space.norm_distance(tc, xc) <= tol:
        return NormedInward(True, 1.0, x)
    best = None
    for z in X:
        u = space.coords[z] - xc
        uu = float(u @ u)
        if uu == 0.0:
            continue
        lam = float(w @ u) / uu
        if lam < 1.0 - tol or lam > LAMBDA_MAX:
            continue
        lam = max(lam, 1.0)
        if space.norm_distance(xc + lam * u, tc) <= tol and (best is None or lam < best[0]):
            best = (lam, z)
    if best is None:
        return NormedInward(False)
    return NormedInward(True, best[0], best[1])


# -- generalized inward set --------------------------------------------------

@dataclass
class InwardCertificate:
    x: int
    t: int
    betas: tuple[float, ...]
    per_beta: dict = field(default_factory=dict)
    verdict: str = "member"
    beta_fail: float | None = None

    @property
    def is_member(self) -> bool:
        return self.verdict in ("member", "numerical_member")

    def to_dict(self) -> dict:
        return {"x": self.x, "t": self.t, "betas": list(self.betas), "verdict": self.verdict,
                "beta_fail": self.beta_fail,
                "per_beta": {repr(b): {"s": e["s"], "z": e["z"], "d_zs": e["d_zs"], "d_xs": e["d_xs"]}
                             for b, e in self.per_beta.items()}}


def _segment_samples(space: MetricSpace, x: int, t: int):
    """Points of (x, t]: universe members of the metric segment, and for
    embedded spaces the points x + 2^-j (t - x) accumulating at x.

    Yields (label, coords or None, distances to every universe point).
    """
    tol = space.tolerance
    for s in metric_segment(space, x, t):
        if s != x:
            yield s, space.dist[s]
    if space.kind == "embedded":
        xc, tc = space.coords[x], space.coords[t]
        dxt = space.rows[x][t]
        for j in range(1, 41):
            f = math.ldexp(1.0, -j)
            if f * dxt < 1e3 * tol:
                break
            sc = xc + f * (tc - xc)
            yield [float(v) for v in sc], space.distances_to(sc)


def generalized_inward_membership(space: MetricSpace, X: Iterable[int], x: int, t: int,
                                  schedule: Sequence[float] | None = None) -> InwardCertificate:
    """Certificate for t in the generalized inward set of X at x."""
    X = point_set(space, X)
    if x not in X:
        raise StructuralError(f"x={x} is not in X")
    betas = _schedule(schedule)
    tol = space.tolerance
    cert = InwardCertificate(x, t, betas)
    if t == x:
        for b in betas:
            cert.per_beta[b] = {"s": t, "z": t, "d_zs": 0.0, "d_xs": 0.0}
        return cert
    Xa = np.asarray(X)
    cands = []
    for label, dist in _segment_samples(space, x, t):
        dx = float(dist[x])
        dz = dist[Xa]
        k = int(dz.argmin())
        dzs = float(dz[k])
        ratio = dzs / dx if dx > 0 else math.inf
        # prefer the least ratio, then the farthest s, then the smallest index
        key = (ratio, -dx, 0 if isinstance(label, int) else 1, label if isinstance(label, int) else 0)
        cands.append((key, label, int(Xa[k]), dzs, dx))
    cands.sort(key=lambda c: c[0])
    zero = bool(cands) and cands[0][3] <= tol
    for b in betas:
        hit = next((c for c in cands if c[3] <= b * c[4] + tol), None)
        if hit is None:
            cert.verdict, cert.beta_fail = "non_member", b
            return cert
        cert.per_beta[b] = {"s": hit[1], "z": hit[2], "d_zs": hit[3], "d_xs": hit[4]}
    cert.verdict = "member" if zero else "numerical_member"
    return cert


@dataclass
class Lemma35Witness:
    z: int
    beta: float
    s: object
    holds: bool
    lhs: float
    rhs: float
    holds_set: bool | None = None
    rhs_set: float | None = None

    def to_dict(self) -> dict:
        return {"z": self.z, "beta": self.beta, "s": self.s, "holds": self.holds,
                "lhs": self.lhs, "rhs": self.rhs, "holds_set": self.holds_set,
                "rhs_set": self.rhs_set}


def lemma35_witness(space: MetricSpace, X: Iterable[int], x: int, t: int, epsilon: float,
                    cert: InwardCertificate, C: Iterable[int] | None = None) -> Lemma35Witness:
    """z in X with (1 - eps) d(x, z) <= d(x, t) - d(z, t), read off the certificate.

    The largest scheduled beta <= eps / (2 + eps) is used.  With ``C`` (a
    set whose nearest point to x is t) the set form d(x, C) - d(z, C) is
    verified as well.
    """
    if not cert.is_member:
        raise ValueError(f"certificate verdict is {cert.verdict}")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    level = epsilon / (2 + epsilon)
    usable = [b for b in cert.betas if b <= level and b in cert.per_beta]
    if not usable:
        raise ScheduleDepthError(f"no scheduled beta <= {level!r}")
    b = max(usable)
    entry = cert.per_beta[b]
    z = entry["z"]
    rows, tol = space.rows, space.tolerance
    lhs = (1 - epsilon) * rows[x][z]
    rhs = rows[x][t] - rows[z][t]
    wit = Lemma35Witness(z, b, entry["s"], lhs <= rhs + tol, lhs, rhs)
    if C is not None:
        C = point_set(space, C)
        rhs_c = min(rows[x][c] for c in C) - min(rows[z][c] for c in C)
        wit.rhs_set, wit.holds_set = rhs_c, lhs <= rhs_c + tol
    return wit


# -- pipelines ---------------------------------------------------------------

def _nearest_value(fmap: MultiMap, x: int) -> int:
    row = fmap.space.rows[x]
    return min(fmap.values[x], key=lambda y: (row[y], y))


def inward_contraction_solve(fmap: MultiMap, x0: int, alpha: float, epsilon: float = 0.1,
                             mode: str = "generalized", schedule: Sequence[float] | None = None,
                             max_iter: int | None = None) -> DescentVerdict:
    """Gap descent driven by inward nearest points.

    Each step takes the nearest t in F(x), certifies it inward, extracts a
    witness z (through lemma35_witness, or the point on the linear segment in the
    normed mode), checks the resulting (15) step and moves downhill in the gap.
    """
    if mode not in ("generalized", "normed_inward"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "normed_inward":
        if fmap.space.kind != "embedded":
            raise StructuralError("normed_inward mode needs an embedded space")
        epsilon = 0.0
    if not 0 <= alpha < 1 or alpha + epsilon >= 1:
        raise ValueError("needs 0 <= alpha and alpha + epsilon < 1")
    if not fmap.in_domain(x0):
        raise StructuralError(f"x0={x0} is outside the domain")
    space, X = fmap.space, fmap.domain
    rows, gaps, tol = space.rows, fmap.gaps, space.tolerance
    c = 1 - alpha - epsilon
    if max_iter is None:
        max_iter = len(X) + 1
    verdict = DescentVerdict(False, "max_iter", None, x0)
    verdict.reports["co2"] = check_condition(fmap, 2, ConditionParams(alpha=alpha))
    x = x0
    for step in range(max_iter + 1):
        if fmap.is_fixed(x):
            verdict.success, verdict.status, verdict.point = True, "fixed", x
            return verdict
        if step == max_iter:
            break
        t = _nearest_value(fmap, x)
        if mode == "generalized":
            cert = generalized_inward_membership(space, X, x, t, schedule)
            if not cert.is_member:
                return _stage_failure(verdict, "inward", x, f"{t} is not inward at {x} (beta {cert.beta_fail})")
            try:
                wit = lemma35_witness(space, X, x, t, epsilon, cert, fmap.values[x])
            except ScheduleDepthError as exc:
                return _stage_failure(verdict, "lemma", x, str(exc))
            z, ok = wit.z, wit.holds and wit.holds_set
        else:
            nw = inward_membership_normed(space, X, x, t)
            if not nw.member:
                return _stage_failure(verdict, "inward", x, f"{t} is not in the inward set at {x}")
            z = nw.z
            ok = rows[x][z] <= rows[x][t] - rows[z][t] + tol
        if z == x or not ok:
            return _stage_failure(verdict, "lemma", x, f"witness {z} fails the segment inequality")
        if c * rows[x][z] > gaps[x] - gaps[z] + tol:
            return _stage_failure(verdict, "co15", x, f"(15) fails at {x} with z={z}")
        # the certified (15) step feeds a gap descent with delta = c * d
        adm = [w for w in X if w != x and gaps[w] < gaps[x]
               and c * rows[x][w] <= gaps[x] - gaps[w] + tol]
        if not adm:
            return _stage_failure(verdict, "co15", x, f"no strict gap decrease from {x}")
        w = min(adm, key=lambda w: (gaps[w], w))
        move = move_record(step, x, w, gaps[x], gaps[w])
        move.update(value=t, witness=z)
        verdict.moves.append(move)
        x = w
    return verdict


def _stage_failure(verdict: DescentVerdict, stage: str, x: int, note: str) -> DescentVerdict:
    verdict.status, verdict.violation_at = f"{stage}_failed", x
    verdict.notes.append(note)
    return verdict


def values_inward(fmap: MultiMap, schedule: Sequence[float] | None = None) -> ConditionReport:
    """Every value point of F(x) lies in the generalized inward set at x."""
    rep = ConditionReport("inward", True)
    for x in fmap.domain:
        for t in fmap.values[x]:
            cert = generalized_inward_membership(fmap.space, fmap.domain, x, t, schedule)
            if not cert.is_member:
                rep.holds, rep.falsifier = False, [x, t]
                return rep
            rep.witnesses[(x, t)] = cert.verdict
    return rep


@dataclass
class MinGapVerdict:
    found: bool
    point: int | None
    min_gap: float
    minimizer: int
    co21: ConditionReport
    contradiction: dict | None = None

    def to_dict(self) -> dict:
        return {"found": self.found, "fixed_point": self.point, "min_gap": self.min_gap,
                "minimizer": self.minimizer, "co21": self.co21.to_dict(),
                "contradiction": self.contradiction}


def compact_min_gap(fmap: MultiMap) -> MinGapVerdict:
    """Minimise the gap by full scan and relate the result to (21)."""
    gaps, tol = fmap.gaps, fmap.space.tolerance
    x = min(fmap.domain, key=lambda p: (gaps[p], p))
    co21 = check_condition(fmap, 21)
    found = gaps[x] <= tol
    verdict = MinGapVerdict(found, x if found else None, gaps[x], x, co21)
    if not found and co21.holds:
        # a minimiser with positive gap would need a strictly smaller gap
        verdict.contradiction = {"minimizer": x, "z": co21.witnesses.get(x)}
    return verdict

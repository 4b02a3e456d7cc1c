"""Finite metric spaces and the set geometry built on them.

Points are integer indices into a :class:`MetricSpace`.  A point set is any
nonempty iterable of indices; it is normalised to a sorted tuple without
duplicates.  Every "equality" between reals is a comparison within the
space-level tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

DEFAULT_TOLERANCE = 1e-9
NORMS = ("l1", "l2", "linf", "lp")


class StructuralError(ValueError):
    """Malformed input: empty set, index out of range, non-square matrix."""


class MetricViolation(NamedTuple):
    axiom: str
    indices: tuple[int, ...]
    excess: float


def validate_metric(matrix, tolerance: float = DEFAULT_TOLERANCE) -> list[MetricViolation]:
    """List every violated metric axiom of a distance matrix.

    Triangle violations are reported as ``(i, j, k)`` meaning
    ``d(i, j) > d(i, k) + d(k, j) + tolerance``.  An empty list means the
    matrix is a metric.
    """
    d = np.asarray(matrix, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise StructuralError(f"distance matrix must be square, got shape {d.shape}")
    n = d.shape[0]
    out: list[MetricViolation] = []
    for i in range(n):
        if abs(d[i, i]) > tolerance:
            out.append(MetricViolation("zero_diagonal", (i,), float(abs(d[i, i]))))
    for i in range(n):
        for j in range(i + 1, n):
            if abs(d[i, j] - d[j, i]) > tolerance:
                out.append(MetricViolation("symmetry", (i, j), float(abs(d[i, j] - d[j, i]))))
            if min(d[i, j], d[j, i]) <= 0:
                out.append(MetricViolation("positivity", (i, j), float(min(d[i, j], d[j, i]))))
    if n:
        # excess[i, j, k] = d(i,j) - d(i,k) - d(k,j)
        excess = d[:, :, None] - d[:, None, :] - d.T[None, :, :]
        for i, j, k in zip(*np.nonzero(excess > tolerance)):
            out.append(MetricViolation("triangle", (int(i), int(j), int(k)), float(excess[i, j, k])))
    return out


def _norm(diff: np.ndarray, norm: str, p: float) -> np.ndarray:
    if norm == "l1":
        return np.abs(diff).sum(axis=-1)
    if norm == "l2":
        return np.sqrt((diff * diff).sum(axis=-1))
    if norm == "linf":
        return np.abs(diff).max(axis=-1)
    return (np.abs(diff) ** p).sum(axis=-1) ** (1.0 / p)


@dataclass(frozen=True, eq=False)
class MetricSpace:
    """A finite point universe with a metric.

    Build with :meth:`from_matrix` or :meth:`from_points`.  Embedded spaces
    keep their coordinates so that off-grid points (segment samples, ball
    intersections) can be measured with the same norm.
    """

    kind: str
    dist: np.ndarray
    coords: np.ndarray | None = None
    norm: str | None = None
    p: float = 2.0
    tolerance: float = DEFAULT_TOLERANCE
    rows: list[list[float]] = field(init=False, repr=False)

    def __post_init__(self):
        self.dist.setflags(write=False)
        if self.coords is not None:
            self.coords.setflags(write=False)
        object.__setattr__(self, "rows", self.dist.tolist())

    @classmethod
    def from_matrix(cls, matrix, tolerance: float = DEFAULT_TOLERANCE) -> "MetricSpace":
        d = np.array(matrix, dtype=float)
        bad = validate_metric(d, tolerance)
        if bad:
            raise StructuralError(f"not a metric: {bad[0].axiom} at {bad[0].indices}")
        if d.shape[0] == 0:
            raise StructuralError("space needs at least one point")
        return cls("matrix", d, tolerance=tolerance)

    @classmethod
    def from_points(cls, points, norm: str = "l2", p: float = 2.0,
                    tolerance: float = DEFAULT_TOLERANCE) -> "MetricSpace":
        pts = np.array(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise StructuralError("points must be a nonempty list of coordinate vectors")
        if norm not in NORMS:
            raise StructuralError(f"unknown norm {norm!r}")
        if norm == "lp" and p < 1:
            raise StructuralError("lp norm needs p >= 1")
        d = _norm(pts[:, None, :] - pts[None, :, :], norm, p)
        off = d + np.eye(len(pts))
        if (off <= 0).any():
            i, j = np.argwhere(off <= 0)[0]
            raise StructuralError(f"points {i} and {j} coincide")
        return cls("embedded", d, coords=pts, norm=norm, p=p, tolerance=tolerance)

    @property
    def size(self) -> int:
        return self.dist.shape[0]

    @property
    def points(self) -> tuple[int, ...]:
        return tuple(range(self.size))

    def d(self, i: int, j: int) -> float:
        return self.rows[i][j]

    def norm_distance(self, u, v) -> float:
        """Distance between arbitrary coordinate vectors (embedded spaces only)."""
        if self.kind != "embedded":
            raise StructuralError("coordinate distances need an embedded space")
        return float(_norm(np.asarray(u, float) - np.asarray(v, float), self.norm, self.p))

    def distances_to(self, u) -> np.ndarray:
        """Distances from a coordinate vector to every point of the space."""
        if self.kind != "embedded":
            raise StructuralError("coordinate distances need an embedded space")
        return _norm(self.coords - np.asarray(u, float)[None, :], self.norm, self.p)

    def scaled(self, c: float) -> "MetricSpace":
        if self.kind == "embedded":
            return MetricSpace("embedded", self.dist * c, coords=self.coords * c,
                               norm=self.norm, p=self.p, tolerance=self.tolerance)
        return MetricSpace("matrix", self.dist * c, tolerance=self.tolerance)

    def to_dict(self) -> dict:
        if self.kind == "embedded":
            out = {"kind": "embedded", "norm": self.norm, "points": self.coords.tolist()}
            if self.norm == "lp":
                out["p"] = self.p
            return out
        return {"kind": "matrix", "d": self.dist.tolist()}


def point_set(space: MetricSpace, indices: Iterable[int]) -> tuple[int, ...]:
    """Normalise ``indices`` to a sorted duplicate-free tuple, checking range."""
    out = tuple(sorted(set(int(i) for i in indices)))
    if not out:
        raise StructuralError("point set is empty")
    if out[0] < 0 or out[-1] >= space.size:
        raise StructuralError(f"point index out of range in {out}")
    return out


def point_set_dist(space: MetricSpace, i: int, A: Iterable[int]) -> float:
    row = space.rows[i]
    A = tuple(A)
    if not A:
        raise StructuralError("distance to an empty set")
    return min(row[a] for a in A)


def hausdorff(space: MetricSpace, A: Sequence[int], B: Sequence[int]) -> float:
    """max{sup_{a in A} d(a, B), sup_{b in B} d(A, b)}."""
    if not A or not B:
        raise StructuralError("Hausdorff distance of an empty set")
    rows = space.rows
    left = max(min(rows[a][b] for b in B) for a in A)
    right = max(min(rows[a][b] for a in A) for b in B)
    return left if left > right else right


def nearest_points(space: MetricSpace, i: int, A: Iterable[int]) -> tuple[int, ...]:
    A = point_set(space, A)
    best = point_set_dist(space, i, A)
    row = space.rows[i]
    return tuple(a for a in A if row[a] <= best + space.tolerance)


def metric_segment(space: MetricSpace, i: int, j: int, tolerance: float | None = None) -> tuple[int, ...]:
    """All s with d(i, s) + d(s, j) <= d(i, j) + tolerance."""
    tol = space.tolerance if tolerance is None else tolerance
    d = space.dist
    mask = d[i] + d[:, j] <= d[i, j] + tol
    return tuple(int(s) for s in np.nonzero(mask)[0])


class Chebyshev(NamedTuple):
    radius: float
    centers: tuple[int, ...]


def chebyshev(space: MetricSpace, A: Iterable[int], Z: Iterable[int] | None = None) -> Chebyshev:
    """Smallest covering radius of ``A`` by a ball centred in the pool ``Z``."""
    A = point_set(space, A)
    Z = point_set(space, space.points if Z is None else Z)
    cover = space.dist[np.ix_(Z, A)].max(axis=1)
    r = float(cover.min())
    centers = tuple(z for z, c in zip(Z, cover) if c <= r + space.tolerance)
    return Chebyshev(r, centers)


def line_space(values: Sequence[float], tolerance: float = DEFAULT_TOLERANCE) -> MetricSpace:
    """Points on the real line (embedded, absolute-value metric)."""
    return MetricSpace.from_points([[float(v)] for v in values], "l2", tolerance=tolerance)


def dyadic_values(depth: int = 20, extend: bool = False) -> list[float]:
    """0 followed by 2^-k for k = 0..depth (and one level deeper if ``extend``)."""
    last = depth + 1 if extend else depth
    return [0.0] + [math.ldexp(1.0, -k) for k in range(last + 1)]


def dyadic_space(depth: int = 20, extend: bool = False,
                 tolerance: float = DEFAULT_TOLERANCE) -> MetricSpace:
    """The DYAD space: index 0 is 0, index k+1 is 2^-k."""
    return line_space(dyadic_values(depth, extend), tolerance)

"""Instance generators: random spaces and maps, exhaustive enumeration, and
the half-grid family of inward contractions."""
from __future__ import annotations

import itertools
from typing import Iterator, Sequence

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .metric import MetricSpace, line_space
from .multimap import MultiMap, shrink_toward_map

NORM_CHOICES = ("l1", "l2", "linf", "lp")
VALUE_MODES = ("uniform", "clustered", "anchored")


# -- random spaces -------------------------------------------------------------

def random_embedded_space(rng: np.random.Generator, n: int, norm: str | None = None,
                          grid: int = 6) -> MetricSpace:
    """n distinct integer points of [0, grid)^2 under a random norm."""
    norm = norm or str(rng.choice(NORM_CHOICES))
    cells = rng.choice(grid * grid, size=n, replace=False)
    pts = np.stack([cells // grid, cells % grid], axis=1).astype(float)
    return MetricSpace.from_points(pts, norm, p=float(rng.choice([1.5, 3.0])))


def random_matrix_space(rng: np.random.Generator, n: int) -> MetricSpace:
    """Shortest-path closure of a random symmetric weight matrix (integer weights)."""
    w = rng.integers(1, 6, size=(n, n)).astype(float)
    w = np.triu(w, 1)
    w = w + w.T
    return MetricSpace.from_matrix(shortest_path(w, method="FW", directed=False))


def random_space(rng: np.random.Generator, n: int) -> MetricSpace:
    if rng.random() < 0.5:
        return random_embedded_space(rng, n)
    return random_matrix_space(rng, n)


# -- random maps -------------------------------------------------------------

def random_values(rng: np.random.Generator, space: MetricSpace, mode: str,
                  max_card: int = 3) -> dict[int, tuple[int, ...]]:
    """A random total self map.

    ``uniform`` draws each value set at random; ``clustered`` draws values
    from a small random pool; ``anchored`` fixes an anchor and sends every
    other point to points closer to the anchor.
    """
    n = space.size
    pts = np.arange(n)

    def draw(pool):
        k = int(rng.integers(1, min(max_card, len(pool)) + 1))
        return tuple(sorted(int(v) for v in rng.choice(pool, size=k, replace=False)))

    if mode == "uniform":
        return {x: draw(pts) for x in range(n)}
    if mode == "clustered":
        pool = rng.choice(pts, size=int(rng.integers(1, min(3, n) + 1)), replace=False)
        return {x: draw(pool) for x in range(n)}
    if mode == "anchored":
        a = int(rng.integers(n))
        d = space.dist[a]
        lam = float(rng.uniform(0.2, 0.8))
        table = {a: (a,)}
        for x in range(n):
            if x == a:
                continue
            closer = pts[d < lam * d[x] + space.tolerance]
            table[x] = draw(closer)
        return table
    raise ValueError(f"unknown value mode {mode!r}")


def random_instance(seed: int, n_max: int = 30, n_min: int = 1) -> MultiMap:
    """A random self map on a random space of at most ``n_max`` points.

    Sizes are biased towards small spaces, where conditions hold often.
    """
    rng = np.random.default_rng(seed)
    if rng.random() < 0.8:
        n = int(rng.integers(n_min, min(8, n_max) + 1))
    else:
        n = int(rng.integers(n_min, n_max + 1))
    space = random_space(rng, n)
    mode = str(rng.choice(VALUE_MODES))
    return MultiMap.from_table(space, random_values(rng, space, mode))


def line3_instance(seed: int) -> MultiMap:
    """A random map on three collinear points with integer gaps."""
    rng = np.random.default_rng(seed)
    a, b = rng.integers(1, 4, size=2)
    space = line_space([0.0, float(a), float(a + b)])
    return MultiMap.from_table(space, random_values(rng, space, "uniform", max_card=2))


def random_grid(seed: int) -> tuple[MetricSpace, tuple[int, ...]]:
    """A random grid (line or plane, random norm) with a random subset X."""
    rng = np.random.default_rng(seed)
    if rng.random() < 0.4:
        k = int(rng.integers(3, 12))
        space = line_space(np.arange(k) / 2.0)
    else:
        k = int(rng.integers(2, 6))
        pts = [[i / 2.0, j / 2.0] for i in range(k) for j in range(k)]
        space = MetricSpace.from_points(pts, str(rng.choice(NORM_CHOICES)), p=3.0)
    size = int(rng.integers(1, space.size + 1))
    X = tuple(sorted(int(i) for i in rng.choice(space.size, size=size, replace=False)))
    return space, X


# -- exhaustive enumeration --------------------------------------------------

def value_sets(universe: Sequence[int], max_card: int = 2) -> list[tuple[int, ...]]:
    return [c for k in range(1, max_card + 1) for c in itertools.combinations(universe, k)]


def enumerate_maps(space: MetricSpace, max_card: int = 2,
                   domain: Sequence[int] | None = None) -> Iterator[MultiMap]:
    """Every map on ``domain`` whose values are subsets of size <= max_card."""
    dom = tuple(space.points if domain is None else domain)
    choices = value_sets(space.points, max_card)
    for combo in itertools.product(choices, repeat=len(dom)):
        yield MultiMap(space, dom, dict(zip(dom, combo)))


def small_spaces(max_n: int = 4) -> list[MetricSpace]:
    """A fixed catalogue of small spaces: lines, a uniform metric, planar grids."""
    out = [line_space([0.0]), line_space([0.0, 1.0]), line_space([0.0, 1.0, 2.0]),
           line_space([0.0, 1.0, 3.0]), MetricSpace.from_matrix(np.ones((3, 3)) - np.eye(3))]
    if max_n >= 4:
        out += [line_space([0.0, 1.0, 2.0, 4.0]),
                MetricSpace.from_points([[0, 0], [1, 0], [0, 1], [1, 1]], "linf"),
                MetricSpace.from_points([[0, 0], [1, 0], [0, 1], [1, 1]], "l2")]
    return [s for s in out if s.size <= max_n]


# -- inward contractions on half grids -------------------------------------

def half_grid(dim: int, cells: int) -> tuple[MetricSpace, tuple[int, ...]]:
    """Universe with spacing 1/32 on [0, cells/16]^dim and X the 1/16 sublattice."""
    ticks = np.arange(2 * cells + 1) / 32.0
    if dim == 1:
        space = line_space(ticks)
        X = tuple(range(0, len(ticks), 2))
    else:
        pts = [[a, b] for a in ticks for b in ticks]
        space = MetricSpace.from_points(pts, "l1")
        m = len(ticks)
        X = tuple(i * m + j for i in range(0, m, 2) for j in range(0, m, 2))
    return space, X


def inward_instance(seed: int) -> MultiMap:
    """A 1/2-contraction on X whose values may leave X onto the half grid.

    F(x) collects, for one or two centres c on X, the point
    c + sign(x - c) (|x - c| - step)^+ / 2 coordinatewise.
    """
    rng = np.random.default_rng(seed)
    dim = 1 if rng.random() < 0.6 else 2
    space, X = half_grid(dim, 16 if dim == 1 else 4)
    coords = space.coords
    step = float(rng.choice([1 / 16, 1 / 8]))
    centers = [coords[int(rng.choice(X))] for _ in range(int(rng.integers(1, 3)))]
    parts = [shrink_toward_map(space, c, step, X) for c in centers]
    table = {x: tuple(sorted({v for p in parts for v in p.values[x]})) for x in X}
    return MultiMap.from_table(space, table, X)

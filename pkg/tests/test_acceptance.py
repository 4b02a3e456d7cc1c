"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import itertools
import time
from pathlib import Path

import numpy as np

from setpoint import MetricSpace, MultiMap, fixed_points, hausdorff, line_space
from setpoint.bead import (BeadSampler, asymptotic_center, bead_modulus, nonexpansive_solve,
                           regular_subsequence, regularity_check)
from setpoint.cli import main as cli_main
from setpoint.conditions import ConditionParams as P
from setpoint.conditions import check_condition, counterexample_search, implication_scan
from setpoint.descent import (Potential, ScaledMetric, build_co15_step, build_co18_step,
                              caristi_descent, co18_descent_params, co18_graph_metric,
                              graph_descent_co16, pair_descent_co20)
from setpoint.generators import (enumerate_maps, inward_instance, line3_instance, random_grid,
                                 random_instance, random_space, small_spaces)
from setpoint.inward import (compact_min_gap, generalized_inward_membership,
                             inward_contraction_solve, values_inward)
from setpoint.solver import iterate_co3, solve

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def test_criterion_01_co3_decay(verdict_line):
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    grid = [(a, e) for a in (0.3, 0.5, 0.7) for e in (0.05, 0.1, 0.2) if a + e <= 0.9]
    instances, traces, bad, seed = 0, 0, [], 0
    while instances < 200:
        m = random_instance(seed, n_max=30, n_min=2)
        seed += 1
        alpha, eps = grid[rng.integers(len(grid))]
        if not check_condition(m, 3, P(alpha=alpha, epsilon=eps)).holds:
            continue
        instances += 1
        rate = alpha + eps
        for x0 in m.domain:
            tr = iterate_co3(m, x0, alpha, eps)
            traces += 1
            # steps[k] is d(x_k, x_{k+1}), the n-th step with n = k + 1
            for k, s in enumerate(tr.steps):
                if s > rate ** k * tr.gaps[0] / alpha + 1e-7:
                    bad.append((seed - 1, x0, k))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 10
    verdict_line(1, ok, f"{instances} instances, {traces} traces, {len(bad)} violations, {elapsed:.1f}s")
    assert ok, bad[:5]


def test_criterion_02_exhaustive_fixed_points(verdict_line):
    start = time.perf_counter()
    routes = [(3, "co3", lambda a: P(alpha=a, epsilon=0.1)), (5, "nearest", lambda a: P(alpha=a)),
            (7, "co7", lambda a: P(alpha=a))]
    maps = certified = 0
    bad = []
    for space in small_spaces(4):
        for m in enumerate_maps(space, 2):
            maps += 1
            oracle = set(fixed_points(m))
            for alpha in (0.5, 0.8):
                for cid, method, params in routes:
                    if not check_condition(m, cid, params(alpha)).holds:
                        continue
                    certified += 1
                    for x0 in m.domain:
                        _, verdict, _ = solve(m, x0, method, alpha, 0.1)
                        if not (verdict.found and verdict.point in oracle):
                            bad.append((m.to_dict(), cid, alpha, x0))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 60 and certified > 0
    verdict_line(2, ok, f"{maps} maps, {certified} certified hypotheses, {len(bad)} violations, {elapsed:.1f}s")
    assert ok, bad[:3]


def test_criterion_03_implication_lattice(verdict_line):
    start = time.perf_counter()
    pairs = [((2, P(alpha=0.5)), (3, P(alpha=0.5, epsilon=0.1))),
             ((4, P(alpha=0.5)), (3, P(alpha=0.5, epsilon=0.1))),
             ((5, P(alpha=0.5)), (3, P(alpha=0.5, epsilon=0.0)))]
    reports = implication_scan(lambda s: random_instance(s, n_min=2), 10_000, pairs, seed=3)
    found = counterexample_search(line3_instance, (3, P(alpha=0.5, epsilon=0.1)), (2, P(alpha=0.5)),
                                  budget=1000, seed=3)
    elapsed = time.perf_counter() - start
    violations = sum(len(r.violations) for r in reports.values())
    checked = {k: r.checked for k, r in reports.items()}
    ok = violations == 0 and found is not None and elapsed < 30 and all(checked.values())
    verdict_line(3, ok, f"checked {checked}, {violations} violations, "
                        f"counterexample {'found' if found else 'missing'}, {elapsed:.1f}s")
    assert ok


def _hausdorff_violations(space, triples, tol=1e-9):
    bad = 0
    for A, B, C in triples:
        ab, ba = hausdorff(space, A, B), hausdorff(space, B, A)
        bad += abs(ab - ba) > tol
        bad += (ab <= tol) != (set(A) == set(B))
        bad += hausdorff(space, A, C) > ab + hausdorff(space, B, C) + tol
    return bad


def test_criterion_04_hausdorff_axioms(verdict_line):
    rng = np.random.default_rng(4)
    spaces = small_spaces(4) + [random_space(rng, n) for n in (1, 2, 3, 4, 5, 5, 5)]
    exhaustive = bad = 0
    for space in spaces:
        subsets = [s for k in range(1, space.size + 1) for s in itertools.combinations(space.points, k)]
        triples = list(itertools.product(subsets, repeat=3))
        exhaustive += len(triples)
        bad += _hausdorff_violations(space, triples)
    sampled = 0
    while sampled < 10_000:
        space = random_space(rng, int(rng.integers(1, 31)))
        triples = []
        for _ in range(100):
            triples.append(tuple(
                tuple(rng.choice(space.size, size=int(rng.integers(1, space.size + 1)), replace=False))
                for _ in range(3)))
        bad += _hausdorff_violations(space, triples)
        sampled += len(triples)
    ok = bad == 0
    verdict_line(4, ok, f"{exhaustive} exhaustive and {sampled} random triples, {bad} violations")
    assert ok


def test_criterion_05_bead_geometry(verdict_line):
    start = time.perf_counter()
    pts = [[0, 0], [1, 0], [2, 0], [0.5, 0.5], [0, 1], [1, 1], [0.25, 0], [4, 0]]
    plane = MetricSpace.from_points(pts, "l2")
    sampler = BeadSampler(points_per_pair=2000)
    bad = []
    for r, beta in itertools.product((0.5, 1, 2), (0.25, 0.5, 1)):
        cert = bead_modulus(plane, r, beta, sampler)
        midpoints = all(np.allclose(w, (np.asarray(pts[i]) + pts[j]) / 2)
                        for (i, j), w in cert.witnesses.items())
        if cert.failed or cert.delta < beta ** 2 / (16 * r) - 1e-3 or not midpoints:
            bad.append((r, beta, cert.delta))
    linf = bead_modulus(MetricSpace.from_points([[0, 0], [1, 0]], "linf"), 1.0, 1.0, sampler)
    elapsed = time.perf_counter() - start
    ok = not bad and linf.failed and linf.delta < 1e-3 and elapsed < 30
    verdict_line(5, ok, f"l2 grid violations {bad}, linf delta {linf.delta:.2e} "
                        f"(failed={linf.failed}), {elapsed:.1f}s")
    assert ok


def test_criterion_06_center_suite(verdict_line):
    space = line_space([-1.0, 0.0, 1.0])
    seq = [2, 0] * 8  # +1, -1, ... (16 terms)
    res = asymptotic_center(space, seq)
    report = regularity_check(space, seq)
    sub = [seq[i] for i in regular_subsequence(space, seq)]
    sub_center = asymptotic_center(space, sub)
    ok = (res.centers == (1,) and abs(res.radius - 1.0) <= 1e-9 and not report.regular
          and len(set(sub)) == 1 and abs(sub_center.radius) <= 1e-9)
    verdict_line(6, ok, f"center {[float(space.coords[c][0]) for c in res.centers]} radius {res.radius}, "
                        f"regular={report.regular}, subsequence radius {sub_center.radius}")
    assert ok


def test_criterion_07_nonexpansive_pipeline(verdict_line):
    certified, bad, seed = 0, [], 0
    while certified < 100:
        m = random_instance(seed, n_max=12, n_min=2)
        seed += 1
        for x0 in m.domain:
            if m.is_fixed(x0):
                continue
            v = nonexpansive_solve(m, x0)
            if v.certified:
                certified += 1
                if not (v.found and m.is_fixed(v.point)):
                    bad.append((seed - 1, x0))
    cycle = MultiMap.from_table(line_space([0.0, 1.0]), {0: [1], 1: [0]})
    stage = nonexpansive_solve(cycle, 0).stage_failed
    ok = not bad and stage == "a"
    verdict_line(7, ok, f"{certified} certified runs, {len(bad)} violations, 2-cycle fails at stage {stage}")
    assert ok


def _random_potential(m, seed):
    vals = np.random.default_rng(seed).integers(0, 4, m.space.size)
    return Potential({x: float(vals[x]) for x in m.domain})


def test_criterion_08_tool_theorems(verdict_line):
    start = time.perf_counter()
    counts = {"co13": 0, "co15": 0, "co18": 0}
    bad = []
    for s_id, space in enumerate(small_spaces(4)):
        for m_id, m in enumerate(enumerate_maps(space, 2)):
            for phi, c in ((Potential.of_gap(m), 1.0), (Potential.of_gap(m), 0.5),
                           (_random_potential(m, m_id), 0.5)):
                delta = ScaledMetric(space, c)
                if check_condition(m, 13, P(phi=phi, delta=delta)).holds:
                    counts["co13"] += 1
                    if not all(caristi_descent(m, phi, delta, x0).success for x0 in m.domain):
                        bad.append(("caristi", s_id, m.to_dict()))
            alpha = 0.5
            if not check_condition(m, 2, P(alpha=alpha)).holds:
                continue
            for eps in (0.1, 0.25):
                if check_condition(m, 14, P(epsilon=eps)).holds:
                    counts["co15"] += 1
                    if not build_co15_step(m, alpha, eps).holds:
                        bad.append(("co15", s_id, m.to_dict()))
                eps1 = eps / 2
                if not check_condition(m, 17, P(epsilon=eps, epsilon1=eps1)).holds:
                    continue
                counts["co18"] += 1
                if not build_co18_step(m, alpha, eps, eps1).holds:
                    bad.append(("co18", s_id, m.to_dict()))
                    continue
                delta, k = co18_descent_params(m, alpha, eps)
                gm = co18_graph_metric(m, alpha, eps)
                for pair in ((x, t) for x in m.domain for t in m.values[x]):
                    a = graph_descent_co16(m, delta, k, pair)
                    b = pair_descent_co20(m, gm, pair)
                    if not (a.success and b.success and m.is_fixed(a.point) and m.is_fixed(b.point)):
                        bad.append(("graph", s_id, m.to_dict(), pair))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 120 and all(counts.values())
    verdict_line(8, ok, f"certified {counts}, {len(bad)} violations, {elapsed:.1f}s")
    assert ok, bad[:3]


def test_criterion_09_inwardness(verdict_line):
    outside = 0
    for seed in range(50):
        space, X = random_grid(seed)
        for x, t in itertools.product(X, X):
            outside += not generalized_inward_membership(space, X, x, t).is_member
    line = line_space([k / 4 for k in range(9)])
    edge = generalized_inward_membership(line, range(5), 4, 8)
    edge_ok = edge.verdict == "non_member" and edge.beta_fail == 0.5

    solved, bad, seed = 0, [], 0
    while solved < 100:
        m = inward_instance(seed)
        seed += 1
        if not (check_condition(m, 2, P(alpha=0.5)).holds and values_inward(m).holds):
            continue
        x0 = m.domain[seed % len(m.domain)]
        v = inward_contraction_solve(m, x0, 0.5, 0.1)
        solved += 1
        if not (v.success and m.is_fixed(v.point)):
            bad.append((seed - 1, x0, v.status))

    co21 = min_gap_bad = 0
    candidates = itertools.chain((random_instance(s, n_max=12) for s in range(300)),
                                 (inward_instance(s) for s in range(40)),
                                 enumerate_maps(line_space([0.0, 1.0, 3.0]), 2))
    for m in candidates:
        if check_condition(m, 21).holds:
            co21 += 1
            mg = compact_min_gap(m)
            min_gap_bad += not (mg.found and mg.min_gap <= m.space.tolerance and m.is_fixed(mg.point))
    ok = outside == 0 and edge_ok and not bad and min_gap_bad == 0 and co21 > 0
    verdict_line(9, ok, f"{outside} X-points outside, edge case {edge.verdict}@{edge.beta_fail}, "
                        f"{solved} inward solves with {len(bad)} violations, "
                        f"{co21} (21)-instances with {min_gap_bad} nonzero gaps")
    assert ok, bad[:3]


def test_criterion_10_determinism(verdict_line, tmp_path):
    differing = []
    names = sorted(p.name for p in PROBLEMS.glob("*.json") if p.name != "empty_value.json")
    for name in names:
        command = "scan" if name.startswith("scan") else "run"
        outs = []
        for rep in range(2):
            out = tmp_path / f"{name}.{rep}"
            assert cli_main([command, str(PROBLEMS / name), "-o", str(out)]) == 0
            outs.append((out / "report.json").read_bytes())
        if outs[0] != outs[1]:
            differing.append(name)
    ok = not differing
    verdict_line(10, ok, f"{len(names)} problem files run twice, differing: {differing}")
    assert ok

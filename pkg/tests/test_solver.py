import pytest

from setpoint import MetricSpace, MultiMap, line_space
from setpoint.conditions import ConditionParams, check_condition
from setpoint.solver import (default_max_iter, gap_decay_holds, iterate_co3, iterate_co7,
                             iterate_nearest, resolve_limit, solve, step_decay_holds)


def test_fixed_start_gives_length_one_trace(dyad):
    for trace in (iterate_co3(dyad, 0, 0.5, 0.1), iterate_nearest(dyad, 0, 0.5), iterate_co7(dyad, 0, 0.5)):
        assert trace.points == [0] and trace.status == "converged"


def test_dyad_co3_trace_is_halving(dyad):
    trace = iterate_co3(dyad, 1, 0.5, 0.1)
    assert trace.status == "converged"
    assert trace.points[:21] == list(range(1, 22)) and trace.points[-1] == 0
    assert trace.steps[:20] == [2.0 ** -(n + 1) for n in range(20)]
    verdict = resolve_limit(dyad, trace)
    assert verdict.found and verdict.point == 0 and verdict.route == "cauchy"
    assert verdict.oracle_confirmed


def test_nearest_matches_co3_on_singleton_values(dyad):
    assert iterate_nearest(dyad, 1, 0.5).points == iterate_co3(dyad, 1, 0.5, 0.1).points


def test_co7_gaps_halve(dyad):
    trace = iterate_co7(dyad, 1, 0.5)
    assert trace.gaps[:20] == [2.0 ** -(n + 1) for n in range(20)]
    assert gap_decay_holds(trace, 1e-6)


def test_line_instance_jumps_to_zero(line_instance):
    trace = iterate_co3(line_instance, 1, 0.5, 0.1)
    assert trace.points == [1, 0] and trace.status == "converged"


def test_constant_map_co7():
    m = MultiMap.from_table(line_space([0, 1, 2]), {x: [1] for x in range(3)})
    trace = iterate_co7(m, 0, 0.5)
    assert trace.gaps[1:] == [0.0]


def test_nearest_selection_failure():
    # the nearest value of 0 has a large gap, the far one a small gap
    m = MultiMap.from_table(line_space([0, 1, 3, 10]), {0: [1, 3], 1: [2], 2: [3], 3: [3]})
    assert not check_condition(m, 5, ConditionParams(alpha=0.5)).holds
    trace = iterate_nearest(m, 0, 0.5)
    assert trace.status == "selection_failed" and trace.failed_at == 0


def test_cluster_route_on_cycle_graph():
    hops = [[min(abs(i - j), 6 - abs(i - j)) for j in range(6)] for i in range(6)]
    space = MetricSpace.from_matrix(hops)
    m = MultiMap.from_table(space, {0: [3], 1: [4], 2: [4], 3: [0, 4], 4: [4], 5: [4]})
    assert check_condition(m, 7, ConditionParams(alpha=0.5)).holds
    trace = iterate_co7(m, 0, 0.5)
    assert trace.points == [0, 3, 4]
    assert trace.steps == [3.0, 1.0]
    verdict = resolve_limit(m, trace)
    assert verdict.route == "cluster" and verdict.point == 4 and verdict.oracle_confirmed


def test_two_cycle_has_no_limit(two_cycle):
    verdict = resolve_limit(two_cycle, iterate_co7(two_cycle, 0, 0.5))
    assert not verdict.found and verdict.min_gap == 1.0


def test_solve_reports_hypothesis(dyad):
    trace, verdict, hyps = solve(dyad, 1, "co3", 0.5, 0.1)
    assert verdict.point == 0 and hyps[0].condition_id == "co3"
    with pytest.raises(ValueError):
        solve(dyad, 1, "newton")


def test_trace_exports(dyad):
    trace = iterate_co3(dyad, 1, 0.5, 0.1)
    lines = trace.to_jsonl().splitlines()
    assert len(lines) == len(trace.points)
    assert trace.to_csv().splitlines()[0] == "n,x,y,gap,step"


def test_step_bound_on_dyad(dyad):
    assert step_decay_holds(iterate_co3(dyad, 1, 0.5, 0.1), 1e-6)


def test_default_max_iter():
    assert default_max_iter(0.6, 1e-9) == 10 * 41
    assert default_max_iter(1.0, 1e-9) == 100_000

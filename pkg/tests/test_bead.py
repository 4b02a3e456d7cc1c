import numpy as np
import pytest

from setpoint import MetricSpace, MultiMap, dyadic_space, line_space
from setpoint.bead import (BeadSampler, asymptotic_center, bead_modulus, family_center,
                           nonexpansive_solve, regular_subsequence, regularity_check, terminal_cycle)

SMALL = BeadSampler(points_per_pair=2000)


def plane(norm):
    return MetricSpace.from_points([[0, 0], [1, 0], [0.3, 1.7]], norm)


def test_euclidean_bead_modulus_closed_form():
    cert = bead_modulus(plane("l2"), 1.0, 1.0, SMALL)
    assert cert.delta >= 1 / 16 - 1e-9
    assert cert.delta <= 1 / 16 + 1e-6  # the lens corner is among the candidates
    assert cert.witnesses[(0, 1)] == [0.5, 0.0]
    assert not cert.failed


def test_linf_bead_failure_certificate():
    cert = bead_modulus(plane("linf"), 1.0, 1.0, SMALL)
    assert cert.delta < 1e-3 and cert.failed
    fail = cert.failure
    assert fail["pair"] == [0, 1] and fail["reverified"]
    # the violating point is a corner of the intersection box [0,1] x [-1,1]
    assert fail["distance"] >= 1.0 - 1e-9
    assert abs(abs(fail["point"][1]) - 1.0) < 1e-6


def test_bead_vacuous_regime():
    cert = bead_modulus(plane("l2"), 0.1, 5.0, SMALL)
    assert cert.vacuous and cert.delta == 0.1


def test_bead_invariant_on_recorded_pairs():
    rng = np.random.default_rng(2)
    space = MetricSpace.from_points(rng.random((5, 2)) * 2, "l2")
    r, beta = 1.0, 0.5
    cert = bead_modulus(space, r, beta, SMALL)
    samples = rng.uniform(-2, 4, size=(20000, 2))
    for (i, j), z in cert.witnesses.items():
        x, y = space.coords[i], space.coords[j]
        inside = [w for w in samples
                  if max(space.norm_distance(w, x), space.norm_distance(w, y)) <= r + cert.delta]
        assert all(space.norm_distance(w, z) <= r - cert.delta + 1e-9 for w in inside)


def test_bead_on_matrix_space():
    space = MetricSpace.from_matrix(np.ones((4, 4)) - np.eye(4))
    cert = bead_modulus(space, 1.0, 1.0)
    # every point lies in both balls and no centre is within r - delta < 1 of all
    assert cert.delta < 1e-3 and cert.failure["reverified"]


def test_degenerate_sampler():
    with pytest.raises(ValueError):
        BeadSampler(points_per_pair=0)
    with pytest.raises(ValueError):
        bead_modulus(plane("l2"), 0.0, 1.0)


def test_family_center_examples():
    sp = line_space([-1, 0, 1])
    assert family_center(sp, [[2]]).radius == 0.0 and 2 in family_center(sp, [[2]]).centers
    res = family_center(sp, [[0, 2], [0, 2]], [0, 1, 2])
    assert (res.radius, res.centers) == (1.0, (1,))
    res = family_center(sp, [[0, 1, 2], [1]])
    assert (res.radius, res.centers) == (0.0, (1,))


def test_family_radius_is_monotone():
    sp = line_space(np.arange(8.0))
    fam = [list(range(k, 8)) for k in range(8)]
    radii = [family_center(sp, fam[: n + 1]).radius for n in range(8)]
    assert all(b <= a for a, b in zip(radii, radii[1:]))


def test_asymptotic_center_examples():
    sp = line_space([-1, 0, 1])
    const = asymptotic_center(sp, [2] * 5)
    assert (const.radius, const.centers) == (0.0, (2,))
    alt = asymptotic_center(sp, [2, 0] * 8)
    assert (alt.radius, alt.centers) == (1.0, (1,))
    dy = dyadic_space(20)
    res = asymptotic_center(dy, list(range(1, 22)))
    assert res.radius == 0.0 and 21 in res.centers
    assert res.radius == min(res.tail_radii)


def test_terminal_cycle():
    assert terminal_cycle([2, 0] * 8) == (0, 2)
    assert terminal_cycle([5, 1, 2, 1, 2, 1, 2]) == (1, 2)
    assert terminal_cycle([1, 2, 3]) == (2, 1)
    assert terminal_cycle([7]) == (0, 1)


def test_regularity_examples():
    sp = line_space([-1, 0, 1])
    const = regularity_check(sp, [2] * 4)
    assert const.regular and const.radius == 0.0
    alt = regularity_check(sp, [2, 0] * 4)
    assert not alt.regular and alt.exhaustive and alt.min_radius == 0.0
    dy = dyadic_space(20)
    assert regularity_check(dy, list(range(1, 22))).regular


def test_regular_subsequence_examples():
    sp = line_space([-1, 0, 1])
    seq = [2, 0] * 8
    sub = regular_subsequence(sp, seq)
    assert {seq[i] for i in sub} == {2} and len(sub) == 8
    assert regular_subsequence(sp, [2] * 5) == list(range(5))
    assert regular_subsequence(sp, [1]) == [0]
    two = line_space([0, 1, 5])
    seq = [2, 0, 1, 0, 1, 0, 1, 0, 1]
    assert len({seq[i] for i in regular_subsequence(two, seq)}) == 1


def test_nonexpansive_examples(dyad, two_cycle):
    ident = MultiMap.from_table(line_space([0, 1, 2]), {x: [x] for x in range(3)})
    v = nonexpansive_solve(ident, 2)
    assert v.found and v.point == 2
    v = nonexpansive_solve(dyad, 1)
    assert v.found and v.point == 0 and v.oracle_confirmed
    assert v.reports["co12"].holds and v.reports["co10"].holds
    v = nonexpansive_solve(two_cycle, 0)
    assert not v.found and v.stage_failed == "a"

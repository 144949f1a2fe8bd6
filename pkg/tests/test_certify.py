import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from polyflow.certify import (
    INF,
    ConservationViolated,
    NotJumpFree,
    Path,
    boundary_weight,
    certify_nonexpansive,
    fine_path_through,
    gamma_delta,
    intersecting_triples,
    local_conservation,
    path_weight,
    sample_fine_path,
)
from polyflow.corpus import h1, h2, h3, random_potential_system, three_intervals
from polyflow.numeric import dot, sub
from polyflow.tiling import HybridSystem, adjacency, random_point


def rotated_h2(seed):
    """H2 with one drift nudged by 1/10 along the rotation of its region's direction."""
    rng = random.Random(seed)
    s = h2()
    data = s.to_json()
    k = rng.randrange(len(s))
    w = s.regions[k].poly.interior_point()
    sign = rng.choice((1, -1))
    mu = s.drifts[k]
    data["regions"][k]["drift"] = [str(mu[0] - sign * w[1] / 10), str(mu[1] + sign * w[0] / 10)]
    return HybridSystem.from_json(data)


def test_h1_h2_certified():
    for s in (h1(), h2()):
        cert = certify_nonexpansive(s)
        assert cert.nonexpansive and cert.witness is None
        assert all(r.residual == 0 for r in cert.transcript)


def test_h2_weights_all_zero():
    cert = certify_nonexpansive(h2())
    assert set(cert.weights.weights.values()) == {0}


def test_three_interval_weights():
    cert = certify_nonexpansive(three_intervals())
    W = cert.weights
    assert W(0, 1) == 0 and W(1, 0) == 0
    assert W(1, 2) == 1 and W(2, 1) == -1
    assert not W.adjacent(0, 2)


def test_h3_rejected_with_witness():
    s = h3()
    cert = certify_nonexpansive(s)
    assert not cert.nonexpansive
    wt = cert.witness
    assert wt.value >= 2
    c = sub(s.drifts[wt.i], s.drifts[wt.j])
    assert dot(c, sub(wt.x_i, wt.x_j)) == wt.value
    assert s.regions[wt.i].poly.contains(wt.x_i) and s.regions[wt.j].poly.contains(wt.x_j)


def test_h3_hand_witness_value():
    # x_1 = (0,1) in Q1, x_2 = (0,0) in Q2
    s = h3()
    c = sub(s.drifts[0], s.drifts[1])
    assert dot(c, (0, 1)) == 2


@pytest.mark.parametrize("seed", range(10))
def test_rotational_perturbations_rejected(seed):
    assert not certify_nonexpansive(rotated_h2(seed)).nonexpansive


def test_boundary_weight_infinite():
    assert boundary_weight(h3(), 0, 1) == INF


def test_corrupted_weights_break_conservation():
    s = three_intervals()
    cert = certify_nonexpansive(s)
    with pytest.raises(ConservationViolated):
        local_conservation(s, cert.weights.with_weight(1, 2, Fraction(2)))


def test_triples_of_h2():
    triples = intersecting_triples(h2(), adjacency(h2()))
    assert (0, 1, 2) in triples and (0, 0, 1) in triples


def test_gamma_examples():
    gd = gamma_delta(three_intervals())
    assert gd.numeric_mode and gd.gamma <= Fraction(1, 4)
    assert gd.delta == gd.gamma / 3
    assert min(e for _, e in gd.triples) == pytest.approx(0.5)
    for s in (h1(), h2()):
        gd = gamma_delta(s)
        assert gd.gamma == INF and gd.delta == INF and not gd.numeric_mode


def test_fine_path_three_intervals():
    s = three_intervals()
    cert = certify_nonexpansive(s)
    delta = gamma_delta(s).delta
    p = sample_fine_path(s, [-3], [Fraction(7, 2)], delta)
    assert p.fine(delta) and p.jump_free(cert.weights.pairs)
    # b_{D1 D2} + b_{D2 D3} = 0 + 1
    assert path_weight(s, cert.weights, p) == 1


def test_path_weight_rejects_jumps():
    s = three_intervals()
    cert = certify_nonexpansive(s)
    p = Path.through(s, [[-1], [2]])
    with pytest.raises(NotJumpFree):
        path_weight(s, cert.weights, p)


def test_fine_path_boundary_samples_are_moved():
    s = h2()
    # two pieces: the midpoint (0, -3/4) lies on the boundary of D1 and D3
    p = sample_fine_path(s, [-1, -1], [1, Fraction(-1, 2)], Fraction(5, 2))
    assert len(p.points) == 3 and p.points[1] != (0, Fraction(-3, 4))
    assert all(s.regions[k].poly.contains_strictly(x) for x, k in zip(p.points, p.regions))


@given(st.integers(min_value=0, max_value=10**6))
def test_random_potential_systems_are_certified_and_conservative(seed):
    s = random_potential_system(seed, pieces=4)
    cert = certify_nonexpansive(s)
    assert cert.nonexpansive
    W = cert.weights
    for i, j in W.pairs:
        assert W(i, j) + W(j, i) == 0
    for i, j, k in intersecting_triples(s, W.pairs):
        assert W(i, j) + W(j, k) + W(k, i) == 0


@given(st.integers(min_value=0, max_value=10**6))
def test_verdict_agrees_with_sampled_pairs(seed):
    # random drifts on H2's tiling: a certified field must be monotone on every sampled pair,
    # and a rejected one has a witness pair with positive bilinear value
    rng = random.Random(seed)
    base = h2().to_json()
    for r in base["regions"]:
        r["drift"] = [str(rng.randint(-2, 2)), str(rng.randint(-2, 2))]
    s = HybridSystem.from_json(base)
    if len(set(s.drifts)) < len(s):
        return
    cert = certify_nonexpansive(s)
    if cert.nonexpansive:
        for _ in range(50):
            i, j = rng.randrange(3), rng.randrange(3)
            xi = random_point(rng, 2, Fraction(5), 8)
            xj = random_point(rng, 2, Fraction(5), 8)
            if s.regions[i].poly.contains(xi) and s.regions[j].poly.contains(xj):
                assert dot(sub(s.drifts[i], s.drifts[j]), sub(xi, xj)) <= 0
        finite = [w for w in cert.weights.weights.values() if w != INF]
        assert len(finite) == len(cert.weights.weights)
    else:
        wt = cert.witness
        assert dot(sub(s.drifts[wt.i], s.drifts[wt.j]), sub(wt.x_i, wt.x_j)) > 0


def test_cycle_weight_zero_with_waypoints():
    s = random_potential_system(7)
    cert = certify_nonexpansive(s)
    delta = gamma_delta(s).delta
    pts = [(Fraction(-2, 3), Fraction(1, 7)), (Fraction(5, 2), Fraction(-1, 3)), (Fraction(1, 5), Fraction(3)),
           (Fraction(-2, 3), Fraction(1, 7))]
    p = fine_path_through(s, pts, delta)
    assert p.is_cycle() and p.fine(delta) and p.jump_free(cert.weights.pairs)
    assert path_weight(s, cert.weights, p) == 0

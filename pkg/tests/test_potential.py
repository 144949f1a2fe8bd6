from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from polyflow.certify import ConservationViolated, certify_nonexpansive
from polyflow.corpus import h1, h2, h3, random_potential_system, three_intervals
from polyflow.numeric import dot, sub
from polyflow.potential import (
    MaximizerMismatch,
    NotCertified,
    PWLPotential,
    build_potential,
    canonical_tiling,
    evaluate,
    potential_to_hybrid,
    region_weights,
    same_regions,
    subdifferential,
    verify_maximizers,
)
from polyflow.tiling import active_set, random_point

q = st.fractions(min_value=-10, max_value=10, max_denominator=12)
pt2 = st.tuples(q, q)
lam = st.sampled_from([Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)])


def test_h1_potential_is_abs():
    P = build_potential(h1())
    assert set(P.pieces) == {((1,), 0), ((-1,), 0)}
    for x in (-3, 0, Fraction(5, 2)):
        assert P([x]) == abs(x)


def test_h1_subdifferential_at_zero():
    sd = subdifferential(build_potential(h1()), [0])
    assert set(sd.generators) == {(1,), (-1,)}


def test_h2_potential_shape():
    s = h2()
    P = build_potential(s)
    assert P.offsets == [0, 0, 0]
    assert P.slopes == s.drifts
    # max(-mu1.x, -mu2.x, 0) = max(x1, x2, 0)
    for x in [(2, 1), (-1, 3), (-2, -5), (0, 0)]:
        assert P(x) == max(x[0], x[1], 0)
    checks = verify_maximizers(s, P, samples=1000, seed=0)
    assert sum(c.kind == "vertex" for c in checks) >= 3


def test_three_interval_potential():
    P = build_potential(three_intervals())
    for x in (-2, 0, Fraction(1, 2), 1, 4):
        assert P([x]) == max(-Fraction(x), 0, Fraction(x) - 1)


def test_uncertified_refused():
    with pytest.raises(NotCertified):
        build_potential(h3())


def test_corrupted_weight_detected():
    s = h2()
    cert = certify_nonexpansive(s)
    with pytest.raises(ConservationViolated):
        build_potential(s, cert, weights=cert.weights.with_weight(1, 2, Fraction(1)))


def test_maximizer_mismatch_detected():
    s = h2()
    bad = PWLPotential((((-1, 0), 0), ((0, -1), 1), ((0, 0), 0)))
    with pytest.raises(MaximizerMismatch):
        verify_maximizers(s, bad, samples=50)


def test_gauge_freedom():
    s = three_intervals()
    W = certify_nonexpansive(s).weights
    b0 = region_weights(s, W, reference=0)
    b2 = region_weights(s, W, reference=2)
    shifts = {x - y for x, y in zip(b0, b2)}
    assert len(shifts) == 1


def test_convert_prunes_dominated_piece():
    P = PWLPotential((((1,), 0), ((-1,), 0), ((0,), -5)))
    s = potential_to_hybrid(P)
    assert len(s) == 2 and s.drifts == [(1,), (-1,)]


def test_convert_single_piece_is_whole_space():
    s = potential_to_hybrid(PWLPotential((((1, 2), 3),)))
    assert len(s) == 1 and len(s.regions[0].poly) == 0


def test_convert_rejects_duplicates():
    with pytest.raises(ValueError):
        PWLPotential((((1,), 0), ((1,), 0)))


def test_parallel_pieces_keep_the_dominant_one():
    # same slope, different offsets: only the larger offset ever attains the max
    s = potential_to_hybrid(PWLPotential((((1,), 0), ((1,), 1))))
    assert len(s) == 1 and s.drifts == [(1,)]


def test_round_trip_h2():
    s = h2()
    back = potential_to_hybrid(build_potential(s), s.names)
    assert same_regions(s, back)


def test_potential_json_round_trip():
    P = build_potential(three_intervals())
    assert PWLPotential.from_json(P.to_json()) == P


@given(st.integers(0, 10**6), pt2, pt2, lam)
def test_convexity(seed, x, y, t):
    P = build_potential(random_potential_system(seed, pieces=4))
    z = tuple(t * a + (1 - t) * b for a, b in zip(x, y))
    assert P(z) <= t * P(x) + (1 - t) * P(y)


@given(st.integers(0, 10**6), pt2, pt2)
def test_subgradient_inequality(seed, x, y):
    P = build_potential(random_potential_system(seed, pieces=4))
    sd = subdifferential(P, x)
    for g in sd.generators:
        # -g is a subgradient: Phi(y) >= Phi(x) + (-g).(y - x)
        assert P(y) >= P(x) - dot(g, sub(y, x))


@given(st.integers(0, 10**6), pt2)
def test_argmax_equals_active_regions(seed, x):
    s = random_potential_system(seed, pieces=5)
    P = build_potential(s)
    assert evaluate(P, x)[1] == active_set(s, x).indices


@given(st.integers(0, 10**6))
def test_round_trip_random(seed):
    s = random_potential_system(seed, pieces=4)
    assert same_regions(s, potential_to_hybrid(build_potential(s), s.names))


def test_canonical_tiling_recovers_h2():
    import random

    s = h2()
    rng = random.Random(0)
    samples = {0: [], 1: [], 2: []}
    for _ in range(400):
        x = random_point(rng, 2, Fraction(5), 4)
        for k in active_set(s, x).indices:
            samples[k].append(x)
    ct = canonical_tiling(s.drifts, samples)
    assert not ct.violations
    # the outer approximations contain the true regions
    for true, approx in zip(s.regions, ct.polyhedra):
        assert true.poly.contained_in(approx)


def test_canonical_tiling_flags_h3():
    s = h3()
    samples = {k: [v for v in [(1, 1), (-1, 1), (-1, -1), (1, -1), (0, 2), (-2, 0), (0, -2), (2, 0)]
                   if s.regions[k].poly.contains(v)] for k in range(4)}
    assert canonical_tiling(s.drifts, samples).violations

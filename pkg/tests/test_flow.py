import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from polyflow.corpus import h1, h2, h3, random_potential_system, three_intervals
from polyflow.flow import (
    EventStorm,
    Terminal,
    check_nonexpansive_trajectories,
    min_norm_point,
    proximal_step,
    proximal_trajectory,
    resolve_velocity,
    simulate,
)
from polyflow.numeric import combination, dot, norm2, solve_linear, sub
from polyflow.potential import NotCertified, PWLPotential, build_potential
from polyflow.tiling import active_set

small = st.integers(min_value=-3, max_value=3)
vec2 = st.tuples(small, small)
q = st.fractions(min_value=-6, max_value=6, max_denominator=8)


def brute_min_norm(vectors):
    """Minimum over every affinely independent subset whose affine projection has positive weights."""
    pts = [tuple(map(Fraction, v)) for v in vectors]
    best = None
    for size in range(1, len(pts) + 1):
        for S in itertools.combinations(pts, size):
            M = [[dot(a, b) for b in S] + [1] for a in S] + [[1] * size + [0]]
            sol = solve_linear(M, [0] * size + [1])
            if sol is None or any(w < 0 for w in sol[:size]):
                continue
            x = combination(sol[:size], S, len(pts[0]))
            if best is None or norm2(x) < norm2(best):
                best = x
    return best


def test_min_norm_examples():
    assert min_norm_point([(-1, 0), (0, -1)]).point == (Fraction(-1, 2), Fraction(-1, 2))
    assert min_norm_point([(-1, 0), (0, -1), (0, 0)]).point == (0, 0)
    assert min_norm_point([(2,)]).point == (2,)


@given(st.lists(vec2, min_size=1, max_size=6))
def test_min_norm_matches_brute_force(vs):
    res = min_norm_point(vs)
    assert norm2(res.point) == norm2(brute_min_norm(vs))
    assert sum(res.weights) == 1 and all(w >= 0 for w in res.weights)
    assert combination(res.weights, [tuple(map(Fraction, v)) for v in vs], 2) == res.point
    # optimality: every generator lies on the far side of the supporting hyperplane
    assert all(dot(res.point, v) >= norm2(res.point) for v in vs)


def test_resolve_velocity_examples():
    r = resolve_velocity(h2(), (1, 1))
    assert r.velocity == (Fraction(-1, 2), Fraction(-1, 2)) and r.active == frozenset({0, 1})
    assert resolve_velocity(h2(), (0, 0)).velocity == (0, 0)
    assert resolve_velocity(h1(), (3,)).velocity == (-1,)


def test_h2_trajectory():
    tr = simulate(h2(), (2, 1), 5)
    assert tr.breakpoints == [(0, (2, 1)), (1, (1, 1)), (3, (0, 0))]
    assert tr.velocities == [(-1, 0), (Fraction(-1, 2), Fraction(-1, 2))]
    assert tr.terminal is Terminal.EQUILIBRIUM


def test_h1_trajectories():
    tr = simulate(h1(), (2,), 5)
    assert tr.breakpoints == [(0, (2,)), (2, (0,))] and tr.terminal is Terminal.EQUILIBRIUM
    tr = simulate(h1(), (0,), 5)
    assert tr.breakpoints == [(0, (0,))] and tr.terminal is Terminal.EQUILIBRIUM
    tr = simulate(h1(), (5,), 2)
    assert tr.breakpoints == [(0, (5,)), (2, (3,))] and tr.terminal is Terminal.HORIZON


def test_csv_output():
    text = simulate(h2(), (2, 1), 5).to_csv(exact=True)
    lines = text.strip().splitlines()
    assert lines[0] == "t,x1,x2,event,t_exact,x1_exact,x2_exact"
    assert lines[-1].split(",")[3] == "equilibrium"
    tr = simulate(h2(), (Fraction(1, 3), 0), 5)
    assert "0.33333333333333331" in tr.to_csv()


def test_uncertified_refused_unless_unsafe():
    with pytest.raises(NotCertified):
        simulate(h3(), (1, 0), 1)
    tr = simulate(h3(), (1, 0), 3, unsafe=True)
    assert tr.terminal is Terminal.HORIZON


def test_event_cap():
    with pytest.raises(EventStorm):
        simulate(h3(), (1, 0), 100, unsafe=True, cap_events=5)


def test_proximal_examples():
    P = build_potential(h1())
    assert proximal_step(P, (2,), Fraction(1, 2)) == (Fraction(3, 2),)
    assert proximal_step(P, (Fraction(1, 4),), Fraction(1, 2)) == (0,)
    single = PWLPotential((((1, -2), 3),))
    assert proximal_step(single, (1, 1), Fraction(1, 3)) == (Fraction(4, 3), Fraction(1, 3))


def test_pair_reports():
    s = h2()
    rep = check_nonexpansive_trajectories(simulate(s, (2, 1), 5), simulate(s, (1, 2), 5))
    assert rep.max_increment == 0 and rep.sq_distances[-1] == 0
    rep = check_nonexpansive_trajectories(simulate(s, (2, 1), 5), simulate(s, (2, 1), 5))
    assert set(rep.sq_distances) == {0}
    a = simulate(h3(), (1, 0), 4, unsafe=True)
    b = simulate(h3(), (0, 1), 4, unsafe=True)
    assert check_nonexpansive_trajectories(a, b).max_increment > 0


def _random_system(seed):
    return [h1(), h2(), three_intervals(), random_potential_system(seed % 50, pieces=5)][seed % 4]


@given(st.integers(0, 10**6), st.tuples(q, q))
def test_energy_dissipation_and_velocity_validity(seed, x):
    s = _random_system(seed)
    P = build_potential(s)
    x0 = x[: s.dimension]
    tr = simulate(s, x0, 10)
    for k, v in enumerate(tr.velocities):
        xa, xb = tr.states[k], tr.states[k + 1]
        dt = tr.times[k + 1] - tr.times[k]
        assert P(xb) < P(xa)
        # Phi decreases at rate |v|^2 on the segment
        assert P(xa) - P(xb) == dt * norm2(v)
        res = resolve_velocity(s, xa)
        assert res.velocity == v
        act = active_set(s, xa).indices
        assert set(res.weights) <= act
        assert combination([res.weights[i] for i in sorted(res.weights)],
                           [s.drifts[i] for i in sorted(res.weights)], s.dimension) == v
        assert all(len(a) > len(b) for a, b in zip(res.trace, res.trace[1:]))


@given(st.integers(0, 10**6), st.tuples(q, q))
def test_dual_path_equality(seed, x):
    s = _random_system(seed)
    x0 = x[: s.dimension]
    a = simulate(s, x0, 8)
    b = simulate(build_potential(s), x0, 8)
    assert a.breakpoints == b.breakpoints and a.terminal == b.terminal


@given(st.integers(0, 10**6), st.tuples(q, q), st.tuples(q, q))
def test_pairs_never_separate(seed, x, y):
    s = _random_system(seed)
    n = s.dimension
    rep = check_nonexpansive_trajectories(simulate(s, x[:n], 6), simulate(s, y[:n], 6))
    assert rep.max_increment == 0 and rep.max_end_slope <= 0


def test_proximal_grid_tracks_trajectory():
    s = h2()
    P = build_potential(s)
    tr = simulate(s, (2, 1), 5)
    for t, z in proximal_trajectory(P, (2, 1), 5, Fraction(1, 4)):
        assert norm2(sub(z, tr.state_at(t))) <= Fraction(1, 16)


def test_oracle_error_first_order_bound():
    # a system where the proximal grid is not exact: the error stays below h * max |mu|
    import math

    from polyflow.flow import oracle_error

    s = random_potential_system(7)
    P = build_potential(s)
    lip = max(math.sqrt(norm2(m)) for m in P.slopes)
    x0 = (Fraction(13, 7), Fraction(17, 7))
    tr = simulate(s, x0, 4)
    errs = []
    for h in (Fraction(1, 4), Fraction(1, 8), Fraction(1, 16), Fraction(1, 32)):
        grid = [(t, z) for t, z in proximal_trajectory(P, x0, 4, h) if t <= tr.end_time]
        errs.append(oracle_error(tr, grid))
        assert errs[-1] <= float(h) * lip
    assert errs[0] > 0 and errs[-1] < errs[0] / 4

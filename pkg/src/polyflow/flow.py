"""Exact trajectories of the differential inclusion ``x' in F(x)``.

Between events the velocity is constant: the minimum-norm element of the hull
of the drifts that stay active, i.e. the slow solution.  Event times are exact
roots of affine functions of time, so every breakpoint is a rational point.
"""

from __future__ import annotations

import enum
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from .certify import Certificate, certify_nonexpansive
from .numeric import (
    ONE,
    ZERO,
    DimensionMismatch,
    Vector,
    axpy,
    combination,
    dot,
    format_rational,
    norm2,
    solve_linear,
    sub,
    to_rational,
    vector,
)
from .potential import NotCertified, PWLPotential, evaluate
from .tiling import HybridSystem, active_set

Target = Union[HybridSystem, PWLPotential]


class EventStorm(RuntimeError):
    pass


# --------------------------------------------------------------------------
# Minimum-norm point (Wolfe)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MinNormPoint:
    point: Vector
    weights: tuple  # convex weights over the input list, summing to 1


def _affine_min_norm(P: Sequence[Vector]) -> Optional[tuple]:
    """Weights of the min-norm point of the affine hull of ``P`` (None if degenerate)."""
    k = len(P)
    M = [[dot(p, q) for q in P] + [ONE] for p in P]
    M.append([ONE] * k + [ZERO])
    sol = solve_linear(M, [ZERO] * k + [ONE])
    return None if sol is None else sol[:k]


def min_norm_point(vectors: Sequence[Sequence]) -> MinNormPoint:
    """Closest point to the origin of the convex hull of ``vectors``.

    Wolfe's algorithm run in exact arithmetic; ties are broken by lowest index.
    """
    pts = [vector(v) for v in vectors]
    if not pts:
        raise ValueError("min_norm_point needs at least one vector")
    n = len(pts[0])
    if any(len(p) != n for p in pts):
        raise DimensionMismatch("vectors of different lengths")

    first = min(range(len(pts)), key=lambda i: (norm2(pts[i]), i))
    S = [first]
    lam = {first: ONE}
    x = pts[first]
    while True:
        xx = norm2(x)
        j = min(range(len(pts)), key=lambda i: (dot(x, pts[i]), i))
        if dot(x, pts[j]) >= xx or j in lam:
            break
        S.append(j)
        lam[j] = ZERO
        while True:
            alpha = _affine_min_norm([pts[i] for i in S])
            if alpha is None:
                raise ArithmeticError("Wolfe corral became affinely dependent")
            if all(a > 0 for a in alpha):
                lam = dict(zip(S, alpha))
                break
            theta = min(
                (lam[i] / (lam[i] - a) for i, a in zip(S, alpha) if a <= 0 and lam[i] - a > 0),
                default=ZERO,
            )
            lam = {i: (1 - theta) * lam[i] + theta * a for i, a in zip(S, alpha)}
            S = [i for i in S if lam[i] > 0]
            lam = {i: lam[i] for i in S}
        x = combination([lam[i] for i in S], [pts[i] for i in S], n)
    weights = tuple(lam.get(i, ZERO) for i in range(len(pts)))
    return MinNormPoint(x, weights)


# --------------------------------------------------------------------------
# Velocity selection
# --------------------------------------------------------------------------


def _drifts(target: Target) -> list:
    return target.drifts if isinstance(target, HybridSystem) else target.slopes


def active_indices(target: Target, x: Vector) -> frozenset:
    if isinstance(target, HybridSystem):
        return active_set(target, x).indices
    return evaluate(target, x)[1]


@dataclass(frozen=True)
class VelocityResolution:
    point: Vector
    active: frozenset
    velocity: Vector
    weights: dict  # region/piece index -> convex weight
    trace: tuple  # successive active sets, strictly shrinking


def resolve_velocity(target: Target, x: Sequence) -> VelocityResolution:
    """Minimum-norm admissible velocity, keeping only drifts that stay active.

    After each min-norm solve, only the indices whose piece grows fastest along
    the velocity are kept; the loop stops once the set is stable.
    """
    x = vector(x)
    mus = _drifts(target)
    A = sorted(active_indices(target, x))
    trace = [frozenset(A)]
    while True:
        mnp = min_norm_point([mus[i] for i in A])
        v = mnp.point
        rates = {i: -dot(mus[i], v) for i in A}
        top = max(rates.values())
        A2 = [i for i in A if rates[i] == top]
        if A2 == A:
            break
        A = A2
        trace.append(frozenset(A))
    weights = {i: w for i, w in zip(A, mnp.weights) if w}
    return VelocityResolution(x, frozenset(A), v, weights, tuple(trace))


# --------------------------------------------------------------------------
# Event-driven simulation
# --------------------------------------------------------------------------


class Terminal(enum.Enum):
    HORIZON = "horizon"
    EQUILIBRIUM = "equilibrium"


@dataclass
class Trajectory:
    times: list
    states: list
    velocities: list  # one per segment
    events: list  # per breakpoint: start / crossing / equilibrium / horizon
    terminal: Terminal

    @property
    def breakpoints(self) -> list:
        return list(zip(self.times, self.states))

    @property
    def end_time(self) -> Union[Fraction, float]:
        """Last time at which the state is defined (infinite after an equilibrium)."""
        return math.inf if self.terminal is Terminal.EQUILIBRIUM else self.times[-1]

    def state_at(self, t) -> Vector:
        t = to_rational(t)
        if t < 0 or t > self.end_time:
            raise ValueError(f"time {t} outside the trajectory")
        k = _segment(self.times, t)
        if k >= len(self.velocities):
            return self.states[-1]
        return axpy(self.states[k], t - self.times[k], self.velocities[k])

    def velocity_at(self, t) -> Vector:
        """Right velocity at time ``t``."""
        t = to_rational(t)
        k = _segment(self.times, t)
        if k >= len(self.velocities):
            return tuple(ZERO for _ in self.states[0])
        return self.velocities[k]

    def to_csv(self, exact: bool = False) -> str:
        n = len(self.states[0])
        cols = ["t"] + [f"x{k + 1}" for k in range(n)] + ["event"]
        if exact:
            cols += ["t_exact"] + [f"x{k + 1}_exact" for k in range(n)]
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for t, x, ev in zip(self.times, self.states, self.events):
            row = [_dec(t)] + [_dec(v) for v in x] + [ev]
            if exact:
                row += [format_rational(t)] + [format_rational(v) for v in x]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()


def _dec(q: Fraction) -> str:
    return format(float(q), ".17g")


def _segment(times: Sequence[Fraction], t: Fraction) -> int:
    """Index k with times[k] <= t < times[k+1] (last index if t >= times[-1])."""
    lo, hi = 0, len(times) - 1
    if t >= times[-1]:
        return hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if times[mid] <= t:
            lo = mid
        else:
            hi = mid
    return lo


def _ray_intervals(system: HybridSystem, x: Vector, v: Vector) -> list:
    """For each region, the interval ``[lo, hi]`` of t >= 0 with ``x + t v`` inside (None if empty)."""
    out = []
    for r in system.regions:
        lo, hi = ZERO, math.inf
        empty = False
        for row, beta in zip(r.poly.A, r.poly.b):
            ax, av = dot(row, x), dot(row, v)
            if av > 0:
                hi = min(hi, (beta - ax) / av)
            elif av < 0:
                lo = max(lo, (beta - ax) / av)
            elif ax > beta:
                empty = True
                break
        out.append(None if empty or lo > hi else (lo, hi))
    return out


def _forward_regions(system: HybridSystem, x: Vector, v: Vector) -> list:
    """Regions containing ``x + t v`` for all small t > 0."""
    return [k for k, iv in enumerate(_ray_intervals(system, x, v)) if iv is not None and iv[0] == 0 and iv[1] > 0]


def _system_velocity(system: HybridSystem, x: Vector) -> tuple:
    res = resolve_velocity(system, x)
    v, A = res.velocity, sorted(res.active)
    if v == tuple(ZERO for _ in v):
        return v, A
    mus = system.drifts
    # outside the monotone class the drift-rate rule can disagree with the geometry
    for _ in range(len(system)):
        G = _forward_regions(system, x, v)
        if G == A or not G:
            break
        A = G
        v = min_norm_point([mus[i] for i in A]).point
    return v, A


def _system_event(system: HybridSystem, x: Vector, v: Vector) -> Union[Fraction, float]:
    best = math.inf
    for iv in _ray_intervals(system, x, v):
        if iv is None:
            continue
        lo, hi = iv
        if lo > 0:
            best = min(best, lo)
        elif hi > 0:
            best = min(best, hi)
    return best


def _potential_event(potential: PWLPotential, x: Vector, v: Vector, keep: frozenset) -> Union[Fraction, float]:
    vals = potential.piece_values(x)
    top = max(vals)
    rates = [-dot(s, v) for s in potential.slopes]
    r = rates[next(iter(keep))]
    best = math.inf
    for j, (f, rj) in enumerate(zip(vals, rates)):
        if j in keep or rj <= r:
            continue
        gap = top - f
        if gap > 0:
            best = min(best, gap / (rj - r))
    return best


def simulate(target: Target, x0: Sequence, horizon, *, unsafe: bool = False,
             certificate: Optional[Certificate] = None, cap_events: int = 10**6) -> Trajectory:
    """Integrate from ``x0`` on ``[0, horizon]`` or until an equilibrium is reached.

    A HybridSystem is first certified nonexpansive unless ``unsafe`` is set or a
    passing ``certificate`` is supplied.
    """
    T = to_rational(horizon)
    if T <= 0:
        raise ValueError("horizon must be positive")
    x = vector(x0)
    is_system = isinstance(target, HybridSystem)
    n = target.dimension
    if len(x) != n:
        raise DimensionMismatch(f"initial state of length {len(x)} in dimension {n}")
    if is_system and not unsafe:
        if certificate is None:
            certificate = certify_nonexpansive(target)
        if not certificate.nonexpansive:
            raise NotCertified("refusing to simulate an uncertified system (use unsafe=True)")

    zero = tuple(ZERO for _ in range(n))
    t = ZERO
    times, states, vels, events = [t], [x], [], ["start"]
    while True:
        if is_system:
            v, _ = _system_velocity(target, x)
        else:
            res = resolve_velocity(target, x)
            v = res.velocity
        if v == zero:
            terminal = Terminal.EQUILIBRIUM
            events[-1] = "equilibrium"
            break
        if is_system:
            dt = _system_event(target, x, v)
        else:
            dt = _potential_event(target, x, v, res.active)
        remaining = T - t
        if dt >= remaining:
            x = axpy(x, remaining, v)
            t = T
            times.append(t)
            states.append(x)
            vels.append(v)
            events.append("horizon")
            terminal = Terminal.HORIZON
            break
        x = axpy(x, dt, v)
        t += dt
        times.append(t)
        states.append(x)
        vels.append(v)
        events.append("crossing")
        if len(times) > cap_events:
            raise EventStorm(f"more than {cap_events} breakpoints")
    return Trajectory(times, states, vels, events, terminal)


# --------------------------------------------------------------------------
# Proximal (implicit Euler) oracle
# --------------------------------------------------------------------------


def proximal_step(potential: PWLPotential, x: Sequence, h) -> Vector:
    """``argmin_z Phi(z) + |z - x|^2 / (2h)``, exactly.

    The optimal z equals ``x + h * sum(lam_i mu_i)`` for a convex combination
    supported on maximizing pieces at z.  Supports of at most n+1 pieces with
    affinely independent slopes suffice, so those are enumerated and the KKT
    conditions checked exactly.
    """
    x = vector(x)
    h = to_rational(h)
    if h <= 0:
        raise ValueError("step must be positive")
    mus, offs = potential.slopes, potential.offsets
    n = potential.dimension
    m = len(mus)
    base = [b - dot(mu, x) for mu, b in zip(mus, offs)]
    # most promising supports first: pieces maximal at x
    order = sorted(range(m), key=lambda i: (-base[i], i))
    for size in range(1, min(m, n + 1) + 1):
        for S in itertools.combinations(order, size):
            M = [[h * dot(mus[i], mus[k]) for k in S] + [ONE] for i in S]
            M.append([ONE] * size + [ZERO])
            sol = solve_linear(M, [base[i] for i in S] + [ONE])
            if sol is None:
                continue
            lam, level = sol[:size], sol[size]
            if any(l < 0 for l in lam):
                continue
            z = axpy(x, h, combination(lam, [mus[i] for i in S], n))
            if all(b - dot(mu, z) <= level for mu, b in zip(mus, offs)):
                return z
    raise ArithmeticError("no KKT point found for the proximal step")


def proximal_trajectory(potential: PWLPotential, x0: Sequence, horizon, h) -> list:
    """``[(k h, x_k)]`` for ``k = 0 .. ceil(T/h)``."""
    h = to_rational(h)
    T = to_rational(horizon)
    steps = math.ceil(T / h)
    x = vector(x0)
    out = [(ZERO, x)]
    for k in range(1, steps + 1):
        x = proximal_step(potential, x, h)
        out.append((k * h, x))
    return out


def oracle_error(trajectory: Trajectory, grid: Sequence) -> float:
    """Max Euclidean distance between grid states and the exact trajectory."""
    worst = ZERO
    for t, z in grid:
        worst = max(worst, norm2(sub(z, trajectory.state_at(t))))
    return math.sqrt(worst)


# --------------------------------------------------------------------------
# Pairwise distance monotonicity
# --------------------------------------------------------------------------


@dataclass
class NonexpansivenessReport:
    times: list
    sq_distances: list
    max_increment: Fraction
    max_end_slope: Fraction  # max over pieces of d/dt |x-y|^2 at the piece's right end
    ok: bool = field(init=False)

    def __post_init__(self):
        self.ok = self.max_increment <= 0

    def to_json(self) -> dict:
        return {
            "samples": len(self.times),
            "initial_sq_distance": format_rational(self.sq_distances[0]),
            "final_sq_distance": format_rational(self.sq_distances[-1]),
            "max_increment": format_rational(self.max_increment),
            "max_end_slope": format_rational(self.max_end_slope),
            "nonincreasing": self.ok,
        }


def check_nonexpansive_trajectories(a: Trajectory, b: Trajectory) -> NonexpansivenessReport:
    """Squared distance at merged breakpoints and segment midpoints, in time order."""
    end = min(a.end_time, b.end_time)
    if end == math.inf:
        end = max(a.times[-1], b.times[-1])
    knots = sorted({t for t in itertools.chain(a.times, b.times) if t <= end} | {end})
    times = []
    for t0, t1 in zip(knots, knots[1:]):
        times += [t0, (t0 + t1) / 2]
    times.append(knots[-1])
    sq = [norm2(sub(a.state_at(t), b.state_at(t))) for t in times]
    inc = max((q1 - q0 for q0, q1 in zip(sq, sq[1:])), default=ZERO)
    slope = None
    for t0, t1 in zip(knots, knots[1:]):
        d1 = sub(a.state_at(t1), b.state_at(t1))
        w = sub(a.velocity_at(t0), b.velocity_at(t0))
        s = 2 * dot(d1, w)
        slope = s if slope is None else max(slope, s)
    return NonexpansivenessReport(times, sq, max(inc, ZERO), slope if slope is not None else ZERO)

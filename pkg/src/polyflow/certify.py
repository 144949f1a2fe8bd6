"""Nonexpansiveness certification and the weight identities on the adjacency graph.

The drift field of a polyhedral hybrid system is monotone (hence the flow is
nonexpansive) iff ``(mu_i - mu_j).(x_i - x_j) <= 0`` for all ``x_i`` in region
``i`` and ``x_j`` in region ``j``.  The supremum of the left side separates into
``b_ij + b_ji`` with ``b_ij = sup_{x in D_i} (mu_i - mu_j).x``, so one exact LP
per ordered pair decides the question.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import linprog

from .numeric import (
    ONE,
    ZERO,
    LPStatus,
    LPOutcome,
    Vector,
    axpy,
    dot,
    feasible,
    format_rational,
    norm2,
    solve_lp,
    sub,
    vector,
)
from .tiling import FORMAT, HybridSystem, adjacency

INF = math.inf
Weight = Union[Fraction, float]  # a Fraction, or math.inf

# gamma from floating-point LPs is multiplied by this before use
GAMMA_SAFETY = Fraction(1, 2)


class ConservationViolated(ArithmeticError):
    def __init__(self, indices: tuple, residual: Fraction, kind: str = "identity"):
        super().__init__(f"{kind} {indices} has residual {format_rational(residual)}")
        self.indices = indices
        self.residual = residual
        self.kind = kind


class NotJumpFree(ValueError):
    def __init__(self, step: int, regions: tuple):
        super().__init__(f"step {step}: regions {regions[0]} and {regions[1]} are neither equal nor adjacent")
        self.step = step
        self.regions = regions


class PerturbationFailed(RuntimeError):
    pass


def _fmt_weight(w: Weight) -> str:
    return "inf" if w == INF else format_rational(w)


def _boundary_lp(system: HybridSystem, i: int, j: int) -> LPOutcome:
    ri, rj = system.regions[i], system.regions[j]
    c = sub(ri.drift, rj.drift)
    return solve_lp(c, ri.poly.A, ri.poly.b, "max")


def boundary_weight(system: HybridSystem, i: int, j: int) -> Weight:
    """``sup over D_i of (mu_i - mu_j).x``; ``math.inf`` when unbounded."""
    if i == j:
        return ZERO
    out = _boundary_lp(system, i, j)
    if out.status is LPStatus.UNBOUNDED:
        return INF
    if out.status is LPStatus.INFEASIBLE:
        raise ValueError(f"region {system.regions[i].name!r} is empty")
    return out.optimal_value


@dataclass
class WeightedAdjacency:
    """Adjacency pairs plus the weights ``b_ij`` of every computed ordered pair."""

    pairs: frozenset
    weights: dict

    def __call__(self, i: int, j: int) -> Weight:
        if i == j:
            return ZERO
        return self.weights[(i, j)]

    def adjacent(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.pairs

    def neighbours(self, i: int) -> list:
        return sorted({b for a, b in self.pairs if a == i} | {a for a, b in self.pairs if b == i})

    def with_weight(self, i: int, j: int, value: Weight) -> "WeightedAdjacency":
        w = dict(self.weights)
        w[(i, j)] = value
        return WeightedAdjacency(self.pairs, w)


def weighted_adjacency(system: HybridSystem, pairs: Optional[frozenset] = None) -> WeightedAdjacency:
    if pairs is None:
        pairs = adjacency(system)
    m = len(system)
    w = {(i, j): boundary_weight(system, i, j) for i in range(m) for j in range(m) if i != j}
    return WeightedAdjacency(pairs, w)


@dataclass(frozen=True)
class Identity:
    """One checked conservation identity: the indices and its exact residual."""

    kind: str  # "pair" or "triple"
    indices: tuple
    residual: Fraction


@dataclass(frozen=True)
class PairWitness:
    i: int
    j: int
    x_i: Vector
    x_j: Vector
    value: Fraction


@dataclass
class Certificate:
    nonexpansive: bool
    weights: WeightedAdjacency
    witness: Optional[PairWitness] = None
    transcript: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "Nonexpansive" if self.nonexpansive else "NotNonexpansive"

    def to_json(self, system: HybridSystem) -> dict:
        names = system.names
        out = {
            "format": FORMAT,
            "verdict": self.verdict,
            "adjacency": [[names[i], names[j]] for i, j in sorted(self.weights.pairs)],
            "weights": [
                {"from": names[i], "to": names[j], "b": _fmt_weight(w)}
                for (i, j), w in sorted(self.weights.weights.items())
            ],
        }
        if self.witness is not None:
            wt = self.witness
            out["witness"] = {
                "regions": [names[wt.i], names[wt.j]],
                "x_i": [format_rational(v) for v in wt.x_i],
                "x_j": [format_rational(v) for v in wt.x_j],
                "value": format_rational(wt.value),
            }
        out["conservation"] = [
            {"kind": t.kind, "regions": [names[k] for k in t.indices], "residual": format_rational(t.residual)}
            for t in self.transcript
        ]
        return out


def _witness(system: HybridSystem, i: int, j: int, lp_i: LPOutcome, lp_j: LPOutcome) -> PairWitness:
    """Points ``x_i in D_i``, ``x_j in D_j`` with ``(mu_i - mu_j).(x_i - x_j) > 0``."""
    ri, rj = system.regions[i], system.regions[j]
    c = sub(ri.drift, rj.drift)
    xi = lp_i.optimal_point or feasible(ri.poly.A, ri.poly.b, system.dimension).point
    xj = lp_j.optimal_point or feasible(rj.poly.A, rj.poly.b, system.dimension).point
    gain = _ray_gain(c, lp_i, lp_j)
    if gain > 0:
        # walk along the recession ray(s) until the bilinear form turns positive
        base = dot(c, sub(xi, xj))
        step = ONE if base + gain > 0 else (-base) / gain + ONE
        if lp_i.status is LPStatus.UNBOUNDED:
            xi = axpy(xi, step, lp_i.ray)
        if lp_j.status is LPStatus.UNBOUNDED:
            xj = axpy(xj, step, lp_j.ray)
    value = dot(c, sub(xi, xj))
    if not (value > 0 and ri.poly.contains(xi) and rj.poly.contains(xj)):
        raise RuntimeError(f"failed to build a witness for regions {i}, {j}")
    return PairWitness(i, j, xi, xj, value)


def _ray_gain(c: Vector, lp_i: LPOutcome, lp_j: LPOutcome) -> Fraction:
    """Growth of ``c.(x_i - x_j)`` per unit step along the available rays."""
    g = ZERO
    if lp_i.status is LPStatus.UNBOUNDED:
        g += dot(c, lp_i.ray)
    if lp_j.status is LPStatus.UNBOUNDED:
        g -= dot(c, lp_j.ray)
    return g


def certify_nonexpansive(system: HybridSystem) -> Certificate:
    """Decide monotonicity of the drift field by the pairwise LP criterion.

    Every ordered pair is checked, adjacent or not.  The first failing pair (in
    index order) yields an exact witness; on success the local conservation
    transcript is attached.
    """
    pairs = adjacency(system)
    m = len(system)
    lps = {(i, j): _boundary_lp(system, i, j) for i in range(m) for j in range(m) if i != j}
    weights = {}
    for key, out in lps.items():
        weights[key] = INF if out.status is LPStatus.UNBOUNDED else out.optimal_value
    W = WeightedAdjacency(pairs, weights)
    for i, j in itertools.combinations(range(m), 2):
        if weights[(i, j)] + weights[(j, i)] > 0:
            return Certificate(False, W, witness=_witness(system, i, j, lps[(i, j)], lps[(j, i)]))
    transcript = local_conservation(system, W)
    return Certificate(True, W, transcript=transcript)


def intersecting_triples(system: HybridSystem, pairs: frozenset) -> list:
    """Index triples ``i <= j <= k`` (not all equal) whose regions share a point."""
    m = len(system)
    out = []
    for i, j, k in itertools.combinations_with_replacement(range(m), 3):
        if i == j == k:
            continue
        distinct = sorted({i, j, k})
        if len(distinct) == 2:
            if tuple(distinct) in pairs:
                out.append((i, j, k))
            continue
        if not all(p in pairs for p in itertools.combinations(distinct, 2)):
            continue
        polys = [system.regions[t].poly for t in distinct]
        if polys[0].intersect(*polys[1:]).is_feasible():
            out.append((i, j, k))
    return out


def local_conservation(system: HybridSystem, W: WeightedAdjacency) -> list:
    """Check ``b_ij + b_ji = 0`` on adjacent pairs and ``b_ij + b_jk + b_ki = 0`` on
    intersecting triples, with zero tolerance.

    Raises ConservationViolated at the first nonzero residual.
    """
    transcript = []
    for i, j in sorted(W.pairs):
        wij, wji = W(i, j), W(j, i)
        if wij == INF or wji == INF:
            raise ValueError(f"weight between {i} and {j} is infinite")
        res = wij + wji
        if res != 0:
            raise ConservationViolated((i, j), res, "pair")
        transcript.append(Identity("pair", (i, j), res))
    for i, j, k in intersecting_triples(system, W.pairs):
        res = W(i, j) + W(j, k) + W(k, i)
        if res != 0:
            raise ConservationViolated((i, j, k), res, "triple")
        transcript.append(Identity("triple", (i, j, k), res))
    return transcript


# --------------------------------------------------------------------------
# gamma / delta
# --------------------------------------------------------------------------


@dataclass
class GammaDelta:
    gamma: Weight
    delta: Weight
    numeric_mode: bool
    triples: list = field(default_factory=list)  # (indices, eps_star as float)

    def to_json(self, system: HybridSystem) -> dict:
        names = system.names
        return {
            "format": FORMAT,
            "gamma": _fmt_weight(self.gamma),
            "delta": _fmt_weight(self.delta),
            "gamma_float": float(self.gamma),
            "delta_float": float(self.delta),
            "numeric_mode": self.numeric_mode,
            "safety_factor": format_rational(GAMMA_SAFETY),
            "empty_triples": [{"regions": [names[t] for t in idx], "eps_star": eps} for idx, eps in self.triples],
        }


def _triple_eps(system: HybridSystem, idx: Sequence[int]) -> float:
    """Optimal eps of ``min eps s.t. A x - b <= eps`` over the stacked unit-norm rows."""
    rows, rhs = [], []
    for t in sorted(set(idx)):
        poly = system.regions[t].poly
        for row, bi in zip(poly.A, poly.b):
            r = np.array([float(a) for a in row])
            nrm = float(np.linalg.norm(r))
            rows.append(np.append(r / nrm, -1.0))
            rhs.append(float(bi) / nrm)
    n = system.dimension
    c = np.zeros(n + 1)
    c[-1] = 1.0
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=[(None, None)] * (n + 1), method="highs")
    if res.status != 0:
        raise RuntimeError(f"gamma LP for triple {tuple(idx)} failed: {res.message}")
    return float(res.fun)


def gamma_delta(system: HybridSystem, pairs: Optional[frozenset] = None) -> GammaDelta:
    """The three-region proximity constant gamma and the fineness bound delta = gamma/3.

    Rows cannot be normalized exactly in rationals, so each triple LP runs in
    floating point and the minimum is scaled by GAMMA_SAFETY.
    """
    if pairs is None:
        pairs = adjacency(system)
    meeting = set(intersecting_triples(system, pairs))
    m = len(system)
    triples = []
    for idx in itertools.combinations_with_replacement(range(m), 3):
        if len(set(idx)) == 1 or idx in meeting:
            continue
        triples.append((idx, _triple_eps(system, idx)))
    if not triples:
        return GammaDelta(INF, INF, False, [])
    eps = min(e for _, e in triples)
    if eps <= 0:
        raise RuntimeError("triple LP reported a nonpositive optimum for an empty intersection")
    gamma = Fraction(eps) / 2 * GAMMA_SAFETY
    return GammaDelta(gamma, gamma / 3, True, triples)


# --------------------------------------------------------------------------
# Paths
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Path:
    """Points, each strictly inside its tagged region."""

    points: tuple
    regions: tuple

    @classmethod
    def through(cls, system: HybridSystem, points: Sequence[Sequence]) -> "Path":
        pts = tuple(vector(p) for p in points)
        tags = []
        for p in pts:
            k = interior_region(system, p)
            if k is None:
                raise ValueError(f"point {[format_rational(v) for v in p]} is not interior to any region")
            tags.append(k)
        return cls(pts, tuple(tags))

    def is_cycle(self) -> bool:
        return len(self.points) > 0 and self.points[0] == self.points[-1]

    def jump_free(self, pairs: frozenset) -> bool:
        return all(a == b or (min(a, b), max(a, b)) in pairs for a, b in zip(self.regions, self.regions[1:]))

    def fine(self, delta: Weight) -> bool:
        if delta == INF:
            return True
        d2 = Fraction(delta) ** 2
        return all(norm2(sub(p, q)) <= d2 for p, q in zip(self.points, self.points[1:]))


def interior_region(system: HybridSystem, x: Vector) -> Optional[int]:
    for k, r in enumerate(system.regions):
        if r.poly.contains_strictly(x):
            return k
    return None


def path_weight(system: HybridSystem, W: WeightedAdjacency, path: Path) -> Fraction:
    total = ZERO
    for step, (a, b) in enumerate(zip(path.regions, path.regions[1:])):
        if a != b and not W.adjacent(a, b):
            raise NotJumpFree(step, (a, b))
        w = W(a, b)
        if w == INF:
            raise ValueError(f"weight b_{a}{b} is infinite")
        total += w
    return total


def _ceil_sqrt_ratio(num: Fraction, den: Fraction) -> int:
    """Smallest integer k >= 1 with k^2 >= num/den."""
    q = num / den
    k = max(1, math.isqrt(q.numerator // q.denominator))
    while Fraction(k * k) < q:
        k += 1
    return k


def _offsets(n: int):
    """Deterministic perturbation directions with max-norm 1: axis and diagonal moves."""
    for k in range(n):
        for s in (ONE, -ONE):
            yield tuple(s if i == k else ZERO for i in range(n))
    for signs in itertools.product((ONE, -ONE), repeat=n):
        yield tuple(Fraction(s) * Fraction(i + 2, i + 3) for i, s in enumerate(signs))


def sample_fine_path(system: HybridSystem, x: Sequence, y: Sequence, delta: Weight, retries: int = 40) -> Path:
    """Sample the segment from x to y as a path with steps of length <= delta.

    The segment is cut into pieces of length at most delta/2; an intermediate
    sample that falls on a region boundary is moved by at most delta/4 so that
    it lies strictly inside a region.  Consecutive samples therefore stay
    within delta of each other.
    """
    x, y = vector(x), vector(y)
    n = system.dimension
    for p in (x, y):
        if interior_region(system, p) is None:
            raise ValueError("path endpoints must be interior to a region")
    if x == y:
        return Path.through(system, [x])
    if delta == INF:
        return Path.through(system, [x, y])
    delta = Fraction(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    d = sub(y, x)
    k = _ceil_sqrt_ratio(4 * norm2(d), delta * delta)
    pts = [x]
    # max-norm bound r keeps the Euclidean offset below r*sqrt(n) <= delta/4
    radius = delta / (4 * _ceil_sqrt_ratio(Fraction(n), ONE))
    for s in range(1, k):
        p = axpy(x, Fraction(s, k), d)
        if interior_region(system, p) is None:
            p = _perturb(system, p, radius, retries)
        pts.append(p)
    pts.append(y)
    path = Path.through(system, pts)
    if not path.fine(delta):
        raise AssertionError("sampled path is not fine")
    return path


def _perturb(system: HybridSystem, p: Vector, radius: Fraction, retries: int) -> Vector:
    r = radius
    for _ in range(retries):
        for off in _offsets(len(p)):
            q = axpy(p, r, off)
            if interior_region(system, q) is not None:
                return q
        r /= 2
    raise PerturbationFailed(f"could not move {[format_rational(v) for v in p]} off the region boundaries")


def fine_path_through(system: HybridSystem, points: Sequence[Sequence], delta: Weight) -> Path:
    """Concatenate fine paths between consecutive waypoints."""
    pts, tags = [], []
    for a, b in zip(points, points[1:]):
        seg = sample_fine_path(system, a, b, delta)
        start = 1 if pts else 0
        pts.extend(seg.points[start:])
        tags.extend(seg.regions[start:])
    return Path(tuple(pts), tuple(tags))

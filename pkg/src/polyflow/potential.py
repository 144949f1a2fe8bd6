"""The convex piecewise-linear potential of a nonexpansive hybrid system, and back.

``Phi(x) = max_i (-mu_i.x + b_i)``: region ``i`` is exactly where piece ``i``
attains the max, and ``-dPhi(x)`` is the hull of the active drifts.
"""

from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .certify import INF, Certificate, ConservationViolated, WeightedAdjacency, certify_nonexpansive
from .numeric import ZERO, DimensionMismatch, Vector, dot, format_rational, sub, to_rational, vector
from .tiling import (
    FORMAT,
    HybridSystem,
    Polyhedron,
    Region,
    SchemaError,
    active_set,
    random_point,
    vertices,
)


class NotCertified(ValueError):
    """The system failed the nonexpansiveness certificate."""


class DisconnectedAdjacency(ValueError):
    pass


class MaximizerMismatch(AssertionError):
    def __init__(self, point: Vector, argmax: frozenset, active: frozenset):
        super().__init__(
            f"at {[format_rational(v) for v in point]}: maximizing pieces {sorted(argmax)} "
            f"but containing regions {sorted(active)}"
        )
        self.point = point
        self.argmax = argmax
        self.active = active


class AllPiecesPruned(ValueError):
    pass


class EmptyClass(ValueError):
    pass


@dataclass(frozen=True)
class PWLPotential:
    """Max of affine pieces ``-slope.x + offset``."""

    pieces: tuple  # ((slope, offset), ...)

    def __post_init__(self):
        pieces = tuple((vector(s), to_rational(b)) for s, b in self.pieces)
        if not pieces:
            raise ValueError("a potential needs at least one piece")
        n = len(pieces[0][0])
        if any(len(s) != n for s, _ in pieces):
            raise DimensionMismatch("pieces of different dimension")
        if len(set(pieces)) != len(pieces):
            raise ValueError("pieces must be pairwise distinct")
        object.__setattr__(self, "pieces", pieces)

    @property
    def dimension(self) -> int:
        return len(self.pieces[0][0])

    @property
    def slopes(self) -> list:
        return [s for s, _ in self.pieces]

    @property
    def offsets(self) -> list:
        return [b for _, b in self.pieces]

    def piece_values(self, x: Vector) -> list:
        return [b - dot(s, x) for s, b in self.pieces]

    def __call__(self, x: Sequence) -> Fraction:
        return max(self.piece_values(vector(x)))

    def to_json(self) -> dict:
        return {
            "format": FORMAT,
            "pieces": [
                {"slope": [format_rational(v) for v in s], "offset": format_rational(b)} for s, b in self.pieces
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "PWLPotential":
        try:
            fmt = data.get("format", FORMAT)
            if fmt != FORMAT:
                raise SchemaError(f"unsupported format {fmt!r}")
            return cls(tuple((p["slope"], p["offset"]) for p in data["pieces"]))
        except SchemaError:
            raise
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise SchemaError(f"invalid potential file: {exc}") from exc


def evaluate(potential: PWLPotential, x: Sequence) -> tuple:
    """``(Phi(x), argmax)`` with the full set of maximizing piece indices."""
    vals = potential.piece_values(vector(x))
    top = max(vals)
    return top, frozenset(i for i, v in enumerate(vals) if v == top)


@dataclass(frozen=True)
class Subdifferential:
    """``-dPhi(point) = Conv(generators)``."""

    point: Vector
    indices: frozenset
    generators: tuple


def subdifferential(potential: PWLPotential, x: Sequence) -> Subdifferential:
    x = vector(x)
    _, idx = evaluate(potential, x)
    return Subdifferential(x, idx, tuple(potential.slopes[i] for i in sorted(idx)))


def region_weights(system: HybridSystem, W: WeightedAdjacency, reference: int = 0) -> list:
    """Region offsets with ``b_ref = 0`` and ``b_i - b_j = b_ij`` on every adjacent pair.

    Offsets are propagated along a breadth-first spanning tree; every other
    ordered adjacent pair is then checked with zero tolerance.
    """
    m = len(system)
    b = [None] * m
    b[reference] = ZERO
    tree = set()
    queue = deque([reference])
    while queue:
        i = queue.popleft()
        for j in W.neighbours(i):
            if b[j] is None:
                w = W(i, j)
                if w == INF:
                    raise ValueError(f"weight b_{i}{j} is infinite")
                b[j] = b[i] - w
                tree.add((i, j))
                queue.append(j)
    missing = [system.regions[k].name for k in range(m) if b[k] is None]
    if missing:
        raise DisconnectedAdjacency(f"regions {missing} are not connected to the reference region")
    for i, j in sorted(W.pairs):
        for a, c in ((i, j), (j, i)):
            if (a, c) in tree:
                continue
            w = W(a, c)
            if w == INF:
                raise ValueError(f"weight b_{a}{c} is infinite")
            res = b[a] - b[c] - w
            if res != 0:
                raise ConservationViolated((a, c), res, "edge")
    return b


def build_potential(system: HybridSystem, certificate: Optional[Certificate] = None,
                    reference: int = 0, weights: Optional[WeightedAdjacency] = None) -> PWLPotential:
    """Pieces ``(mu_i, b_i)`` of the potential whose negative subgradient flow is ``system``.

    ``weights`` overrides the certificate's weights (used for fault injection).
    """
    if certificate is None:
        certificate = certify_nonexpansive(system)
    if not certificate.nonexpansive:
        raise NotCertified("system is not nonexpansive")
    W = weights if weights is not None else certificate.weights
    b = region_weights(system, W, reference)
    return PWLPotential(tuple(zip(system.drifts, b)))


@dataclass
class MaximizerCheck:
    point: Vector
    region: Optional[int]  # region whose vertex / interior witness this is; None for random samples
    kind: str  # "vertex", "interior", "sample"
    indices: frozenset


def verify_maximizers(system: HybridSystem, potential: PWLPotential, samples: int = 1000,
                  seed: int = 0, box: Fraction = Fraction(10)) -> list:
    """Check that the maximizing pieces coincide with the containing regions.

    Tested at every region vertex, one interior point per region (where the
    maximizer must also be unique) and ``samples`` seeded random points on a
    coarse grid, which lands on region boundaries often.
    """
    if len(potential.pieces) != len(system):
        raise ValueError("potential and system have different numbers of pieces")
    checks = []

    def check(x, region, kind):
        _, argmax = evaluate(potential, x)
        active = active_set(system, x).indices
        if argmax != active:
            raise MaximizerMismatch(x, argmax, active)
        checks.append(MaximizerCheck(x, region, kind, argmax))

    for k, r in enumerate(system.regions):
        for v in vertices(r.poly):
            check(v, k, "vertex")
        w = r.poly.interior_point()
        if w is None:
            raise ValueError(f"region {r.name!r} has empty interior")
        check(w, k, "interior")
        if checks[-1].indices != frozenset({k}):
            raise MaximizerMismatch(w, checks[-1].indices, frozenset({k}))
    rng = random.Random(seed)
    for _ in range(samples):
        check(random_point(rng, system.dimension, to_rational(box), denom=4), None, "sample")
    return checks


def piece_region(potential: PWLPotential, i: int) -> Optional[Polyhedron]:
    """``{x : piece i attains the max}``, or None if that set is empty for a trivial reason."""
    s_i, b_i = potential.pieces[i]
    rows, rhs = [], []
    for j, (s_j, b_j) in enumerate(potential.pieces):
        if j == i:
            continue
        row = sub(s_i, s_j)
        if all(a == 0 for a in row):
            if b_i - b_j < 0:
                return None
            continue
        rows.append(row)
        rhs.append(b_i - b_j)
    return Polyhedron(tuple(rows), tuple(rhs), potential.dimension)


def potential_to_hybrid(potential: PWLPotential, names: Optional[Sequence[str]] = None) -> HybridSystem:
    """The polyhedral hybrid system of an FPCS potential.

    Pieces whose region has empty interior never matter and are pruned.
    """
    regions = []
    for i in range(len(potential.pieces)):
        poly = piece_region(potential, i)
        if poly is None or poly.interior_point() is None:
            continue
        name = names[i] if names is not None else f"D{i + 1}"
        regions.append(Region(name, poly, potential.slopes[i]))
    if not regions:
        raise AllPiecesPruned("no piece has a full-dimensional region")
    drifts = [r.drift for r in regions]
    if len(set(drifts)) != len(drifts):
        raise AssertionError("surviving pieces share a slope")
    return HybridSystem(potential.dimension, tuple(regions))


def same_regions(a: HybridSystem, b: HybridSystem) -> bool:
    """Equal drifts in order and mutually included regions (exact LPs)."""
    if a.dimension != b.dimension or len(a) != len(b):
        return False
    for ra, rb in zip(a.regions, b.regions):
        if ra.drift != rb.drift:
            return False
        if not (ra.poly.contained_in(rb.poly) and rb.poly.contained_in(ra.poly)):
            return False
    return True


@dataclass
class CanonicalTiling:
    polyhedra: list
    d: dict  # (i, j) -> min over class-j samples of (mu_i - mu_j).x
    violations: list = field(default_factory=list)  # ((i, j), d_ij + d_ji) with a negative sum


def canonical_tiling(drifts: Sequence[Sequence], samples: dict) -> CanonicalTiling:
    """Outer approximations ``P_i`` of the regions from labelled sample points.

    ``samples`` maps class index to a list of points.  Each ``d_ij`` is a
    sample minimum, so it over-estimates the infimum over the true region and
    ``P_i`` shrinks towards ``D_i`` as samples are added.  Negative
    ``d_ij + d_ji`` is evidence that the field is not monotone.
    """
    mus = [vector(m) for m in drifts]
    if len(set(mus)) != len(mus):
        raise ValueError("drifts must be distinct")
    n = len(mus[0])
    pts = {}
    for k in range(len(mus)):
        cls = [vector(p) for p in samples.get(k, ())]
        if not cls:
            raise EmptyClass(f"class {k} has no samples")
        pts[k] = cls
    d = {}
    for i, j in itertools.permutations(range(len(mus)), 2):
        c = sub(mus[i], mus[j])
        d[(i, j)] = min(dot(c, x) for x in pts[j])
    polys = []
    for i in range(len(mus)):
        rows = [sub(mus[i], mus[j]) for j in range(len(mus)) if j != i]
        rhs = [d[(i, j)] for j in range(len(mus)) if j != i]
        polys.append(Polyhedron.from_rows(rows, rhs, n))
    violations = []
    for i, j in itertools.combinations(range(len(mus)), 2):
        s = d[(i, j)] + d[(j, i)]
        if s < 0:
            violations.append(((i, j), s))
    return CanonicalTiling(polys, d, violations)

"""Polyhedral tilings with constant drifts: the system model and its checks."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .numeric import (
    ONE,
    ZERO,
    DimensionMismatch,
    LPStatus,
    Matrix,
    Vector,
    dot,
    feasible,
    format_rational,
    interior_witness,
    matrix,
    solve_linear,
    solve_lp,
    to_rational,
    vector,
)

FORMAT = "polyflow/1"

# outward step used to probe just beyond each facet during the coverage check
PROBE_STEP = Fraction(1, 1024)


class UncoveredPoint(ValueError):
    def __init__(self, point: Vector):
        super().__init__(f"point {_fmt_point(point)} lies in no region")
        self.point = point


class SchemaError(ValueError):
    """Malformed JSON input."""


def _fmt_point(x: Sequence[Fraction]) -> str:
    return "(" + ", ".join(format_rational(v) for v in x) + ")"


@dataclass(frozen=True)
class Polyhedron:
    """``{x : A x <= b}`` in dimension ``dim``.

    All-zero rows with ``b >= 0`` are dropped on construction; an all-zero row
    with ``b < 0`` would make the set empty and is rejected.
    """

    A: Matrix
    b: Vector
    dim: int

    @classmethod
    def from_rows(cls, A, b, dim: Optional[int] = None) -> "Polyhedron":
        A = matrix(A)
        b = vector(b)
        if len(A) != len(b):
            raise DimensionMismatch(f"{len(A)} rows but {len(b)} right-hand sides")
        if dim is None:
            if not A:
                raise DimensionMismatch("dimension required for a polyhedron without rows")
            dim = len(A[0])
        if dim < 1:
            raise ValueError("dimension must be positive")
        rows, rhs = [], []
        for row, bi in zip(A, b):
            if len(row) != dim:
                raise DimensionMismatch(f"row of length {len(row)} in dimension {dim}")
            if all(a == 0 for a in row):
                if bi < 0:
                    raise ValueError("all-zero constraint row with negative right-hand side")
                continue
            rows.append(row)
            rhs.append(bi)
        return cls(tuple(rows), tuple(rhs), dim)

    @classmethod
    def whole_space(cls, dim: int) -> "Polyhedron":
        return cls((), (), dim)

    def __len__(self) -> int:
        return len(self.A)

    def contains(self, x: Vector) -> bool:
        return all(dot(row, x) <= bi for row, bi in zip(self.A, self.b))

    def contains_strictly(self, x: Vector) -> bool:
        return all(dot(row, x) < bi for row, bi in zip(self.A, self.b))

    def intersect(self, *others: "Polyhedron") -> "Polyhedron":
        A, b = list(self.A), list(self.b)
        for o in others:
            if o.dim != self.dim:
                raise DimensionMismatch(f"dimension {self.dim} vs {o.dim}")
            A.extend(o.A)
            b.extend(o.b)
        return Polyhedron(tuple(A), tuple(b), self.dim)

    def is_feasible(self) -> bool:
        return bool(feasible(self.A, self.b, self.dim))

    def interior_point(self) -> Optional[Vector]:
        return interior_witness(self.A, self.b, self.dim).point

    def contained_in(self, other: "Polyhedron") -> bool:
        """Exact LP test of ``self ⊆ other`` (self assumed nonempty)."""
        for row, bi in zip(other.A, other.b):
            out = solve_lp(row, self.A, self.b, "max")
            if out.status is LPStatus.UNBOUNDED:
                return False
            if out.status is LPStatus.OPTIMAL and out.optimal_value > bi:
                return False
        return True


def vertices(poly: Polyhedron) -> list:
    """All vertices (basic feasible points) of ``poly``, in lexicographic order.

    Polyhedra containing a line have none.
    """
    n = poly.dim
    found = set()
    for rows in itertools.combinations(range(len(poly.A)), n):
        x = solve_linear([poly.A[r] for r in rows], [poly.b[r] for r in rows])
        if x is not None and poly.contains(x):
            found.add(x)
    return sorted(found)


@dataclass(frozen=True)
class Region:
    name: str
    poly: Polyhedron
    drift: Vector


@dataclass(frozen=True)
class HybridSystem:
    """Regions of a polyhedral tiling of R^n, each with a constant drift.

    Indices are positions in ``regions`` (0-based) and follow file order.
    """

    dimension: int
    regions: tuple

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        for r in self.regions:
            if r.poly.dim != self.dimension or len(r.drift) != self.dimension:
                raise DimensionMismatch(f"region {r.name!r} does not live in dimension {self.dimension}")

    def __len__(self) -> int:
        return len(self.regions)

    @property
    def drifts(self) -> list:
        return [r.drift for r in self.regions]

    @property
    def names(self) -> list:
        return [r.name for r in self.regions]

    @classmethod
    def build(cls, dimension: int, specs) -> "HybridSystem":
        """``specs``: iterable of ``(name, A, b, drift)`` with rational-like entries."""
        regions = []
        for name, A, b, drift in specs:
            regions.append(Region(name, Polyhedron.from_rows(A, b, dimension), vector(drift)))
        return cls(dimension, tuple(regions))

    def to_json(self) -> dict:
        return {
            "format": FORMAT,
            "dimension": self.dimension,
            "regions": [
                {
                    "name": r.name,
                    "A": [[format_rational(a) for a in row] for row in r.poly.A],
                    "b": [format_rational(v) for v in r.poly.b],
                    "drift": [format_rational(v) for v in r.drift],
                }
                for r in self.regions
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "HybridSystem":
        try:
            fmt = data.get("format", FORMAT)
            if fmt != FORMAT:
                raise SchemaError(f"unsupported format {fmt!r}")
            n = data["dimension"]
            if not isinstance(n, int) or n < 1:
                raise SchemaError("dimension must be a positive integer")
            specs = []
            for entry in data["regions"]:
                specs.append((str(entry["name"]), entry.get("A", []), entry.get("b", []), entry["drift"]))
            if not specs:
                raise SchemaError("a system needs at least one region")
            return cls.build(n, specs)
        except SchemaError:
            raise
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise SchemaError(f"invalid system file: {exc}") from exc


@dataclass(frozen=True)
class ActiveSet:
    point: Vector
    indices: frozenset


def active_set(system: HybridSystem, x: Sequence) -> ActiveSet:
    x = vector(x)
    if len(x) != system.dimension:
        raise DimensionMismatch(f"point of length {len(x)} in dimension {system.dimension}")
    idx = frozenset(i for i, r in enumerate(system.regions) if r.poly.contains(x))
    if not idx:
        raise UncoveredPoint(x)
    return ActiveSet(x, idx)


def adjacency(system: HybridSystem) -> frozenset:
    """Pairs ``(i, j)``, ``i < j``, whose regions intersect."""
    pairs = set()
    for i, j in itertools.combinations(range(len(system)), 2):
        if system.regions[i].poly.intersect(system.regions[j].poly).is_feasible():
            pairs.add((i, j))
    return frozenset(pairs)


def random_point(rng: random.Random, dim: int, box: Fraction, denom: int = 4096) -> Vector:
    lim = int(box * denom)
    return tuple(Fraction(rng.randint(-lim, lim), denom) for _ in range(dim))


@dataclass
class ValidationReport:
    valid: bool
    interior_witnesses: dict = field(default_factory=dict)
    empty_interiors: list = field(default_factory=list)
    overlaps: list = field(default_factory=list)
    duplicate_drifts: list = field(default_factory=list)
    duplicate_names: list = field(default_factory=list)
    uncovered: Optional[Vector] = None
    coverage: str = ""
    probes: int = 0
    problems: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "format": FORMAT,
            "valid": self.valid,
            "interior_witnesses": {k: [format_rational(v) for v in p] for k, p in self.interior_witnesses.items()},
            "empty_interiors": self.empty_interiors,
            "overlaps": [
                {"regions": [a, b], "witness": [format_rational(v) for v in p]} for a, b, p in self.overlaps
            ],
            "duplicate_drifts": [list(p) for p in self.duplicate_drifts],
            "duplicate_names": self.duplicate_names,
            "coverage": self.coverage,
            "uncovered_witness": None if self.uncovered is None else [format_rational(v) for v in self.uncovered],
            "probes": self.probes,
            "problems": self.problems,
        }


def _facet_points(poly: Polyhedron) -> list:
    """A relative-interior point of each facet, paired with the facet row."""
    n = poly.dim
    out = []
    for k, (row, bk) in enumerate(zip(poly.A, poly.b)):
        A, b = [], []
        for i, (r, bi) in enumerate(zip(poly.A, poly.b)):
            if i != k:
                A.append(r + (ONE,))
                b.append(bi)
        A += [row + (ZERO,), tuple(-a for a in row) + (ZERO,), (ZERO,) * n + (ONE,)]
        b += [bk, -bk, ONE]
        res = solve_lp((ZERO,) * n + (ONE,), A, b, "max")
        if res.status is LPStatus.OPTIMAL and res.optimal_value > 0:
            out.append((row, res.optimal_point[:n]))
    return out


def coverage_probes(system: HybridSystem, samples: int, box: Fraction, seed: int) -> list:
    """Deterministic probes near the tiling's skeleton followed by seeded random points."""
    n = system.dimension
    probes = []
    for r in system.regions:
        for v in vertices(r.poly):
            probes.append(v)
            for k in range(n):
                for s in (PROBE_STEP, -PROBE_STEP):
                    probes.append(tuple(c + (s if i == k else ZERO) for i, c in enumerate(v)))
        for row, p in _facet_points(r.poly):
            probes.append(p)
            nrm = sum((abs(a) for a in row), ZERO)
            probes.append(tuple(c + PROBE_STEP * a / nrm for c, a in zip(p, row)))
    rng = random.Random(seed)
    for _ in range(samples):
        probes.append(random_point(rng, n, box))
    return probes


def validate(system: HybridSystem, samples: int = 10_000, box: Fraction = Fraction(100), seed: int = 0) -> ValidationReport:
    """Check the tiling axioms and distinctness of drifts.

    Coverage of R^n is only probed (facet neighbourhoods, vertices, and
    ``samples`` random points in ``[-box, box]^n``); a pass is reported as
    ``"covered (probabilistic)"``.
    """
    report = ValidationReport(valid=True)
    regions = system.regions
    m = len(regions)

    seen = {}
    for r in regions:
        if r.name in seen:
            report.duplicate_names.append(r.name)
        seen[r.name] = True
    if report.duplicate_names:
        report.problems.append(f"duplicate region names: {report.duplicate_names}")

    for r in regions:
        w = interior_witness(r.poly.A, r.poly.b, system.dimension)
        if w:
            report.interior_witnesses[r.name] = w.point
        else:
            report.empty_interiors.append(r.name)
            report.problems.append(f"region {r.name!r} has empty interior")

    for i, j in itertools.combinations(range(m), 2):
        both = regions[i].poly.intersect(regions[j].poly)
        w = interior_witness(both.A, both.b, system.dimension)
        if w:
            report.overlaps.append((regions[i].name, regions[j].name, w.point))
            report.problems.append(f"interiors of {regions[i].name!r} and {regions[j].name!r} overlap")
        if regions[i].drift == regions[j].drift:
            report.duplicate_drifts.append((regions[i].name, regions[j].name))
            report.problems.append(f"drifts not distinct: {regions[i].name!r} and {regions[j].name!r}")

    probes = coverage_probes(system, samples, to_rational(box), seed)
    report.probes = len(probes)
    for p in probes:
        if not any(r.poly.contains(p) for r in regions):
            report.uncovered = p
            report.coverage = "gap"
            report.problems.append(f"coverage gap at {_fmt_point(p)}")
            break
    else:
        report.coverage = "covered (probabilistic)"

    report.valid = not report.problems
    return report

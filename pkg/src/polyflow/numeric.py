"""Exact rational linear algebra and a dense simplex LP solver.

Scalars are :class:`fractions.Fraction` (always in lowest terms); vectors and
matrices are plain tuples of them.  Nothing in this module rounds.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

Rational = Fraction
Vector = tuple  # tuple[Fraction, ...]
Matrix = tuple  # tuple[Vector, ...]

RationalLike = Union[int, str, Fraction]

ZERO = Fraction(0)
ONE = Fraction(1)


class DimensionMismatch(ValueError):
    """Operands whose shapes do not agree."""


def to_rational(value: RationalLike) -> Fraction:
    """Convert ``value`` exactly.

    Accepts ints, Fractions and strings like ``"3"``, ``"-2/7"`` or ``"0.25"``.
    Floats are converted through their shortest repr, so ``0.1`` becomes 1/10.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


def format_rational(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def vector(values: Iterable[RationalLike]) -> Vector:
    return tuple(to_rational(v) for v in values)


def matrix(rows: Iterable[Iterable[RationalLike]], ncols: Optional[int] = None) -> Matrix:
    out = tuple(vector(r) for r in rows)
    widths = {len(r) for r in out}
    if ncols is not None:
        widths.add(ncols)
    if len(widths) > 1:
        raise DimensionMismatch(f"ragged matrix, row widths {sorted(widths)}")
    return out


def zeros(n: int) -> Vector:
    return (ZERO,) * n


def _check(u: Sequence, v: Sequence) -> None:
    if len(u) != len(v):
        raise DimensionMismatch(f"length {len(u)} vs {len(v)}")


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    _check(u, v)
    return sum((a * b for a, b in zip(u, v)), ZERO)


def add(u: Vector, v: Vector) -> Vector:
    _check(u, v)
    return tuple(a + b for a, b in zip(u, v))


def sub(u: Vector, v: Vector) -> Vector:
    _check(u, v)
    return tuple(a - b for a, b in zip(u, v))


def scale(c: Fraction, u: Vector) -> Vector:
    return tuple(c * a for a in u)


def axpy(x: Vector, t: Fraction, v: Vector) -> Vector:
    """``x + t*v``."""
    _check(x, v)
    return tuple(a + t * b for a, b in zip(x, v))


def norm2(u: Vector) -> Fraction:
    """Squared Euclidean norm."""
    return sum((a * a for a in u), ZERO)


def matvec(A: Matrix, x: Vector) -> Vector:
    return tuple(dot(row, x) for row in A)


def combination(weights: Sequence[Fraction], vectors: Sequence[Vector], n: int) -> Vector:
    _check(weights, vectors)
    out = [ZERO] * n
    for w, v in zip(weights, vectors):
        if w:
            for k in range(n):
                out[k] += w * v[k]
    return tuple(out)


def solve_linear(M: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> Optional[Vector]:
    """Solve the square system ``M x = rhs`` by Gauss-Jordan elimination.

    Returns None when ``M`` is singular.
    """
    n = len(M)
    _check(M, rhs)
    aug = [list(row) + [r] for row, r in zip(M, rhs)]
    for row in aug:
        if len(row) != n + 1:
            raise DimensionMismatch("solve_linear needs a square matrix")
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        if p != 1:
            aug[col] = [a / p for a in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return tuple(row[n] for row in aug)


def rank(rows: Sequence[Sequence[Fraction]]) -> int:
    work = [list(r) for r in rows]
    if not work:
        return 0
    ncols = len(work[0])
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(work)) if work[i][c] != 0), None)
        if piv is None:
            continue
        work[r], work[piv] = work[piv], work[r]
        for i in range(r + 1, len(work)):
            if work[i][c] != 0:
                f = work[i][c] / work[r][c]
                work[i] = [a - f * b for a, b in zip(work[i], work[r])]
        r += 1
        if r == len(work):
            break
    return r


# --------------------------------------------------------------------------
# Linear programming
# --------------------------------------------------------------------------


class LPStatus(enum.Enum):
    OPTIMAL = "optimal"
    UNBOUNDED = "unbounded"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class LPOutcome:
    """Result of :func:`solve_lp` for the problem ``opt c.x s.t. A x <= b``.

    Exactly one payload is set according to ``status``.  For OPTIMAL results
    ``dual`` holds multipliers ``y >= 0`` of the maximization form: with
    ``s = +1`` for max and ``-1`` for min, ``A^T y = s*c`` and
    ``b.y = s*optimal_value``.
    """

    status: LPStatus
    optimal_point: Optional[Vector] = None
    optimal_value: Optional[Fraction] = None
    ray: Optional[Vector] = None
    infeasibility_certificate: Optional[Vector] = None
    dual: Optional[Vector] = None

    @property
    def is_optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL


class _Tableau:
    """Dense simplex tableau over the sign-normalized standard form.

    Column layout: ``x+`` (n), ``x-`` (n), slacks (m), artificials (one per
    row whose right-hand side was negative).
    """

    def __init__(self, A: Matrix, b: Vector, n: int):
        m = len(A)
        self.n, self.m = n, m
        self.sign = [ONE if bi >= 0 else -ONE for bi in b]
        art_rows = [i for i in range(m) if b[i] < 0]
        self.first_art = 2 * n + m
        self.ncols = self.first_art + len(art_rows)
        self.rows = []
        self.rhs = []
        self.basis = []
        self.init_col = []
        art_of_row = {i: self.first_art + k for k, i in enumerate(art_rows)}
        for i in range(m):
            s = self.sign[i]
            row = [ZERO] * self.ncols
            for j in range(n):
                row[j] = s * A[i][j]
                row[n + j] = -s * A[i][j]
            row[2 * n + i] = s
            if i in art_of_row:
                row[art_of_row[i]] = ONE
                self.basis.append(art_of_row[i])
            else:
                self.basis.append(2 * n + i)
            self.init_col.append(self.basis[-1])
            self.rows.append(row)
            self.rhs.append(s * b[i])

    def is_artificial(self, j: int) -> bool:
        return j >= self.first_art

    def pivot(self, r: int, c: int) -> None:
        prow = self.rows[r]
        p = prow[c]
        if p != 1:
            prow = [a / p for a in prow]
            self.rows[r] = prow
            self.rhs[r] /= p
        for i in range(self.m):
            if i == r:
                continue
            f = self.rows[i][c]
            if f != 0:
                row = self.rows[i]
                self.rows[i] = [a - f * q if q else a for a, q in zip(row, prow)]
                self.rhs[i] -= f * self.rhs[r]
        self.basis[r] = c

    def duals(self, cost: Sequence[Fraction]) -> list:
        """``pi = c_B B^{-1}`` read off the initial-basis columns."""
        pi = []
        for i in range(self.m):
            col = self.init_col[i]
            pi.append(sum((cost[self.basis[r]] * self.rows[r][col] for r in range(self.m)), ZERO))
        return pi

    def run(self, cost: Sequence[Fraction], allow_artificial: bool) -> Optional[int]:
        """Maximize ``cost.u`` with Bland's rule.

        Returns None at optimality, or the entering column of an unbounded
        direction.
        """
        while True:
            cb = [cost[j] for j in self.basis]
            basic = set(self.basis)
            entering = None
            for j in range(self.ncols):
                if j in basic or (not allow_artificial and self.is_artificial(j)):
                    continue
                d = cost[j] - sum((cb[r] * self.rows[r][j] for r in range(self.m) if self.rows[r][j]), ZERO)
                if d > 0:
                    entering = j
                    break
            if entering is None:
                return None
            leave = None
            best = None
            for r in range(self.m):
                a = self.rows[r][entering]
                if a > 0:
                    ratio = self.rhs[r] / a
                    if best is None or ratio < best or (ratio == best and self.basis[r] < self.basis[leave]):
                        best, leave = ratio, r
            if leave is None:
                return entering
            self.pivot(leave, entering)

    def value_of(self) -> list:
        u = [ZERO] * self.ncols
        for r, j in enumerate(self.basis):
            u[j] = self.rhs[r]
        return u

    def x_from(self, u: Sequence[Fraction]) -> Vector:
        n = self.n
        return tuple(u[j] - u[n + j] for j in range(n))


def _validate_lp(c: Vector, A: Matrix, b: Vector) -> int:
    n = len(c)
    if len(A) != len(b):
        raise DimensionMismatch(f"A has {len(A)} rows but b has {len(b)} entries")
    for row in A:
        if len(row) != n:
            raise DimensionMismatch(f"constraint row of length {len(row)}, objective has {n}")
    return n


def solve_lp(objective: Sequence[RationalLike], constraints_A: Sequence[Sequence[RationalLike]],
             constraints_b: Sequence[RationalLike], sense: str = "max") -> LPOutcome:
    """Solve ``max`` (or ``min``) ``objective.x`` subject to ``A x <= b``, x free.

    Two-phase dense simplex with Bland's pivot rule; every quantity is exact.
    The returned point, ray, certificate and dual multipliers are re-checked
    against the input before returning.
    """
    if sense not in ("max", "min"):
        raise ValueError(f"sense must be 'max' or 'min', got {sense!r}")
    c = vector(objective)
    A = matrix(constraints_A)
    b = vector(constraints_b)
    n = _validate_lp(c, A, b)
    s = ONE if sense == "max" else -ONE
    cmax = scale(s, c)

    tab = _Tableau(A, b, n)
    if tab.ncols > tab.first_art:
        phase1 = [ZERO] * tab.ncols
        for j in range(tab.first_art, tab.ncols):
            phase1[j] = -ONE
        tab.run(phase1, allow_artificial=True)
        u = tab.value_of()
        infeas = sum((u[j] for j in range(tab.first_art, tab.ncols)), ZERO)
        if infeas > 0:
            pi = tab.duals(phase1)
            y = tuple(tab.sign[i] * pi[i] for i in range(tab.m))
            _check_certificate(A, b, y, n)
            return LPOutcome(LPStatus.INFEASIBLE, infeasibility_certificate=y)
        for r in range(tab.m):
            if tab.is_artificial(tab.basis[r]):
                j = next((j for j in range(tab.first_art) if tab.rows[r][j] != 0), None)
                if j is not None:
                    tab.pivot(r, j)

    cost = [ZERO] * tab.ncols
    for j in range(n):
        cost[j] = cmax[j]
        cost[n + j] = -cmax[j]
    entering = tab.run(cost, allow_artificial=False)
    u = tab.value_of()
    x = tab.x_from(u)
    if entering is not None:
        d = [ZERO] * tab.ncols
        d[entering] = ONE
        for r, j in enumerate(tab.basis):
            d[j] -= tab.rows[r][entering]
        ray = tab.x_from(d)
        if any(dot(row, ray) > 0 for row in A) or dot(cmax, ray) <= 0:
            raise RuntimeError("simplex produced an invalid recession ray")
        return LPOutcome(LPStatus.UNBOUNDED, ray=ray)

    value = dot(c, x)
    pi = tab.duals(cost)
    y = tuple(tab.sign[i] * pi[i] for i in range(tab.m))
    if any(dot(row, x) > bi for row, bi in zip(A, b)):
        raise RuntimeError("simplex optimum violates a constraint")
    if any(yi < 0 for yi in y) or dot(b, y) != s * value:
        raise RuntimeError("dual multipliers fail the duality check")
    for j in range(n):
        if sum((A[i][j] * y[i] for i in range(len(A))), ZERO) != cmax[j]:
            raise RuntimeError("dual multipliers are not dual feasible")
    return LPOutcome(LPStatus.OPTIMAL, optimal_point=x, optimal_value=value, dual=y)


def _check_certificate(A: Matrix, b: Vector, y: Vector, n: int) -> None:
    if any(yi < 0 for yi in y) or dot(y, b) >= 0:
        raise RuntimeError("invalid Farkas certificate")
    for j in range(n):
        if sum((A[i][j] * y[i] for i in range(len(A))), ZERO) != 0:
            raise RuntimeError("invalid Farkas certificate")


@dataclass(frozen=True)
class Feasibility:
    """Either a point satisfying ``A x <= b`` or a Farkas certificate."""

    point: Optional[Vector] = None
    certificate: Optional[Vector] = None

    def __bool__(self) -> bool:
        return self.point is not None


def _infer_dim(A: Sequence[Sequence], dim: Optional[int]) -> int:
    if dim is not None:
        return dim
    if not A:
        raise DimensionMismatch("cannot infer dimension from an empty constraint list; pass dim")
    return len(A[0])


def feasible(constraints_A: Sequence[Sequence[RationalLike]], constraints_b: Sequence[RationalLike],
             dim: Optional[int] = None) -> Feasibility:
    n = _infer_dim(constraints_A, dim)
    out = solve_lp(zeros(n), constraints_A, constraints_b, "max")
    if out.status is LPStatus.INFEASIBLE:
        return Feasibility(certificate=out.infeasibility_certificate)
    return Feasibility(point=out.optimal_point)


@dataclass(frozen=True)
class InteriorWitness:
    """``point`` is strictly inside the polyhedron, or None if the interior is empty.

    ``margin`` is the optimal slack t* (capped at 1); None when infeasible.
    """

    point: Optional[Vector]
    margin: Optional[Fraction]

    def __bool__(self) -> bool:
        return self.point is not None


def interior_witness(constraints_A: Sequence[Sequence[RationalLike]], constraints_b: Sequence[RationalLike],
                     dim: Optional[int] = None) -> InteriorWitness:
    """Maximize t subject to ``A x + t <= b`` and ``t <= 1``."""
    A = matrix(constraints_A)
    b = vector(constraints_b)
    n = _infer_dim(A, dim)
    if len(A) != len(b):
        raise DimensionMismatch(f"A has {len(A)} rows but b has {len(b)} entries")
    rows, rhs = [], []
    for row, bi in zip(A, b):
        if len(row) != n:
            raise DimensionMismatch(f"constraint row of length {len(row)}, expected {n}")
        if all(a == 0 for a in row):
            # 0 <= b_i never touches the interior; it either holds everywhere or nowhere
            if bi < 0:
                return InteriorWitness(None, None)
            continue
        rows.append(row + (ONE,))
        rhs.append(bi)
    rows.append(zeros(n) + (ONE,))
    rhs.append(ONE)
    out = solve_lp(zeros(n) + (ONE,), rows, rhs, "max")
    if out.status is LPStatus.INFEASIBLE:
        return InteriorWitness(None, None)
    t = out.optimal_value
    if t > 0:
        return InteriorWitness(out.optimal_point[:n], t)
    return InteriorWitness(None, t)

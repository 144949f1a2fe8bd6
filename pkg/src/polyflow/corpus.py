"""Small named systems used by the tests, scripts and docs."""

from __future__ import annotations

import random
from fractions import Fraction

from .potential import PWLPotential, potential_to_hybrid
from .tiling import HybridSystem


def h1() -> HybridSystem:
    """Drift +1 left of the origin, -1 right of it: the flow of |x|."""
    return HybridSystem.build(1, [("D1", [[1]], [0], [1]), ("D2", [[-1]], [0], [-1])])


def h2() -> HybridSystem:
    """Two queues served longest-first, idle when both are nonpositive."""
    return HybridSystem.build(2, [
        ("D1", [[-1, 1], [-1, 0]], [0, 0], [-1, 0]),
        ("D2", [[1, -1], [0, -1]], [0, 0], [0, -1]),
        ("D3", [[1, 0], [0, 1]], [0, 0], [0, 0]),
    ])


def h3() -> HybridSystem:
    """Quadrants with a rotating drift; not nonexpansive."""
    return HybridSystem.build(2, [
        ("Q1", [[-1, 0], [0, -1]], [0, 0], [-1, 1]),
        ("Q2", [[1, 0], [0, -1]], [0, 0], [-1, -1]),
        ("Q3", [[1, 0], [0, 1]], [0, 0], [1, -1]),
        ("Q4", [[-1, 0], [0, 1]], [0, 0], [1, 1]),
    ])


def three_intervals() -> HybridSystem:
    """(-inf, 0], [0, 1], [1, inf) with drifts 1, 0, -1."""
    return HybridSystem.build(1, [
        ("D1", [[1]], [0], [1]),
        ("D2", [[1], [-1]], [1, 0], [0]),
        ("D3", [[-1]], [-1], [-1]),
    ])


def _from_pieces(pieces, names=None) -> HybridSystem:
    return potential_to_hybrid(PWLPotential(tuple(pieces)), names)


def l1_norm(n: int) -> HybridSystem:
    """Orthants with drift -sign(x): the flow of the l1 norm."""
    import itertools

    pieces = []
    for signs in itertools.product((1, -1), repeat=n):
        pieces.append((tuple(-s for s in signs), 0))
    return _from_pieces(pieces)


def max_norm_2d() -> HybridSystem:
    """Four cones around the axes: the flow of max(|x1|, |x2|)."""
    return _from_pieces([((-1, 0), 0), ((1, 0), 0), ((0, -1), 0), ((0, 1), 0)])


def box_2d() -> HybridSystem:
    """A bounded square of equilibria surrounded by four outward regions."""
    return _from_pieces([((0, 0), 0), ((-1, 0), -1), ((1, 0), -1), ((0, -1), -1), ((0, 1), -1)])


def random_potential_system(seed: int, n: int = 2, pieces: int = 6) -> HybridSystem:
    """Regions of a random max-of-affine potential with small integer slopes."""
    rng = random.Random(seed)
    chosen = {}
    while len(chosen) < pieces:
        slope = tuple(rng.randint(-3, 3) for _ in range(n))
        if slope not in chosen:
            chosen[slope] = Fraction(rng.randint(-4, 4), rng.randint(1, 2))
    return _from_pieces(list(chosen.items()))


def certified_corpus() -> dict:
    return {
        "H1": h1(),
        "H2": h2(),
        "three_intervals": three_intervals(),
        "l1_2d": l1_norm(2),
        "max_norm_2d": max_norm_2d(),
        "box_2d": box_2d(),
        "l1_3d": l1_norm(3),
        "random_2d": random_potential_system(7),
    }

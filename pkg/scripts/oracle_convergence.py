"""Proximal (implicit Euler) grid versus the exact trajectory, for shrinking steps.

Prints one row per (system, initial state, h) with the max grid error and the
ratio to the previous step size.
"""

import argparse
import random
from fractions import Fraction

from polyflow.corpus import certified_corpus
from polyflow.flow import oracle_error, proximal_trajectory, simulate
from polyflow.potential import build_potential
from polyflow.tiling import random_point


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--starts", type=int, default=3)
    ap.add_argument("--horizon", type=Fraction, default=Fraction(4))
    ap.add_argument("--systems", nargs="*", default=["H1", "H2", "box_2d", "random_2d"])
    args = ap.parse_args()

    corpus = certified_corpus()
    rng = random.Random(args.seed)
    print("system,x0,h,max_error,ratio")
    for name in args.systems:
        s = corpus[name]
        P = build_potential(s)
        for _ in range(args.starts):
            x0 = random_point(rng, s.dimension, Fraction(3), 7)
            tr = simulate(s, x0, args.horizon)
            prev = None
            for k in range(2, 7):
                h = Fraction(1, 2**k)
                grid = [(t, z) for t, z in proximal_trajectory(P, x0, args.horizon, h) if t <= tr.end_time]
                err = oracle_error(tr, grid)
                ratio = "" if prev in (None, 0.0) else f"{err / prev:.3f}"
                print(f"{name},{' '.join(str(v) for v in x0)},{h},{err:.6g},{ratio}")
                prev = err


if __name__ == "__main__":
    main()

"""Non-monotone rotation field: the certifier's witness, and two naive trajectories
whose distance grows.  Writes plot-ready CSVs next to --out."""

import argparse
import json
from pathlib import Path

from polyflow.certify import certify_nonexpansive
from polyflow.corpus import h3
from polyflow.flow import check_nonexpansive_trajectories, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--horizon", default="8")
    ap.add_argument("--out", default="out/rotation")
    args = ap.parse_args()

    s = h3()
    cert = certify_nonexpansive(s)
    print(json.dumps(cert.to_json(s)["witness"], indent=2))

    a = simulate(s, (1, 0), args.horizon, unsafe=True)
    b = simulate(s, (0, 1), args.horizon, unsafe=True)
    rep = check_nonexpansive_trajectories(a, b)
    print(json.dumps(rep.to_json(), indent=2))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "traj_a.csv").write_text(a.to_csv(exact=True))
    (out / "traj_b.csv").write_text(b.to_csv(exact=True))
    rows = ["t,sq_distance"] + [f"{float(t):.17g},{float(d):.17g}" for t, d in zip(rep.times, rep.sq_distances)]
    (out / "distance.csv").write_text("\n".join(rows) + "\n")
    print(f"wrote {out}/traj_a.csv, traj_b.csv, distance.csv")


if __name__ == "__main__":
    main()

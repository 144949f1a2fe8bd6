"""Write the named example systems (and a few deliberately broken ones) to systems/."""

import argparse
import json
from pathlib import Path

from polyflow.corpus import certified_corpus, h1, h2, h3
from polyflow.potential import build_potential
from polyflow.tiling import HybridSystem


def broken_systems() -> dict:
    dup = h1().to_json()
    dup["regions"][1]["drift"] = dup["regions"][0]["drift"]
    gap = HybridSystem.build(1, [("L", [[1]], [-1], [1]), ("R", [[-1]], [-1], [-1])]).to_json()
    return {"H1_duplicate_drifts": dup, "gap_1d": gap}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="systems")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    files = {name: s.to_json() for name, s in certified_corpus().items()}
    files["H3"] = h3().to_json()
    files.update(broken_systems())
    files["H2_potential"] = build_potential(h2()).to_json()
    files["H1_potential"] = build_potential(h1()).to_json()
    for name, data in files.items():
        path = out / f"{name}.json"
        path.write_text(json.dumps(data, indent=2) + "\n")
        print(path)


if __name__ == "__main__":
    main()

"""``polyflow`` command line: one subcommand per pipeline stage.

Exit codes: 0 success, 2 invalid tiling, 3 not nonexpansive, 4 conservation
or region/maximizer mismatch, 5 I/O, schema or usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .certify import ConservationViolated, certify_nonexpansive, gamma_delta
from .flow import (
    EventStorm,
    check_nonexpansive_trajectories,
    oracle_error,
    proximal_trajectory,
    simulate,
)
from .numeric import DimensionMismatch, format_rational, norm2, to_rational
from .potential import (
    AllPiecesPruned,
    DisconnectedAdjacency,
    MaximizerMismatch,
    NotCertified,
    PWLPotential,
    build_potential,
    potential_to_hybrid,
    verify_maximizers,
)
from .tiling import FORMAT, HybridSystem, SchemaError, UncoveredPoint, validate

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_NONEXPANSIVE = 3
EXIT_CONSERVATION = 4
EXIT_IO = 5


class _Parser(argparse.ArgumentParser):
    # argparse's own exit code 2 would collide with "invalid tiling"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_IO, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    inputs: list
    seed: int = 0
    samples: int = 10_000
    box: Fraction = Fraction(100)
    horizon: Optional[Fraction] = None
    step: Optional[Fraction] = None
    unsafe: bool = False
    cap_events: int = 10**6
    output: Optional[str] = None
    extra: dict = field(default_factory=dict)


def _rational(text: str) -> Fraction:
    try:
        return to_rational(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _point(text: str) -> tuple:
    try:
        return tuple(to_rational(p.strip()) for p in text.split(","))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated rational point: {text!r}") from exc


def _seed(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("seed must be nonnegative")
    return v


def _load_json(path: str) -> dict:
    if path == "-":
        data = json.load(sys.stdin)
    else:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    if not isinstance(data, dict):
        raise SchemaError("top-level JSON value must be an object")
    return data


def _load_system(path: str) -> HybridSystem:
    return HybridSystem.from_json(_load_json(path))


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj: dict) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _check_tiling(system: HybridSystem, cfg: RunConfig) -> Optional[int]:
    report = validate(system, samples=cfg.samples, box=cfg.box, seed=cfg.seed)
    if report.valid:
        return None
    sys.stderr.write(_dump(report.to_json()))
    return EXIT_INVALID


def cmd_validate(cfg: RunConfig) -> int:
    system = _load_system(cfg.inputs[0])
    report = validate(system, samples=cfg.samples, box=cfg.box, seed=cfg.seed)
    _emit(_dump(report.to_json()), cfg.output)
    return EXIT_OK if report.valid else EXIT_INVALID


def cmd_certify(cfg: RunConfig) -> int:
    system = _load_system(cfg.inputs[0])
    bad = _check_tiling(system, cfg)
    if bad is not None:
        return bad
    cert = certify_nonexpansive(system)
    _emit(_dump(cert.to_json(system)), cfg.output)
    return EXIT_OK if cert.nonexpansive else EXIT_NOT_NONEXPANSIVE


def cmd_potential(cfg: RunConfig) -> int:
    system = _load_system(cfg.inputs[0])
    bad = _check_tiling(system, cfg)
    if bad is not None:
        return bad
    cert = certify_nonexpansive(system)
    if not cert.nonexpansive:
        sys.stderr.write(_dump(cert.to_json(system)))
        return EXIT_NOT_NONEXPANSIVE
    weights = None
    corrupt = cfg.extra.get("corrupt")
    if corrupt:
        i, j, value = corrupt
        names = system.names
        i, j = names.index(i) if i in names else int(i), names.index(j) if j in names else int(j)
        weights = cert.weights.with_weight(i, j, to_rational(value))
    potential = build_potential(system, cert, weights=weights)
    checks = verify_maximizers(system, potential, samples=cfg.extra.get("check_samples", 1000), seed=cfg.seed)
    out = potential.to_json()
    out["regions"] = system.names
    out["maximizer_check"] = {
        "checked_points": len(checks),
        "vertices": sum(c.kind == "vertex" for c in checks),
        "interior": sum(c.kind == "interior" for c in checks),
        "samples": sum(c.kind == "sample" for c in checks),
        "mismatches": 0,
    }
    _emit(_dump(out), cfg.output)
    return EXIT_OK


def cmd_convert(cfg: RunConfig) -> int:
    potential = PWLPotential.from_json(_load_json(cfg.inputs[0]))
    system = potential_to_hybrid(potential)
    _emit(_dump(system.to_json()), cfg.output)
    return EXIT_OK


def _load_target(path: str):
    data = _load_json(path)
    if "pieces" in data:
        return PWLPotential.from_json(data)
    if "regions" in data:
        return HybridSystem.from_json(data)
    raise SchemaError("expected a system (\"regions\") or a potential (\"pieces\") file")


def cmd_simulate(cfg: RunConfig) -> int:
    target = _load_target(cfg.inputs[0])
    cert = None
    if isinstance(target, HybridSystem):
        bad = _check_tiling(target, cfg)
        if bad is not None:
            return bad
        if not cfg.unsafe:
            cert = certify_nonexpansive(target)
            if not cert.nonexpansive:
                sys.stderr.write(_dump(cert.to_json(target)))
                return EXIT_NOT_NONEXPANSIVE
    x0 = cfg.extra["x0"]
    traj = simulate(target, x0, cfg.horizon, unsafe=cfg.unsafe, certificate=cert, cap_events=cfg.cap_events)
    _emit(traj.to_csv(exact=cfg.extra.get("exact", False)), cfg.output)

    report = {"format": FORMAT, "terminal": traj.terminal.value, "breakpoints": len(traj.times)}
    if cfg.step is not None:
        potential = target if isinstance(target, PWLPotential) else build_potential(target, cert)
        grid = proximal_trajectory(potential, x0, cfg.horizon, cfg.step)
        grid = [(t, z) for t, z in grid if t <= traj.end_time]
        lip = max(math.sqrt(norm2(s)) for s in potential.slopes)
        report["oracle"] = {
            "h": format_rational(cfg.step),
            "grid_points": len(grid),
            "max_error": oracle_error(traj, grid),
            "reference_bound": float(cfg.step) * lip,
        }
    pair = cfg.extra.get("pair")
    if pair is not None:
        other = simulate(target, pair, cfg.horizon, unsafe=cfg.unsafe, certificate=cert, cap_events=cfg.cap_events)
        report["pair"] = check_nonexpansive_trajectories(traj, other).to_json()
    sys.stderr.write(_dump(report))
    return EXIT_OK


def cmd_gamma(cfg: RunConfig) -> int:
    system = _load_system(cfg.inputs[0])
    bad = _check_tiling(system, cfg)
    if bad is not None:
        return bad
    gd = gamma_delta(system)
    _emit(_dump(gd.to_json(system)), cfg.output)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "certify": cmd_certify,
    "potential": cmd_potential,
    "convert": cmd_convert,
    "simulate": cmd_simulate,
    "gamma": cmd_gamma,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=_seed, default=0, help="seed for every randomized check (default 0)")
    common.add_argument("--samples", type=int, default=10_000, help="random coverage probes (default 10000)")
    common.add_argument("--box", type=_rational, default=Fraction(100), help="half-width of the probe box")
    common.add_argument("-o", "--output", help="write the main output here instead of stdout")

    parser = _Parser(prog="polyflow", description="Polyhedral hybrid systems: certify, build potentials, simulate.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, help_text in [
        ("validate", "check the tiling axioms"),
        ("certify", "decide nonexpansiveness by exact LPs"),
        ("gamma", "the triple-proximity constant gamma and delta = gamma/3"),
    ]:
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("system", help="system JSON file ('-' for stdin)")

    p = sub.add_parser("potential", parents=[common], help="build the convex potential of a certified system")
    p.add_argument("system")
    p.add_argument("--check-samples", type=int, default=1000, help="random points for the maximizer check")
    p.add_argument("--corrupt", nargs=3, metavar=("I", "J", "VALUE"),
                   help="fault injection: overwrite weight b_IJ before building")

    p = sub.add_parser("convert", parents=[common], help="regions of a potential file")
    p.add_argument("potential")

    p = sub.add_parser("simulate", parents=[common], help="exact trajectory as CSV; reports go to stderr")
    p.add_argument("input", help="system or potential JSON file")
    p.add_argument("--x0", type=_point, required=True, help="initial state, e.g. 2,1 or 1/2,-3")
    p.add_argument("--horizon", "-T", type=_rational, required=True)
    p.add_argument("--oracle", type=_rational, metavar="H", help="compare against the proximal scheme with step H")
    p.add_argument("--pair", type=_point, metavar="Y0", help="second initial state for the distance check")
    p.add_argument("--unsafe", action="store_true", help="simulate without a nonexpansiveness certificate")
    p.add_argument("--cap-events", type=int, default=10**6)
    p.add_argument("--exact", action="store_true", help="add exact p/q columns to the CSV")
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    inputs = [getattr(args, k) for k in ("system", "potential", "input") if getattr(args, k, None) is not None]
    cfg = RunConfig(args.command, inputs, seed=args.seed, samples=args.samples, box=args.box, output=args.output)
    if args.command == "potential":
        cfg.extra["corrupt"] = args.corrupt
        cfg.extra["check_samples"] = args.check_samples
    if args.command == "simulate":
        cfg.horizon = args.horizon
        cfg.step = args.oracle
        cfg.unsafe = args.unsafe
        cfg.cap_events = args.cap_events
        cfg.extra.update(x0=args.x0, pair=args.pair, exact=args.exact)
    return cfg


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _config(args)
    try:
        return COMMANDS[cfg.command](cfg)
    except (OSError, json.JSONDecodeError, SchemaError, DimensionMismatch, UnicodeDecodeError) as exc:
        sys.stderr.write(f"polyflow: {exc}\n")
        return EXIT_IO
    except UncoveredPoint as exc:
        sys.stderr.write(f"polyflow: invalid tiling: {exc}\n")
        return EXIT_INVALID
    except NotCertified as exc:
        sys.stderr.write(f"polyflow: {exc}\n")
        return EXIT_NOT_NONEXPANSIVE
    except (ConservationViolated, MaximizerMismatch, DisconnectedAdjacency) as exc:
        sys.stderr.write(f"polyflow: {type(exc).__name__}: {exc}\n")
        return EXIT_CONSERVATION
    except (AllPiecesPruned, EventStorm, ValueError) as exc:
        sys.stderr.write(f"polyflow: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Commands mirror the library surface: validate, solve-nash,
solve-stackelberg, reduce (security | test | matching), swap, verify,
decompose, gen, and the bench harness.  Results are JSON on stdout; on
failure a machine-readable error object goes to stderr and the exit code
classifies it (2 validation or parse, 3 unsupported instance, 4 numeric
failure).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict

from . import flow
from .core import (
    CEGame,
    bvn_decompose,
    normal_form_size,
    player_utility,
    validate_game,
    verify_equilibrium,
)
from .errors import (
    CEGameError,
    GameFileError,
    InfeasibleFlowError,
    IterationLimitError,
    NegativeCycleError,
    NumericDegeneracyError,
    UnsupportedInstanceError,
    ValidationError,
)
from .gamefile import (
    parse_game,
    parse_profile,
    parse_spec,
    serialize_game,
    serialize_profile,
)
from .nash import SolveOptions, solve_nash
from .randgen import gen_random
from .reductions import (
    MatchingSpec,
    SecurityGameSpec,
    TestGameSpec,
    matching_to_ce,
    security_to_ce,
    swap_roles,
    test_to_ce,
)
from .stackelberg import solve_stackelberg

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_UNSUPPORTED = 3
EXIT_NUMERIC = 4


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise GameFileError(f"cannot read {path}: {exc}") from exc


def _emit(text: str, out: str | None) -> None:
    if out and out != "-":
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _error(kind: str, message: str, code: int, **extra) -> int:
    payload = {"error": {"kind": kind, "message": message, **extra}}
    sys.stderr.write(json.dumps(payload) + "\n")
    return code


def _load_game(path: str) -> CEGame:
    game = parse_game(_read(path))
    violations = validate_game(game)
    if violations:
        raise ValidationError(violations)
    return game


def _solve_options(args) -> SolveOptions:
    kwargs = {}
    if getattr(args, "eps", None) is not None:
        kwargs["eps"] = args.eps
        kwargs["eps_equilibrium"] = max(args.eps, 1e-6)
    if getattr(args, "max_iterations", None) is not None:
        kwargs["max_iterations"] = args.max_iterations
    return SolveOptions(**kwargs)


def _trace_record(record) -> dict:
    doc = asdict(record)
    doc["boundary_open"] = sorted(doc["boundary_open"])
    doc["entered_boundary"] = sorted(doc["entered_boundary"])
    return doc


def _cmd_validate(args) -> int:
    game = parse_game(_read(args.game))
    violations = validate_game(game)
    _emit(json.dumps({"ok": not violations, "violations": violations},
                     indent=2), args.out)
    return EXIT_OK if not violations else EXIT_VALIDATION


def _cmd_solve_nash(args) -> int:
    game = _load_game(args.game)
    solution = solve_nash(game, _solve_options(args))
    if args.trace:
        lines = "\n".join(json.dumps(_trace_record(r)) for r in solution.trace)
        if args.trace == "-":
            sys.stdout.write(lines + "\n")
        else:
            with open(args.trace, "w", encoding="utf-8") as handle:
                handle.write(lines + "\n")
    doc = json.loads(serialize_profile(game, solution.profile))
    doc.update({
        "utilities": [player_utility(game, solution.profile, i)
                      for i in range(game.num_players)],
        "iterations": solution.iterations,
        "verified": solution.verified.is_equilibrium,
        "max_violation": solution.verified.max_violation,
        "engine": flow.engine_name(),
    })
    _emit(json.dumps(doc, indent=2), args.out)
    return EXIT_OK


def _cmd_solve_stackelberg(args) -> int:
    game = _load_game(args.game)
    solution = solve_stackelberg(game)
    doc = {
        "sites": list(game.sites),
        "coverage": [float(v) for v in solution.coverage],
        "attacked_site": game.sites[solution.attacked_site],
        "catcher_utility": solution.catcher_utility,
        "evader_utility": solution.evader_utility,
    }
    _emit(json.dumps(doc, indent=2), args.out)
    return EXIT_OK


def _cmd_reduce(args) -> int:
    spec = parse_spec(_read(args.spec))
    expected = {"security": SecurityGameSpec, "test": TestGameSpec,
                "matching": MatchingSpec}[args.kind]
    if not isinstance(spec, expected):
        raise GameFileError(
            f"spec file is of kind {type(spec).__name__}, not {args.kind!r}"
        )
    builder = {"security": security_to_ce, "test": test_to_ce,
               "matching": matching_to_ce}[args.kind]
    _emit(serialize_game(builder(spec)), args.out)
    return EXIT_OK


def _cmd_swap(args) -> int:
    game = parse_game(_read(args.game))
    _emit(serialize_game(swap_roles(game)), args.out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    game = _load_game(args.game)
    profile = parse_profile(_read(args.profile), game)
    report = verify_equilibrium(game, profile, args.eps if args.eps else 1e-6)
    doc = {
        "is_equilibrium": report.is_equilibrium,
        "eps": report.eps,
        "gaps": list(report.gaps),
        "per_player_violation": list(report.per_player_violation),
        "feasibility_violation": report.feasibility_violation,
        "max_violation": report.max_violation,
    }
    _emit(json.dumps(doc, indent=2), args.out)
    return EXIT_OK if report.is_equilibrium else 1


def _cmd_decompose(args) -> int:
    game = _load_game(args.game)
    profile = parse_profile(_read(args.profile), game)
    player = args.player
    if not 0 <= player < game.num_players:
        raise ValidationError(f"no player {player} in this game")
    marginals = [float(v) for v in profile.alloc[player]]
    mixed = bvn_decompose(marginals, round(float(game.resources[player])))
    atoms = [
        {"subset": [game.sites[s] for s, used in enumerate(pure) if used],
         "probability": prob}
        for pure, prob in mixed.atoms
    ]
    _emit(json.dumps({"player": player, "sites": list(game.sites),
                      "atoms": atoms}, indent=2), args.out)
    return EXIT_OK


def _cmd_gen(args) -> int:
    game = gen_random(args.evaders, args.sites, args.seed)
    _emit(serialize_game(game), args.out)
    return EXIT_OK


def _parse_sizes(text: str) -> list[int]:
    sizes = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            sizes.extend(range(int(lo), int(hi) + 1))
        elif part:
            sizes.append(int(part))
    if not sizes or any(s < 1 for s in sizes):
        raise ValidationError(f"bad --sizes value {text!r}")
    return sizes


def _cmd_bench(args) -> int:
    """Solve random square instances and emit one verified CSV row each.

    Rows are ordered by (n, seed) and byte-stable for fixed seeds except
    for the wall time column.
    """
    if args.engine:
        flow.set_engine(args.engine)
    sizes = _parse_sizes(args.sizes)
    opts = _solve_options(args)
    rows = []
    for n in sizes:
        for seed in range(args.per_size):
            game = gen_random(n, n, seed)
            start = time.perf_counter()
            solution = solve_nash(game, opts)
            elapsed_ms = (time.perf_counter() - start) * 1e3
            report = verify_equilibrium(game, solution.profile,
                                        opts.eps_equilibrium)
            if not report.is_equilibrium:
                raise NumericDegeneracyError(
                    f"bench instance n={n} seed={seed} failed verification"
                )
            rows.append((n, n, seed, solution.iterations,
                         round(elapsed_ms, 3), normal_form_size(game), True))

    target = sys.stdout if not args.out or args.out == "-" else open(
        args.out, "w", encoding="utf-8", newline="")
    try:
        writer = csv.writer(target, lineterminator="\n")
        writer.writerow(["n", "m", "seed", "iterations", "wall_time_ms",
                         "normal_form_size", "verified"])
        for row in rows:
            writer.writerow([*row[:6], "true"])
    finally:
        if target is not sys.stdout:
            target.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cegames",
        description="Catcher-evader game solver and reductions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_out(p):
        p.add_argument("--out", help="write the result here instead of stdout")

    p = sub.add_parser("validate", help="check a game file against the model "
                                        "invariants")
    p.add_argument("game")
    add_out(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("solve-nash", help="compute a Nash equilibrium")
    p.add_argument("game")
    p.add_argument("--eps", type=float)
    p.add_argument("--max-iterations", type=int, dest="max_iterations")
    p.add_argument("--trace", metavar="FILE",
                   help="write per-iteration records (JSON lines); '-' for stdout")
    add_out(p)
    p.set_defaults(func=_cmd_solve_nash)

    p = sub.add_parser("solve-stackelberg",
                       help="optimal catcher commitment (single evader)")
    p.add_argument("game")
    add_out(p)
    p.set_defaults(func=_cmd_solve_stackelberg)

    p = sub.add_parser("reduce", help="convert a problem spec into a game file")
    p.add_argument("kind", choices=["security", "test", "matching"])
    p.add_argument("spec")
    add_out(p)
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("swap", help="swap catcher and evader roles")
    p.add_argument("game")
    add_out(p)
    p.set_defaults(func=_cmd_swap)

    p = sub.add_parser("verify", help="best-response check of a profile")
    p.add_argument("game")
    p.add_argument("profile")
    p.add_argument("--eps", type=float)
    add_out(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("decompose",
                       help="lottery over pure assignments matching a "
                            "player's marginals")
    p.add_argument("game")
    p.add_argument("profile")
    p.add_argument("--player", type=int, default=0)
    add_out(p)
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--evaders", "-n", type=int, required=True)
    p.add_argument("--sites", "-m", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    add_out(p)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("bench", help="solve random instances, emit CSV")
    p.add_argument("--sizes", required=True,
                   help="sizes to run, e.g. 2..10 or 2,5,10")
    p.add_argument("--per-size", type=int, default=20, dest="per_size")
    p.add_argument("--eps", type=float)
    p.add_argument("--max-iterations", type=int, dest="max_iterations")
    p.add_argument("--engine", choices=["auto", "compiled", "python"],
                   help="flow kernel flavor (default: compiled when built)")
    add_out(p)
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GameFileError,) as exc:
        return _error("parse", str(exc), EXIT_VALIDATION)
    except ValidationError as exc:
        return _error("validation", str(exc), EXIT_VALIDATION,
                      violations=exc.violations)
    except UnsupportedInstanceError as exc:
        return _error("unsupported", str(exc), EXIT_UNSUPPORTED)
    except (NumericDegeneracyError, IterationLimitError, InfeasibleFlowError,
            NegativeCycleError) as exc:
        return _error("numeric", str(exc), EXIT_NUMERIC)
    except CEGameError as exc:
        return _error("error", str(exc), EXIT_NUMERIC)


if __name__ == "__main__":
    sys.exit(main())

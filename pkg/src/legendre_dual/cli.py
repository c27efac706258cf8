"""Command-line interface.

Exit codes: ``0`` every evaluated check passed (skips and gated rows do not
count), ``1`` at least one check failed or errored, ``2`` the scenario could
not be loaded or the invocation was invalid.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .fixtures import fixture_names, fixture_text
from .registry import CATALOG, run_checks
from .scenario import ScenarioError, load_scenario, parse_scenario_text


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="legendre-dual",
        description=(
            "Verify the duality identities of a scenario's Lagrangian/"
            "Hamiltonian pair as numerical residuals over sampled points."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser(
        "check", help="evaluate the duality checks of a scenario file"
    )
    source = check.add_mutually_exclusive_group(required=True)
    source.add_argument(
        "scenario", nargs="?", help="path to a scenario (.scn) file"
    )
    source.add_argument(
        "--fixture",
        metavar="NAME",
        help="run a bundled fixture instead of a file (see 'fixtures list')",
    )
    check.add_argument(
        "--samples",
        type=int,
        metavar="N",
        help="override the scenario's sample count",
    )
    check.add_argument(
        "--seed", type=int, metavar="S", help="override the sampling seed"
    )
    check.add_argument(
        "--tol",
        type=float,
        metavar="X",
        help=(
            "override the default tolerance for identity checks "
            "(per-check [tolerances] entries still win; gates keep their own "
            "threshold)"
        ),
    )
    check.add_argument(
        "--ids",
        metavar="A,B,...",
        help="comma-separated registry codes to run (gates are pulled in)",
    )
    check.add_argument(
        "--threads",
        type=int,
        metavar="N",
        help="worker threads (default: LEGENDRE_DUAL_THREADS or 1)",
    )
    check.add_argument(
        "--format",
        choices=("text", "json"),
        default="text",
        help="report format (default: text)",
    )
    check.add_argument(
        "--out",
        metavar="PATH",
        help="write the report to a file instead of stdout",
    )

    sub.add_parser("catalog", help="list every registry code with its description")

    fixtures = sub.add_parser("fixtures", help="list or export bundled scenarios")
    fsub = fixtures.add_subparsers(dest="fixtures_command", required=True)
    fsub.add_parser("list", help="list bundled fixture names")
    write = fsub.add_parser("write", help="write a bundled fixture to disk")
    write.add_argument("name", help="fixture name")
    write.add_argument(
        "--dir",
        default=".",
        metavar="DIR",
        help="target directory (default: current directory)",
    )
    return parser


def _cmd_check(args: argparse.Namespace) -> int:
    try:
        if args.fixture is not None:
            text = fixture_text(args.fixture)
            model = parse_scenario_text(text, source_bytes=text.encode("utf-8"))
        else:
            model = load_scenario(args.scenario)
    except (ScenarioError, KeyError) as exc:
        message = exc.args[0] if exc.args else str(exc)
        print(f"error: {message}", file=sys.stderr)
        return 2
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    ids = None
    if args.ids:
        ids = [tok.strip() for tok in args.ids.split(",") if tok.strip()]
    try:
        report = run_checks(
            model,
            count=args.samples,
            seed=args.seed,
            tol=args.tol,
            ids=ids,
            threads=args.threads,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    rendered = report.to_json() if args.format == "json" else report.to_text()
    if args.out:
        Path(args.out).write_text(rendered, encoding="utf-8")
    else:
        sys.stdout.write(rendered)
    return report.exit_code


def _cmd_catalog() -> int:
    width = max(len(spec.code) for spec in CATALOG)
    for spec in CATALOG:
        req = "" if spec.requires == "always" else f"  (needs {spec.requires})"
        print(f"{spec.code:<{width}}  {spec.summary}{req}")
    return 0


def _cmd_fixtures(args: argparse.Namespace) -> int:
    if args.fixtures_command == "list":
        for name in fixture_names():
            print(name)
        return 0
    try:
        text = fixture_text(args.name)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2
    target_dir = Path(args.dir)
    try:
        target_dir.mkdir(parents=True, exist_ok=True)
        target = target_dir / f"{args.name}.scn"
        target.write_text(text, encoding="utf-8")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(target)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "check":
        return _cmd_check(args)
    if args.command == "catalog":
        return _cmd_catalog()
    return _cmd_fixtures(args)


if __name__ == "__main__":
    sys.exit(main())

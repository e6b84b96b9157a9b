"""Command-line runner: ``stargraph run|validate|list-recipes``.

Exit codes: 0 all checks passed, 1 some check failed, 2 invalid input or a
guard aborted the run.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .config import ExperimentSpec, validate_config
from .errors import ConfigError, StarGraphError
from .recipes import RECIPES, RecipeOutput

log = logging.getLogger("stargraph")

EXIT_PASS, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _dump_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _write_series(path, header, columns):
    columns = [np.asarray(c, dtype=float) for c in columns]
    with open(path, "w") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for row in zip(*columns):
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def write_results(spec: ExperimentSpec, result: RecipeOutput, directory: str) -> list[str]:
    """Write echo, series, summary and manifest; returns the relative file list."""
    os.makedirs(os.path.join(directory, "series"), exist_ok=True)
    files = ["config-echo.yaml"]
    with open(os.path.join(directory, "config-echo.yaml"), "w") as fh:
        fh.write(spec.echo())
    for name in sorted(result.series):
        header, columns = result.series[name]
        rel = os.path.join("series", f"{name}.txt")
        _write_series(os.path.join(directory, rel), header, columns)
        files.append(rel)
    checks = [c.as_dict() for c in result.checks]
    _dump_json(os.path.join(directory, "summary.json"), {
        "recipe": spec.recipe, "passed": result.passed,
        "n_checks": len(checks), "n_failed": sum(not c["passed"] for c in checks),
        "checks": checks, "info": result.info,
    })
    files.append("summary.json")
    _dump_json(os.path.join(directory, "manifest.json"), {
        "recipe": spec.recipe, "seed": spec.seed, "version": __version__,
        "tolerances": {c["name"]: {"relation": c["relation"], "tolerance": c["tolerance"],
                                   "invariant": c["invariant"]} for c in checks},
        "files": sorted(files),
    })
    return files


def run_spec(spec: ExperimentSpec, output: str | None = None) -> tuple[int, RecipeOutput | None, str]:
    directory = output or spec.output_dir()
    recipe = RECIPES[spec.recipe]
    log.info("running %s -> %s", recipe.name, directory)
    try:
        result = recipe.run(spec)
    except StarGraphError as exc:
        log.error("guard abort: %s: %s", type(exc).__name__, exc)
        os.makedirs(directory, exist_ok=True)
        _dump_json(os.path.join(directory, "summary.json"), {
            "recipe": spec.recipe, "passed": False, "aborted": True,
            "error": type(exc).__name__, "message": str(exc),
        })
        return EXIT_INVALID, None, directory
    write_results(spec, result, directory)
    for c in result.checks:
        log.info("%s %s: %s %s %s", "PASS" if c.passed else "FAIL", c.name, c.value, c.relation, c.tolerance)
    return (EXIT_PASS if result.passed else EXIT_FAIL), result, directory


def _cmd_run(args) -> int:
    try:
        spec = validate_config(args.config)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"{args.config}: {msg}", file=sys.stderr)
        return EXIT_INVALID
    code, result, directory = run_spec(spec, args.output)
    if result is not None:
        failed = [c.name for c in result.checks if not c.passed]
        status = "passed" if not failed else f"{len(failed)} check(s) failed"
        print(f"{spec.recipe}: {status}; results in {directory}")
    return code


def _cmd_validate(args) -> int:
    try:
        spec = validate_config(args.config)
    except ConfigError as exc:
        kind = type(exc).__name__
        for msg in exc.errors:
            print(f"{args.config}: {kind}: {msg}", file=sys.stderr)
        return EXIT_INVALID
    sys.stdout.write(spec.echo())
    return EXIT_PASS


def _cmd_list(args) -> int:
    width = max(len(n) for n in RECIPES)
    for name in sorted(RECIPES):
        print(f"{name:<{width}}  {RECIPES[name].description}")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stargraph", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run the recipe named in a config file")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="result directory (overrides the config)")
    p.set_defaults(func=_cmd_run)
    p = sub.add_parser("validate", help="check a config file and echo it with defaults")
    p.add_argument("config")
    p.set_defaults(func=_cmd_validate)
    p = sub.add_parser("list-recipes", help="list available recipes")
    p.set_defaults(func=_cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

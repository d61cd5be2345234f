"""
oscdom command line.

    oscdom run <suite|all> [--config FILE] [--n DIM] [--grid N] [--seed S] [--out DIR] ...
    oscdom report <dir>
    oscdom list
    oscdom serve <dir> [--port P]

Exit codes: 0 all checks pass, 1 an invariant check failed, 2 configuration error.
"""
import argparse
import json
import logging
import sys

from oscdom.config import SUITES, load_config
from oscdom.errors import ConfigError, OscdomError
from oscdom.registry import OperatorRegistry
from oscdom.storage import StorageRegistry
from report_mixin import format_summary_table, load_summaries
from runner import DEFAULT_PLUGIN_DIR, SuiteRunner, exit_status

logger = logging.getLogger("oscdom")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2

# CLI flag -> config key
OVERRIDES = {
    "n": "dim",
    "grid": "grid",
    "seed": "seed",
    "out": "out",
    "workers": "workers",
    "lambda_n": "engine.lambda_n",
    "max_depth": "engine.max_depth",
    "rings": "engine.rings",
    "eta_target": "engine.target_eta",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="oscdom", description="Sparse domination by mean oscillations: numerical lab")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a verification suite")
    run.add_argument("suite", choices=SUITES + ("all",))
    run.add_argument("--config", help="TOML experiment record")
    run.add_argument("--n", type=int, help="dimension (1 or 2)")
    run.add_argument("--grid", type=int, help="cells per axis (power of two)")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="output directory (or mem://name)")
    run.add_argument("--workers", type=int, help="worker threads (default: physical cores)")
    run.add_argument("--lambda", dest="lambda_n", type=float, help="λ_n of the stopping time")
    run.add_argument("--max-depth", dest="max_depth", type=int)
    run.add_argument("--rings", type=int)
    run.add_argument("--eta-target", dest="eta_target", type=float)

    report = sub.add_parser("report", help="print the summary table of a run directory")
    report.add_argument("dir")

    listing = sub.add_parser("list", help="list operators and corpus generators")
    listing.add_argument("--plugin-dir", default=DEFAULT_PLUGIN_DIR)
    listing.add_argument("--json", action="store_true", help="machine-readable output")

    serve = sub.add_parser("serve", help="read-only REST browser of a run directory")
    serve.add_argument("dir")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=12345)
    return parser


def configure_logging(args):
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def cmd_run(args):
    overrides = {key: getattr(args, flag) for flag, key in OVERRIDES.items()}
    cfg = load_config(args.config, overrides)
    runner = SuiteRunner(cfg)
    runner.memberFinished.connect(lambda suite, member: logger.debug("[Runner] %s: %s done", suite, member))
    outcomes = runner.run_all() if args.suite == "all" else [runner.run(args.suite)]
    sys.stdout.write(format_summary_table(runner.load_summaries()))
    return exit_status(outcomes)


def cmd_report(args):
    summaries = load_summaries(StorageRegistry().get_provider(args.dir))
    sys.stdout.write(format_summary_table(summaries))
    if not summaries:
        return EXIT_CONFIG
    return EXIT_OK if all(s.get("passed") for s in summaries.values()) else EXIT_FAILED


def cmd_list(args):
    registry = OperatorRegistry(args.plugin_dir)
    registry.discover_plugins()
    info = registry.describe()
    if args.json:
        sys.stdout.write(json.dumps(info, indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    for section in ("kernels", "generators"):
        sys.stdout.write(f"{section}:\n")
        for item in info[section]:
            origin = "" if item["is_builtin"] else " (plugin)"
            sys.stdout.write(f"  {item['label']}{origin}: {item['description']}\n")
            for p in item["params"]:
                sys.stdout.write(f"      {p['name']} = {p['value']!r}  {p['display_name']}\n")
    sys.stdout.write("diagonals:\n")
    for label in info["diagonals"]:
        sys.stdout.write(f"  {label}\n")
    sys.stdout.write("sums: sum:<a>+<b>\n")
    return EXIT_OK


def cmd_serve(args):
    from server import run_server

    run_server(args.dir, args.host, args.port)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "report": cmd_report, "list": cmd_list, "serve": cmd_serve}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error("[Config] %s", e)
        return EXIT_CONFIG
    except OscdomError as e:
        logger.error("[Main] %s: %s", type(e).__name__, e)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())

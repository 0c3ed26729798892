"""
Command line entry point.

    python cli.py tune --config configs/tune_example1.json --out runs/ex1
    python cli.py simulate --config configs/simulate_example1.json --out runs/ex1
    python cli.py verify --config configs/verify_example1.json --out runs/ex1
    python cli.py support --config configs/support_box.json
    python cli.py report --config configs/report.json
    python cli.py schema --out docs/schemas
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import tissf_api
from tissf.errors import (
    AllDegenerateError,
    ConfigError,
    EmptySampleSetError,
    InfeasibleTuningError,
    NonFiniteStateError,
    ScenarioFailure,
    TissfError,
    UnboundedTuningError,
)
from tissf.schemas import CONFIG_MODELS
from ui.report import render_events

logger = logging.getLogger("tissf.cli")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_TUNING = 2
EXIT_EMPTY_SAMPLES = 3
EXIT_SCENARIO = 4
EXIT_NON_FINITE = 5
EXIT_VERIFY = 6

# first match wins, so subclasses come before TissfError
_EXIT_CODES = (
    (ConfigError, EXIT_CONFIG),
    (InfeasibleTuningError, EXIT_TUNING),
    (UnboundedTuningError, EXIT_TUNING),
    (EmptySampleSetError, EXIT_EMPTY_SAMPLES),
    (AllDegenerateError, EXIT_EMPTY_SAMPLES),
    (ScenarioFailure, EXIT_SCENARIO),
    (NonFiniteStateError, EXIT_NON_FINITE),
    (TissfError, EXIT_CONFIG),
)


def exit_code_for(exc: BaseException) -> int:
    for exc_type, code in _EXIT_CODES:
        if isinstance(exc, exc_type):
            return code
    raise exc


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors become ConfigError so they share exit code 1."""

    def error(self, message: str):
        raise ConfigError(f"{self.prog}: {message}")


LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]


def _build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="tissf", description="TISSf-CBF tuning toolkit")
    parser.add_argument("--log-level", default="INFO", choices=LOG_LEVELS)
    # accepted after the subcommand too; SUPPRESS keeps the top-level value otherwise
    common = _ArgumentParser(add_help=False)
    common.add_argument("--log-level", default=argparse.SUPPRESS, choices=LOG_LEVELS)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("tune", "synthesize (eps0, lambda) and write tuning_result.json"),
        ("simulate", "run a batch of closed-loop scenarios"),
        ("verify", "check a tuning on a fresh sample and write verify.json"),
    ):
        cmd = sub.add_parser(name, help=help_text, parents=[common])
        cmd.add_argument("--config", type=Path, required=True)
        cmd.add_argument("--out", type=Path, default=Path("."))
        cmd.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        cmd.add_argument("--events", action="store_true", help="print progress events")

    support = sub.add_parser("support", help="print sigma_U(d) and a support point per direction",
                             parents=[common])
    support.add_argument("--config", type=Path, required=True)

    report = sub.add_parser("report", help="summarize JSON artifacts of earlier runs", parents=[common])
    report.add_argument("--config", type=Path, default=None)
    report.add_argument("--dir", type=Path, default=None, help="overrides the config directory")

    schema = sub.add_parser("schema", help="write JSON Schemas of the config files", parents=[common])
    schema.add_argument("--out", type=Path, default=Path("."))
    return parser


def _dispatch(args: argparse.Namespace, events: List[Dict[str, Any]]) -> int:
    def callback(event: Dict[str, Any]) -> None:
        logger.debug("[EVENT] %s: %s", event["type"], event["message"])
        events.append(event)

    if args.command == "tune":
        config = tissf_api.load_config(args.config, CONFIG_MODELS["tune"])
        result = tissf_api.run_tune(config, args.out, callback, seed=args.seed)
        print(json.dumps(result.params.to_dict()))
        return EXIT_OK

    if args.command == "simulate":
        config = tissf_api.load_config(args.config, CONFIG_MODELS["simulate"])
        tissf_api.run_simulate(config, args.out, callback, base_dir=args.config.parent,
                               seed=args.seed)
        return EXIT_OK

    if args.command == "verify":
        config = tissf_api.load_config(args.config, CONFIG_MODELS["verify"])
        report = tissf_api.run_verify(config, args.out, callback,
                                      base_dir=args.config.parent, seed=args.seed)
        return EXIT_OK if report.ok else EXIT_VERIFY

    if args.command == "support":
        config = tissf_api.load_config(args.config, CONFIG_MODELS["support"])
        for row in tissf_api.run_support(config):
            print(json.dumps({"sigma": row["sigma"], "u_star": row["u_star"]}))
        return EXIT_OK

    if args.command == "report":
        directory, max_rows = Path("."), 20
        if args.config is not None:
            config = tissf_api.load_config(args.config, CONFIG_MODELS["report"])
            directory = args.config.parent / config.directory
            max_rows = config.max_rows
        if args.dir is not None:
            directory = args.dir
        print(tissf_api.run_report(directory, max_rows))
        return EXIT_OK

    for path in tissf_api.write_schemas(args.out):
        print(path)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except ConfigError as exc:
        logger.error("[CLI] %s", exc)
        return EXIT_CONFIG
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    events: List[Dict[str, Any]] = []
    try:
        code = _dispatch(args, events)
    except TissfError as exc:
        logger.error("[%s] %s", args.command.upper(), exc)
        code = exit_code_for(exc)
    if getattr(args, "events", False):
        print(render_events(events), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())

"""CLI entry point: one subcommand per scenario, JSON report on stdout or --output."""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import dotenv_values

from src.cli.scenarios import (
    FAMILY_CHOICES,
    THERMALIZING_CHOICES,
    OutputFormat,
    Scenario,
    ScenarioConfig,
    parse_int_list,
    parse_t_range,
    run_scenario,
)
from src.config.logging_config import get_logger, setup_logging
from src.config.settings import validate_config
from src.core.errors import ConfigError, ConstraintError, ThermoError
from src.core.families import OrbitKind
from src.storage.operations import build_report, render_json, write_csv_table, write_json_report

logger = get_logger(__name__)

# Keys never passed on to ScenarioConfig.
_PARSER_ONLY = {"command", "config", "log_level"}


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors become ConfigError so they share the JSON error path."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise ConfigError(message)


def _add_common(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--config", type=Path, default=None, help="KEY=VALUE file; flags override its values")
    cmd.add_argument("--beta", type=float, default=None)
    cmd.add_argument("--seed", type=int, default=None, help="Defaults to THERMOCTL_SEED")
    cmd.add_argument("--output", type=Path, default=None, help="Report path (stdout if absent)")
    cmd.add_argument("--format", dest="output_format", choices=[f.value for f in OutputFormat], default=None)
    cmd.add_argument("--workers", type=int, default=None)
    cmd.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"])


def _add_family(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--family", choices=FAMILY_CHOICES, default=None)
    cmd.add_argument("--orbit", choices=[kind.value for kind in OrbitKind], default=None)
    cmd.add_argument("--v", default=None, help="Pauli labels of the local reference Hamiltonian, e.g. zz")
    cmd.add_argument("--p0", type=float, default=None, help="Initial excited population (qubit families)")
    cmd.add_argument("--delta-min", type=float, default=None)
    cmd.add_argument("--delta-max", type=float, default=None)
    cmd.add_argument("--n-starts", type=int, default=None)


def register_commands(sub: argparse._SubParsersAction) -> None:
    """Register scenario subcommands on an existing subparsers group."""
    ex1 = sub.add_parser(Scenario.EXAMPLE1.value, help="Gibbs-preserving bit map vs thermal contact")
    _add_common(ex1)
    ex1.add_argument("--p0", type=float, default=None)
    ex1.add_argument("--delta-min", type=float, default=None)
    ex1.add_argument("--delta-max", type=float, default=None)
    ex1.add_argument("--r", type=float, default=None, help="Mixing parameter of the bit map")
    ex1.add_argument("--n-steps", type=int, default=None)
    ex1.add_argument("--emit-protocol", type=Path, default=None)
    ex1.add_argument("--emit-work", type=Path, default=None)

    ex2 = sub.add_parser(Scenario.EXAMPLE2.value, help="Two-qubit local-field target feasibility")
    _add_common(ex2)
    ex2.add_argument("--t", type=float, default=None)
    ex2.add_argument("--t-range", type=parse_t_range, default=None, metavar="START:STOP:NUM")
    ex2.add_argument("--feasibility-tol", type=float, default=None)
    ex2.add_argument("--tc-bound", action="store_true", default=None,
                     help="Also report the thermal-contact cyclic bound")
    ex2.add_argument("--emit-curves", type=Path, default=None)

    iso = sub.add_parser(Scenario.ISOTHERMAL.value, help="Work of discretised isothermal protocols")
    _add_common(iso)
    iso.add_argument("--n-values", type=parse_int_list, default=None, metavar="N1,N2,...")
    iso.add_argument("--delta-start", type=float, default=None)
    iso.add_argument("--delta-end", type=float, default=None)
    iso.add_argument("--p0", type=float, default=None,
                     help="Run the optimal thermal-contact protocol from this excitation instead")

    cert = sub.add_parser(Scenario.PASSIVITY.value, help="Local passivity certificate for a Hamiltonian")
    _add_common(cert)
    cert.add_argument("--v", default=None)
    cert.add_argument("--n-starts", type=int, default=None)
    cert.add_argument("--grid-per-axis", type=int, default=None)

    pen = sub.add_parser(Scenario.PENALTY.value, help="Penalty term of the restricted second law")
    _add_common(pen)
    _add_family(pen)
    pen.add_argument("--compare-reduction", action="store_true", default=None)

    chk = sub.add_parser(Scenario.BOUND_CHECK.value, help="Random protocols against the work bound")
    _add_common(chk)
    _add_family(chk)
    chk.add_argument("--dim", type=int, default=None)
    chk.add_argument("--n-protocols", type=int, default=None)
    chk.add_argument("--n-states", type=int, default=None)
    chk.add_argument("--protocol-length", type=int, default=None)
    chk.add_argument("--thermalizing", choices=THERMALIZING_CHOICES, default=None)
    chk.add_argument("--bound-tol", type=float, default=None)

    rep = sub.add_parser(Scenario.REPLAY.value, help="Replay a saved protocol document")
    _add_common(rep)
    rep.add_argument("--protocol", type=Path, default=None)
    rep.add_argument("--emit-work", type=Path, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="thermoctl", description="Work extraction under restricted control")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)
    register_commands(sub)
    return parser


def config_from_args(args: argparse.Namespace) -> ScenarioConfig:
    """
    Merge the config file (if any) with command-line flags; flags win.

    Raises:
        ConfigError: If the config file is missing or holds invalid values
    """
    values: Dict[str, Any] = {}
    if args.config is not None:
        if not args.config.is_file():
            raise ConfigError(f"Config file not found: {args.config}")
        values.update({key: value for key, value in dotenv_values(args.config).items() if value is not None})
    values.update({
        key: value for key, value in vars(args).items()
        if key not in _PARSER_ONLY and value is not None
    })
    values["scenario"] = args.command
    return ScenarioConfig.from_mapping(values)


def error_payload(error: ThermoError) -> Dict[str, Any]:
    payload: Dict[str, Any] = {
        "error": type(error).__name__,
        "message": str(error),
        "exit_code": error.exit_code,
    }
    if isinstance(error, ConstraintError):
        payload["step"] = error.step
    return payload


def _report_failure(error: ThermoError) -> int:
    logger.error("Scenario failed", error=str(error), exc_info=True)
    sys.stderr.write(json.dumps(error_payload(error), sort_keys=True) + "\n")
    return error.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one scenario.

    Returns:
        int: 0 on success, 2 configuration error (including unreadable inputs
        and unwritable outputs), 3 out-of-scope request, 4 validation, search
        or numerical failure
    """
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        if args.log_level:
            setup_logging(args.log_level)

        error = validate_config()
        if error:
            raise ConfigError(error)

        config = config_from_args(args)
        result = run_scenario(config)
        report = build_report(
            scenario=config.scenario.value,
            inputs=config.inputs(),
            tolerances=config.tolerances(),
            seed=config.seed,
            results=result.results,
        )

        if config.output_format is OutputFormat.CSV:
            if result.table is None:
                raise ConfigError(f"Scenario {config.scenario.value} has no tabular output")
            write_csv_table(config.output, result.table)
        elif config.output is not None:
            write_json_report(config.output, report)
        else:
            sys.stdout.write(render_json(report))
            sys.stdout.flush()

        logger.info("Scenario finished", scenario=config.scenario.value,
                    exit_code=result.exit_code, artifacts=result.artifacts)
        return result.exit_code

    except ThermoError as e:
        return _report_failure(e)
    except OSError as e:
        return _report_failure(ConfigError(f"Cannot access {e.filename2 or e.filename}: {e.strerror or e}"))


if __name__ == "__main__":
    sys.exit(main())

from __future__ import annotations
import logging
import sys
from argparse import ArgumentParser, ArgumentTypeError, Namespace
from pathlib import Path
from typing import Any
from .config import ConfigLoader, available_presets
from .errors import ConfigError, exit_code
from .runner import Report, RunOptions, run


__all__ = ["main", "run_preset", "run_config", "run_sweep"]


def _window(text: str) -> tuple[float, float]:
    try:
        start, end = (float(v) for v in text.split(","))
    except ValueError as exc:
        raise ArgumentTypeError(
            f"expected two comma separated numbers, got '{text}'"
        ) from exc
    if not 0 <= start < end:
        raise ArgumentTypeError(f"empty or negative window '{text}'")
    return start, end


def _positive(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise ArgumentTypeError(f"not a number: '{text}'") from exc
    if value <= 0:
        raise ArgumentTypeError(f"must be positive, got {text}")
    return value


def _options(args: Namespace) -> RunOptions:
    return RunOptions(
        out=args.out,
        fmt=args.format,
        jobs=args.jobs,
        dt=args.dt,
        t_max=args.t_max,
        fit_window=args.fit_window,
    )


def _report(report: Report) -> None:
    print(f"Results written to '{report.out_dir}':")
    for path in report.files:
        print(f"  {path.name}")
    print(f"  {report.manifest.name}")


def _execute(config: dict[str, Any], options: RunOptions, source: str) -> int:
    try:
        report = run(config, options, source)
    except Exception as exc:  # pylint: disable=broad-exception-caught
        code = exit_code(exc)
        if code == 1:
            raise
        print(f"Error: {exc}")
        return code
    _report(report)
    return 0


def run_preset(name: str, options: RunOptions) -> int:
    """
    Run the shipped preset ``name``.

    :return: The exit code.
    """
    try:
        config = ConfigLoader().load_preset(name)
    except ConfigError as exc:
        print(f"Error: {exc}")
        return exit_code(exc)
    return _execute(config, options, f"preset:{name}")


def _load(path: Path) -> dict[str, Any]:
    return ConfigLoader().load(path)


def run_config(path: Path, options: RunOptions) -> int:
    """
    Run the configuration stored in ``path``, or the configuration
    recorded by a previous run manifest.

    :return: The exit code.
    """
    try:
        config = _load(path)
    except (ConfigError, OSError) as exc:
        print(f"Error: {exc}")
        return exit_code(exc)
    return _execute(config, options, str(path))


def run_sweep(path: Path, options: RunOptions) -> int:
    """
    Run a configuration holding a ``sweep`` section.

    :return: The exit code.
    """
    try:
        config = _load(path)
        if "sweep" not in config:
            raise ConfigError(f"{path}: no 'sweep' section found.")
    except (ConfigError, OSError) as exc:
        print(f"Error: {exc}")
        return exit_code(exc)
    return _execute(config, options, str(path))


def _add_run_arguments(parser: ArgumentParser) -> None:
    parser.add_argument(
        "--out",
        type=Path,
        help="Output directory. Defaults to the configuration 'output_dir', "
             "then to $NMQED_OUTPUT_DIR/<name>, then to the user data "
             "directory."
    )
    parser.add_argument(
        "--format",
        choices=["csv", "ndjson"],
        help="File format of the tables. Defaults to the configuration one."
    )
    parser.add_argument(
        "--jobs",
        type=int,
        default=1,
        help="Number of runs executed concurrently. Defaults to 1."
    )
    parser.add_argument(
        "--dt",
        type=_positive,
        help="Time step, overriding every run."
    )
    parser.add_argument(
        "--t-max",
        type=_positive,
        help="Duration, overriding every run."
    )
    parser.add_argument(
        "--fit-window",
        type=_window,
        metavar="START,END",
        help="Late fit window in units of T (two-atom) or of the round trip "
             "time (cavity array)."
    )
    parser.add_argument(
        "-v", "--verbose",
        action="count",
        default=0,
        help="Log progress (-v) or debugging details (-vv)."
    )


def _parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="nmqed",
        description="Non-Markovian collective emission of atoms coupled "
                    "through delayed waveguide and cavity array feedback."
    )
    commands = parser.add_subparsers(dest="command", required=True)

    preset = commands.add_parser(
        "preset",
        help="Run one of the shipped presets."
    )
    preset.add_argument("name", nargs="?", help="The preset name.")
    preset.add_argument(
        "--list",
        action="store_true",
        help="Only print the available presets."
    )
    _add_run_arguments(preset)

    for name, text in (
        ("run", "Run a configuration file or a run manifest."),
        ("sweep", "Run a configuration with a 'sweep' section."),
    ):
        command = commands.add_parser(name, help=text)
        command.add_argument("config", type=Path, help="The JSON file.")
        _add_run_arguments(command)
    return parser


def main(argv: list[str] | None = None) -> int:
    """Entry point of the ``nmqed`` command."""
    parser = _parser()
    args = parser.parse_args(sys.argv[1:] if argv is None else argv)

    if args.verbose:
        logging.basicConfig(
            level=logging.DEBUG if args.verbose > 1 else logging.INFO,
            format="%(asctime)s %(name)s %(levelname)s: %(message)s"
        )

    if args.command == "preset":
        if args.list or not args.name:
            print("\n".join(available_presets()))
            return 0
    if args.jobs < 1:
        print(f"Error: --jobs must be at least 1, got {args.jobs}.")
        return 2
    if args.command == "preset":
        return run_preset(args.name, _options(args))
    if args.command == "run":
        return run_config(args.config, _options(args))
    return run_sweep(args.config, _options(args))

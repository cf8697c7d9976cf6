"""
nonlocal-spectra CLI

Command-line interface for principal spectrum computations. Every subcommand
reads a run file (--config), writes its outputs and a manifest into --output,
and exits with 0 on success, 2 on invalid input and 3 on any other failure.
"""

import logging
import sys
from typing import Any, Dict, List, Optional

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from . import __version__
from .config.settings import get_settings
from .core.engine import COMMANDS, RunResult, SpectraEngine
from .core.exceptions import InputError, NonlocalSpectraError, UnknownSubcommand
from .core.parser import load_config

# Setup rich console
console = Console(stderr=False)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3


def _configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else get_settings().log_level
    logging.basicConfig(
        level=logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
    )
    logging.getLogger("nonlocal_spectra").setLevel(level)


@click.group()
@click.version_option(__version__)
@click.option('--verbose', '-v', is_flag=True, help='Enable verbose logging')
@click.pass_context
def main(ctx, verbose):
    """
    nonlocal-spectra - principal eigenvalues of time-periodic nonlocal dispersal operators.
    """
    _configure_logging(verbose)
    ctx.ensure_object(dict)
    ctx.obj['verbose'] = verbose


def _run_options(func):
    func = click.option('--jobs', '-j', type=click.IntRange(min=1), default=None,
                        help='Worker count for sweeps (NONLOCAL_SPECTRA_JOBS overrides)')(func)
    func = click.option('--output', '-o', type=click.Path(file_okay=False), default=None,
                        help='Output directory')(func)
    func = click.option('--config', '-c', 'config_path', type=click.Path(dir_okay=False),
                        required=True, help='Run file (JSON or YAML)')(func)
    return func


def _execute(command: str, config_path: str, output: Optional[str], jobs: Optional[int]) -> RunResult:
    config = load_config(config_path)
    result = SpectraEngine().run(config, command=command, output_dir=output, jobs=jobs)
    _show_summary(result)
    return result


def _summary_rows(result: RunResult) -> List[List[str]]:
    payload: Dict[str, Any] = result.payload
    keys = ("lambda1", "lambda_star", "is_principal", "radius", "iters", "C",
            "power", "dense", "difference", "strong_mp", "strict_mp")
    rows = [[key, str(payload[key])] for key in keys if key in payload]
    if "verdict" in payload:
        rows.append(["holds", str(payload["verdict"]["holds"])])
        rows.append(["worst_residual", str(payload["verdict"]["worst_residual"])])
    if "points" in payload:
        for point in payload["points"]:
            rows.append([f"{payload['parameter']}={point['value']:g}", str(point["lambda1"])])
    return rows


def _show_summary(result: RunResult) -> None:
    table = Table(title=result.command)
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="green")
    for name, value in _summary_rows(result):
        table.add_row(name, value)
    console.print(table)
    console.print(f"[green]✓[/green] {result.command} finished")
    console.print(f"[blue]Output directory:[/blue] {result.output_dir}")
    for path in result.files:
        console.print(f"  • {path.name}")
    for warning in result.warnings:
        console.print(f"[yellow]Warning:[/yellow] {warning}")


def _register(name: str, help_text: str) -> None:
    @main.command(name=name, help=help_text)
    @_run_options
    def command(config_path, output, jobs):
        _execute(name, config_path, output, jobs)


_HELP = {
    "eig": "Principal spectrum point and periodic eigenfunction.",
    "sweep-d": "Sweep the dispersal rate D against its limits.",
    "sweep-sigma": "Sweep the dispersal range sigma (one sweep per k).",
    "poincare": "Poincare constant of the nonlocal Dirichlet form.",
    "certify": "Certify a test pair and report Collatz-Wielandt bounds.",
    "mp-check": "Maximum-principle verdict with certificate, or a shift audit.",
    "oracle-compare": "Compare power iteration with the dense eigensolver.",
}
for _name in COMMANDS:
    _register(_name, _HELP[_name])


def run(argv: Optional[List[str]] = None) -> int:
    """
    Run the CLI and return the exit code instead of exiting.

    Args:
        argv: arguments without the program name; defaults to sys.argv[1:]

    Returns:
        0 on success, 2 on invalid input, 3 on solver or other package errors
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    verbose = "-v" in argv or "--verbose" in argv

    try:
        positional = [a for a in argv if not a.startswith("-")]
        if positional and positional[0] not in main.commands:
            raise UnknownSubcommand(
                f"unknown subcommand {positional[0]!r}; expected one of {', '.join(COMMANDS)}"
            )
        main.main(args=argv, prog_name="nonlocal-spectra", standalone_mode=False)
        return EXIT_OK
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.ClickException as e:
        e.show()
        return EXIT_INPUT
    except click.exceptions.Abort:
        return EXIT_INPUT
    except InputError as e:
        console.print(f"[red]Error:[/red] {e}")
        return EXIT_INPUT
    except NonlocalSpectraError as e:
        console.print(f"[red]Error:[/red] {e}")
        if verbose:
            console.print_exception()
        return EXIT_SOLVER
    except OSError as e:
        console.print(f"[red]Error:[/red] {e}")
        return EXIT_SOLVER


def cli_entry() -> None:
    sys.exit(run())


if __name__ == '__main__':
    cli_entry()

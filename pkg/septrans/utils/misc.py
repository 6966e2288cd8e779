"""Output helpers shared by the top-level commands and the channel sub-app."""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import typer
from rich.console import Console
from tabulate import tabulate

from septrans import __app_name__, __version__
from septrans.logger import SEPTRANS_THEME
from septrans.schemas.models import JsonEnvelope, Settings
from septrans.utils.config import load_settings
from septrans.utils.files import file_digest

# Exit codes are part of the command-line contract
EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT_ERROR = 2
EXIT_OPEN_REGION = 3

# Results go to stdout, diagnostics to stderr
console = Console(theme=SEPTRANS_THEME)
err_console = Console(theme=SEPTRANS_THEME, stderr=True)


@dataclass
class CliState:
    settings: Settings
    verbose: bool = False


def settings_from(ctx: Optional[typer.Context]) -> Settings:
    """Settings stored by the root callback, loaded afresh when absent."""
    if ctx is not None and isinstance(ctx.obj, CliState):
        return ctx.obj.settings
    return load_settings()


def fail(message: str, code: int = EXIT_INPUT_ERROR) -> typer.Exit:
    err_console.print(f"[error]{message}[/error]", markup=True, highlight=False)
    return typer.Exit(code)


def format_real(x: float) -> str:
    """Shortest round-tripping decimal form."""
    return repr(float(x))


def format_coefficient(x: float, places: int = 10) -> str:
    """Truncate to ``places`` decimals after rounding away float noise at 1e-12."""
    text = f"{float(x):.{places + 2}f}"[:-2].rstrip("0")
    return text + "0" if text.endswith(".") else text


def format_complex(z: complex, digits: int = 6) -> str:
    z = complex(z)
    if abs(z.imag) < 10 ** (-digits):
        return f"{z.real:.{digits}g}"
    if abs(z.real) < 10 ** (-digits):
        return f"{z.imag:.{digits}g}j"
    return f"{z.real:.{digits}g}{z.imag:+.{digits}g}j"


def format_vector(values: Sequence[complex], digits: int = 6) -> str:
    return ", ".join(format_complex(z, digits) for z in np.ravel(values))


def format_phase(theta: Optional[float]) -> str:
    return "-" if theta is None else f"{theta:.6f}"


def format_matrix(matrix, digits: int = 6) -> str:
    rows = [[format_complex(z, digits) for z in row] for row in np.atleast_2d(matrix)]
    return tabulate(rows, tablefmt="plain", stralign="right")


def render_json(tol: float, inputs: Sequence[Path], result: Any) -> str:
    """Envelope with tool version, tolerance and input hashes."""
    envelope = JsonEnvelope(
        tool=__app_name__,
        version=__version__,
        tol=tol,
        inputs={str(path): file_digest(path) for path in inputs},
        result=result,
    )
    return envelope.model_dump_json(indent=2)


def emit_json(tol: float, inputs: Sequence[Path], result: Any) -> None:
    typer.echo(render_json(tol, inputs, result))

from typing import Annotated, Optional

import typer
from rich.panel import Panel
from rich.table import Table

from septrans import ruchannel
from septrans.schemas.models import SeptransError
from septrans.utils.config import resolve_tol
from septrans.utils.misc import (
    EXIT_NEGATIVE,
    EXIT_OK,
    console,
    emit_json,
    fail,
    format_real,
    settings_from,
)

app = typer.Typer()


@app.command("example", help="Cross-check the two-qubit X (x) Z channel at weight p")
def example(
    ctx: typer.Context,
    p: Annotated[float, typer.Argument(help="Weight of the identity term, 0 < p < 1")],
    samples: Annotated[
        int, typer.Option("--samples", "-n", help="Family members sampled per sign")
    ] = ruchannel.EXAMPLE_SAMPLES,
    seed: Annotated[int, typer.Option("--seed", help="Sampling seed")] = 0,
    tol: Annotated[
        Optional[float], typer.Option("--tol", help="Numerical tolerance")
    ] = None,
    json_output: Annotated[
        bool, typer.Option("--json", help="Emit machine-readable JSON")
    ] = False,
) -> None:
    try:
        tol_used = resolve_tol(tol, settings_from(ctx))
        report = ruchannel.cross_check_example(p, samples, seed, tol_used)
    except SeptransError as e:
        raise fail(str(e))

    code = EXIT_OK if report.passed else EXIT_NEGATIVE
    if json_output:
        emit_json(tol_used, [], {**report.model_dump(), "passed": report.passed})
        raise typer.Exit(code)

    table = Table(title=f"X (x) Z channel, p = {format_real(p)}")
    table.add_column("Check", style="cyan")
    table.add_column("Result", style="green")
    table.add_row("fixed-point fidelity", format_real(report.fixed_point_fidelity))
    table.add_row("dual matrix matches", str(report.dual_matches))
    table.add_row(
        "+1 family deterministic",
        f"{report.plus_family_deterministic}/{report.samples_per_family}",
    )
    table.add_row(
        "-1 family deterministic",
        f"{report.minus_family_deterministic}/{report.samples_per_family}",
    )
    table.add_row("families recovered", str(report.families_recovered))
    table.add_row("collection consistent", str(report.collection_consistent))
    console.print(table)

    style = "green" if report.passed else "red"
    status = "passed" if report.passed else "FAILED"
    console.print(Panel(f"[bold]{status}[/bold]", border_style=style))
    raise typer.Exit(code)

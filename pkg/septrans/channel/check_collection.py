from pathlib import Path
from typing import Annotated, List, Optional

import typer
from rich.table import Table

from septrans import ruchannel
from septrans.logger import get_logger
from septrans.schemas.models import SeptransError
from septrans.utils.config import resolve_tol
from septrans.utils.files import load_channel_file, load_state_file, state_to_file
from septrans.utils.misc import (
    EXIT_NEGATIVE,
    EXIT_OK,
    console,
    emit_json,
    fail,
    settings_from,
)

_logger = get_logger("cli.channel")

app = typer.Typer()


def _report_payload(report: ruchannel.CollectionReport) -> dict:
    return {
        "pair_condition_A": report.pair_condition_A,
        "pair_condition_B": report.pair_condition_B,
        "reduced_condition_A": report.reduced_condition_A,
        "reduced_condition_B": report.reduced_condition_B,
        "all_deterministic": report.all_deterministic,
        "per_state": [
            {
                "deterministic": outcome.deterministic,
                "phi": (
                    state_to_file(outcome.phi).model_dump()
                    if outcome.phi is not None
                    else None
                ),
            }
            for outcome in report.per_state
        ],
        "failures_A": [list(key[1:]) for key in report.failures("A")],
        "failures_B": [list(key[1:]) for key in report.failures("B")],
        "worst_residual": report.worst_residual,
    }


@app.command("check-collection", help="Check the pair conditions on a collection of states")
def check_collection(
    ctx: typer.Context,
    channel_file: Annotated[Path, typer.Argument(help="Channel file (JSON or YAML)")],
    state_files: Annotated[List[Path], typer.Argument(help="State files")],
    tol: Annotated[
        Optional[float], typer.Option("--tol", help="Numerical tolerance")
    ] = None,
    json_output: Annotated[
        bool, typer.Option("--json", help="Emit machine-readable JSON")
    ] = False,
) -> None:
    try:
        tol_used = resolve_tol(tol, settings_from(ctx))
        ch = load_channel_file(channel_file, tol_used)
        collection = [load_state_file(path) for path in state_files]
        report = ruchannel.check_collection(ch, collection, tol_used)
    except SeptransError as e:
        raise fail(str(e))

    code = EXIT_OK if report.all_deterministic else EXIT_NEGATIVE
    if json_output:
        emit_json(tol_used, [channel_file, *state_files], _report_payload(report))
        raise typer.Exit(code)

    table = Table(title="Collection conditions")
    table.add_column("Condition", style="cyan")
    table.add_column("Holds", style="green")
    table.add_row("pair condition (U side)", str(report.pair_condition_A))
    table.add_row("pair condition (V side)", str(report.pair_condition_B))
    table.add_row("reduced, m = 1 (U side)", str(report.reduced_condition_A))
    table.add_row("reduced, m = 1 (V side)", str(report.reduced_condition_B))
    console.print(table)

    states_table = Table(title="States")
    states_table.add_column("File", style="cyan")
    states_table.add_column("Deterministic", style="green")
    for path, outcome in zip(state_files, report.per_state):
        states_table.add_row(str(path), "yes" if outcome.deterministic else "no")
    console.print(states_table)

    if report.all_deterministic:
        console.print("[success]all deterministic[/success]")
    else:
        _logger.info(f"{len(report.failures('A'))} failing U-side tuples")
        console.print("[warning]not all states are mapped to pure states[/warning]")
    raise typer.Exit(code)

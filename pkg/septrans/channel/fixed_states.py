from pathlib import Path
from typing import Annotated, Optional

import typer
from rich.table import Table

from septrans import ruchannel
from septrans.logger import get_logger
from septrans.schemas.models import SeptransError, encode_matrix
from septrans.utils.config import resolve_tol
from septrans.utils.files import load_channel_file
from septrans.utils.misc import (
    EXIT_OK,
    console,
    emit_json,
    fail,
    format_complex,
    format_matrix,
    settings_from,
)

_logger = get_logger("cli.channel")

app = typer.Typer()


def _eigenspace_payload(space: ruchannel.FixedEigenspace) -> dict:
    return {
        "phases": [[z.real, z.imag] for z in map(complex, space.phases)],
        "dimension": space.dimension,
        "max_member_rank": space.max_member_rank,
        "has_full_rank_member": space.has_full_rank_member,
        "basis": [encode_matrix(element) for element in space.basis],
    }


@app.command("fixed-states", help="Solve for states mapped to pure states by a channel")
def fixed_states(
    ctx: typer.Context,
    channel_file: Annotated[Path, typer.Argument(help="Channel file (JSON or YAML)")],
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
        family = ruchannel.fixed_states(ch, tol_used)
    except SeptransError as e:
        raise fail(str(e))

    _logger.info(f"{len(family.eigenspaces)} eigenspace(s) for a {len(ch)}-term channel")

    if json_output:
        emit_json(
            tol_used,
            [channel_file],
            {
                "unconstrained": family.unconstrained,
                "eigenspaces": [_eigenspace_payload(s) for s in family.eigenspaces],
                "compatibility": family.compatibility.tolist(),
            },
        )
        raise typer.Exit(EXIT_OK)

    if family.unconstrained:
        console.print(f"unconstrained (dimension {ch.d * ch.d})")
        raise typer.Exit(EXIT_OK)

    for index, space in enumerate(family.eigenspaces, start=1):
        table = Table(title=f"Eigenspace {index}")
        table.add_column("Property", style="cyan")
        table.add_column("Value", style="green")
        table.add_row("phases", ", ".join(format_complex(z) for z in space.phases))
        table.add_row("dimension", str(space.dimension))
        table.add_row("max member rank", str(space.max_member_rank))
        table.add_row("full-rank member", "yes" if space.has_full_rank_member else "no")
        console.print(table)
        for element in space.basis:
            console.print(format_matrix(element), highlight=False)
            console.print()

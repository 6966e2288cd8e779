from pathlib import Path
from typing import Annotated, Optional

import typer
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from septrans import __app_name__, __version__, criteria, lab, sepops, states
from septrans.channel import app as channel_app
from septrans.logger import get_logger, setup_logging
from septrans.schemas.models import SeptransError, encode_matrix
from septrans.utils.config import load_settings, resolve_tol
from septrans.utils.files import load_operation_file, load_state_file, state_to_file
from septrans.utils.misc import (
    EXIT_NEGATIVE,
    EXIT_OK,
    EXIT_OPEN_REGION,
    CliState,
    console,
    emit_json,
    fail,
    format_coefficient,
    format_phase,
    format_real,
    format_vector,
    settings_from,
)

_logger = get_logger("cli")

app = typer.Typer(
    no_args_is_help=True,
    rich_markup_mode="rich",
    help=f"[bold blue]{__app_name__}[/bold blue] - deterministic separable transformations of bipartite pure states",
)

TolOption = Annotated[
    Optional[float],
    typer.Option("--tol", help="Numerical tolerance (default: settings or 1e-9)"),
]
JsonOption = Annotated[bool, typer.Option("--json", help="Emit machine-readable JSON")]

VERDICT_EXIT_CODES = {
    criteria.VerdictTag.EQUAL_SPECTRA: EXIT_OK,
    criteria.VerdictTag.LOCC_POSSIBLE: EXIT_OK,
    criteria.VerdictTag.IMPOSSIBLE_RANK: EXIT_NEGATIVE,
    criteria.VerdictTag.IMPOSSIBLE_PRODUCT: EXIT_NEGATIVE,
    criteria.VerdictTag.OPEN_REGION: EXIT_OPEN_REGION,
}


@app.command("schmidt")
def schmidt_cmd(
    ctx: typer.Context,
    state_file: Annotated[Path, typer.Argument(help="State file (JSON or YAML)")],
    tol: TolOption = None,
    json_output: JsonOption = False,
) -> None:
    """Print the Schmidt coefficients and rank of a state"""
    try:
        settings = settings_from(ctx)
        tol_used = resolve_tol(tol, settings)
        psi = load_state_file(state_file)
        decomposition = states.schmidt_decompose(psi, settings.rank_cutoff)
    except SeptransError as e:
        raise fail(str(e))

    positive = decomposition.coefficients[: decomposition.rank]
    if json_output:
        emit_json(
            tol_used,
            [state_file],
            {
                "coefficients": decomposition.coefficients.tolist(),
                "rank": decomposition.rank,
                "basis_a": encode_matrix(decomposition.basis_a),
                "basis_b": encode_matrix(decomposition.basis_b),
                "state": state_to_file(psi).model_dump(),
            },
        )
        return

    console.print(
        f"coefficients: {', '.join(format_coefficient(c) for c in positive)}",
        highlight=False,
    )
    console.print(f"rank: {decomposition.rank}", highlight=False)


@app.command("verdict")
def verdict_cmd(
    ctx: typer.Context,
    psi_file: Annotated[Path, typer.Argument(help="Source state file")],
    phi_file: Annotated[Path, typer.Argument(help="Target state file")],
    tol: TolOption = None,
    json_output: JsonOption = False,
) -> None:
    """Classify whether psi can be mapped to phi by a separable operation"""
    try:
        tol_used = resolve_tol(tol, settings_from(ctx))
        psi = load_state_file(psi_file)
        phi = load_state_file(phi_file)
        verdict = criteria.verdict_for_states(psi, phi, tol_used)
    except SeptransError as e:
        raise fail(str(e))

    code = VERDICT_EXIT_CODES[verdict.tag]
    if json_output:
        emit_json(
            tol_used,
            [psi_file, phi_file],
            {
                "tag": verdict.tag.value,
                "description": verdict.description,
                "details": verdict.details.model_dump(),
            },
        )
        raise typer.Exit(code)

    details = verdict.details
    table = Table(title="Details")
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("Schmidt rank (psi)", str(details.r_psi))
    table.add_row("Schmidt rank (phi)", str(details.r_phi))
    table.add_row("coefficient product (psi)", format_real(details.product_psi))
    table.add_row("coefficient product (phi)", format_real(details.product_phi))
    table.add_row("phi majorizes psi", str(details.majorization))
    if details.equality_case:
        table.add_row("equal products", "True")

    console.print(
        Panel(
            Text.assemble((verdict.tag.value, "bold"), "\n", verdict.description),
            title="Verdict",
            border_style="blue",
        )
    )
    console.print(table)
    raise typer.Exit(code)


@app.command("verify-op")
def verify_op_cmd(
    ctx: typer.Context,
    op_file: Annotated[Path, typer.Argument(help="Operation file (JSON or YAML)")],
    psi_file: Annotated[Path, typer.Argument(help="Input state file")],
    tol: TolOption = None,
    json_output: JsonOption = False,
    unitarity: Annotated[
        bool,
        typer.Option(
            "--unitarity", help="Also test each restricted Kraus factor for unitarity"
        ),
    ] = False,
) -> None:
    """Check whether an operation maps a state to a single pure state"""
    try:
        tol_used = resolve_tol(tol, settings_from(ctx))
        op = load_operation_file(op_file, tol_used)
        psi = load_state_file(psi_file)
        result = sepops.check_deterministic(op, psi, tol_used)
        certificate = sepops.unitary_proportionality(op, psi) if unitarity else None
    except SeptransError as e:
        raise fail(str(e))

    deterministic = isinstance(result, sepops.DeterministicCertificate)
    code = EXIT_OK if deterministic else EXIT_NEGATIVE

    if json_output:
        payload: dict = {"deterministic": deterministic}
        if isinstance(result, sepops.DeterministicCertificate):
            payload["phi"] = state_to_file(result.phi).model_dump()
            payload["probabilities"] = list(result.probabilities)
            payload["branch_phases"] = list(result.branch_phases)
        else:
            payload["witness_m"] = result.witness_m
            payload["residual"] = result.residual
        if certificate is not None:
            payload["proportionality"] = {
                "all_proportional": certificate.all_proportional,
                "per_pair": [pair.model_dump() for pair in certificate.per_pair],
                "pairwise_factors": (
                    certificate.pairwise_factors.tolist()
                    if certificate.pairwise_factors is not None
                    else None
                ),
            }
        emit_json(tol_used, [op_file, psi_file], payload)
        raise typer.Exit(code)

    if isinstance(result, sepops.DeterministicCertificate):
        console.print("[success]deterministic[/success]")
        console.print(f"phi: {format_vector(result.phi.amplitudes)}", highlight=False)
        console.print(
            f"p: [{', '.join(format_real(p) for p in result.probabilities)}]",
            highlight=False,
        )
        console.print(
            f"phases: [{', '.join(format_phase(t) for t in result.branch_phases)}]",
            highlight=False,
        )
    else:
        console.print("[warning]not deterministic[/warning]")
        console.print(
            f"witness branch: {result.witness_m} (residual {result.residual:.3e})",
            highlight=False,
        )

    if certificate is not None:
        table = Table(title="Unitary proportionality on the supports")
        table.add_column("m", style="cyan")
        table.add_column("A proportional", style="green")
        table.add_column("scale A")
        table.add_column("B proportional", style="green")
        table.add_column("scale B")
        for m, pair in enumerate(certificate.per_pair, start=1):
            table.add_row(
                str(m),
                str(pair.unitary_proportional_A),
                f"{pair.scale_A:.6g}",
                str(pair.unitary_proportional_B),
                f"{pair.scale_B:.6g}",
            )
        console.print(table)
    raise typer.Exit(code)


SWEEP_HELP = (
    f"One of: {', '.join(lab.SWEEPS)}; aliases: {', '.join(lab.SWEEP_ALIASES)}"
)


@app.command("sweep")
def sweep_cmd(
    ctx: typer.Context,
    name: Annotated[str, typer.Argument(help=SWEEP_HELP)],
    trials: Annotated[int, typer.Option("--trials", "-n", help="Number of trials")] = 100,
    seed: Annotated[int, typer.Option("--seed", "-s", help="Master seed")] = 0,
    workers: Annotated[
        Optional[int], typer.Option("--workers", "-w", help="Worker threads")
    ] = None,
    json_output: JsonOption = False,
) -> None:
    """Run a seeded property sweep"""
    try:
        settings = settings_from(ctx)
        report = lab.run_sweep(name, trials, seed, workers or settings.workers)
    except SeptransError as e:
        raise fail(str(e))

    code = EXIT_OK if report.passed else EXIT_NEGATIVE
    if json_output:
        emit_json(settings.tol, [], report.model_dump())
        raise typer.Exit(code)

    table = Table(title=f"Sweep {report.name}")
    table.add_column("Field", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("trials", str(report.trials))
    table.add_row("failures", str(report.failures))
    table.add_row("worst residual", f"{report.worst_residual:.3e}")
    table.add_row("elapsed", f"{report.elapsed:.2f}s")
    if report.seeds_of_failures:
        shown = ", ".join(str(s) for s in report.seeds_of_failures[:10])
        table.add_row("failing seeds", shown)
    console.print(table)
    raise typer.Exit(code)


app.add_typer(
    channel_app,
    name="channel",
    help="Separable random unitary channels: fixed states and collections",
)


def _version_callback(value: bool) -> None:
    """Show version information."""
    if value:
        version_text = Text(f"{__app_name__} v{__version__}", style="bold green")
        console.print(Panel(version_text, title="Version", border_style="green"))
        raise typer.Exit()


@app.callback()
def main(
    ctx: typer.Context,
    version: Annotated[
        Optional[bool],
        typer.Option(
            "--version",
            "-v",
            help="Show the application's version and exit.",
            callback=_version_callback,
            is_eager=True,
        ),
    ] = None,
    verbose: Annotated[
        bool, typer.Option("--verbose", "-V", help="Enable verbose output.")
    ] = False,
    config: Annotated[
        Optional[Path],
        typer.Option(
            "--config", "-c", help="Settings file (default: septrans.yaml if present)."
        ),
    ] = None,
    log_file: Annotated[
        Optional[Path], typer.Option("--log-file", help="Also write logs to this file.")
    ] = None,
) -> None:
    """
    Decide, certify and property-test deterministic separable transformations.

    [bold]Examples:[/bold]

    • [dim]septrans schmidt psi.json[/dim] - Schmidt coefficients
    • [dim]septrans verdict psi.json phi.json[/dim] - transformability verdict
    • [dim]septrans verify-op op.json psi.json --unitarity[/dim] - check a given map
    • [dim]septrans channel example 0.3[/dim] - two-qubit channel cross-check
    • [dim]septrans sweep minkowski --trials 1000 --seed 2[/dim] - property sweep
    """
    try:
        settings = load_settings(config)
    except SeptransError as e:
        raise fail(str(e))

    setup_logging(
        verbose=verbose,
        log_file=log_file,
        log_level="DEBUG" if verbose else settings.log_level,
    )
    _logger.debug(f"Settings: {settings.model_dump()}")
    ctx.obj = CliState(settings=settings, verbose=verbose)

"""neurocause CLI entry point."""

from __future__ import annotations

import logging
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Annotated

import click
import typer

from neurocause.errors import EXIT_ANALYSIS, EXIT_IO, EXIT_USAGE, NeurocauseError

app = typer.Typer(
    name="neurocause",
    help="Causal interpretation of encoding and decoding models.",
    no_args_is_help=True,
)

_LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


@app.callback()
def _root(
    verbose: Annotated[
        int, typer.Option("--verbose", "-v", count=True, help="-v for INFO, -vv for DEBUG.")
    ] = 0,
) -> None:
    logging.basicConfig(
        level=_LOG_LEVELS[min(verbose, len(_LOG_LEVELS) - 1)],
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


@contextmanager
def _command_errors() -> Iterator[None]:
    try:
        yield
    except NeurocauseError as exc:
        typer.echo(f"Error: {exc}", err=True)
        raise typer.Exit(exc.exit_code) from exc
    except OSError as exc:
        typer.echo(f"I/O error: {exc}", err=True)
        raise typer.Exit(EXIT_IO) from exc


def _notice(message: str) -> None:
    typer.echo(message, err=True)


def _usage(message: str) -> typer.Exit:
    typer.echo(f"Error: {message}", err=True)
    return typer.Exit(EXIT_USAGE)


@app.command()
def simulate(
    output: Annotated[Path, typer.Option("--output", "-o", help="Dataset CSV to write.")],
    fixture: Annotated[str | None, typer.Option(help="Canonical fixture name.")] = None,
    scm: Annotated[Path | None, typer.Option(help="SCM spec file.")] = None,
    samples: Annotated[int, typer.Option("--samples", "-n", help="Number of rows.")] = 1000,
    seed: Annotated[int, typer.Option(help="Sampling seed.")] = 0,
    discrete: Annotated[
        bool, typer.Option("--discrete", help="Threshold continuous columns at 0.")
    ] = False,
) -> None:
    """Sample a dataset from a fixture or SCM spec and print its true graph."""
    from neurocause.fixtures import canonical_fixture
    from neurocause.graph import dag_to_text
    from neurocause.scm import read_scm, sample, write_dataset_csv

    if (fixture is None) == (scm is None):
        raise _usage("give exactly one of --fixture or --scm")
    with _command_errors():
        model = canonical_fixture(fixture) if fixture is not None else read_scm(scm)  # type: ignore[arg-type]
        data = sample(model, samples, seed)
        if discrete:
            data = data.as_discrete()
        write_dataset_csv(data, output)
        typer.echo(dag_to_text(model.dag), nl=False)


@app.command()
def analyze(
    fixture: Annotated[str | None, typer.Option(help="Oracle mode on a canonical fixture.")] = None,
    oracle: Annotated[
        Path | None, typer.Option("--oracle", help="Oracle mode on an SCM spec's graph.")
    ] = None,
    data: Annotated[Path | None, typer.Option(help="Data mode on a dataset CSV.")] = None,
    alpha: Annotated[float | None, typer.Option(help="CI test level.")] = None,
    pipeline: Annotated[
        str | None, typer.Option(help="continuous (Fisher z) or discrete (G-test).")
    ] = None,
    bonferroni: Annotated[
        bool | None, typer.Option("--bonferroni/--no-bonferroni", help="Correct alpha.")
    ] = None,
    sufficiency: Annotated[
        bool | None,
        typer.Option("--sufficiency/--no-sufficiency", help="Assume no hidden common causes."),
    ] = None,
    max_hidden: Annotated[
        int | None, typer.Option(help="Latent roots allowed without sufficiency.")
    ] = None,
    combine: Annotated[
        bool | None, typer.Option("--combine/--no-combine", help="Run structure search.")
    ] = None,
    rfe: Annotated[
        bool | None, typer.Option("--rfe/--no-rfe", help="Also run permutation RFE.")
    ] = None,
    seed: Annotated[int | None, typer.Option(help="Seed for RFE resampling.")] = None,
    output: Annotated[
        Path | None, typer.Option("--output", "-o", help="Write the JSON report here.")
    ] = None,
    config: Annotated[
        Path | None, typer.Option("--config", help="TOML file with an [analyze] table.")
    ] = None,
) -> None:
    """Relevance sets and causal claims for one dataset or graph."""
    from neurocause.analysis import run_analysis
    from neurocause.config import build_config
    from neurocause.report import report_to_json, report_to_text

    flags = {
        "fixture": fixture,
        "scm": oracle,
        "data": data,
        "alpha": alpha,
        "pipeline": pipeline,
        "bonferroni": bonferroni,
        "sufficiency": sufficiency,
        "max_hidden": max_hidden,
        "combine": combine,
        "rfe": rfe,
        "seed": seed,
        "output": output,
    }
    with _command_errors():
        settings = build_config(flags, config)
        report = run_analysis(settings, notify=_notice)
        if settings.output is not None:
            settings.output.write_text(report_to_json(report), encoding="utf-8")
        typer.echo(report_to_text(report), nl=False)


@app.command()
def demo() -> None:
    """Run every canonical fixture in oracle mode and verify the results."""
    from neurocause.analysis import format_demo_row, run_demo

    with _command_errors():
        rows = run_demo()
    for row in rows:
        for line in format_demo_row(row):
            typer.echo(line)
    failed = [row.scenario.name for row in rows if not row.ok]
    if failed:
        typer.echo(f"{len(failed)} fixture(s) deviate: {', '.join(failed)}", err=True)
        raise typer.Exit(EXIT_ANALYSIS)
    typer.echo(f"All {len(rows)} fixtures reproduced")


@app.command(name="enumerate")
def enumerate_command(
    variables: Annotated[
        str, typer.Option(help='Ordered "name:role" list, e.g. "S:stimulus,X1:feature".')
    ],
    statements: Annotated[
        Path | None, typer.Option(help="File of indep/dep statements, one per line.")
    ] = None,
    constraint: Annotated[
        list[str] | None,
        typer.Option("--constraint", help="kind[:arg], e.g. randomized-root:S. Repeatable."),
    ] = None,
) -> None:
    """Print every structure consistent with the statements, then the shared edges."""
    from neurocause.graph import Variable, format_edges, parse_constraint, parse_statement
    from neurocause.search import consistent_structures, shared_edges

    with _command_errors():
        declared = []
        for item in variables.split(","):
            name, sep, role = item.strip().partition(":")
            if not sep:
                raise _usage(f"variable {item.strip()!r} needs a role, e.g. {item.strip()}:feature")
            declared.append(Variable(name.strip(), role.strip()))  # type: ignore[arg-type]
        parsed = []
        if statements is not None:
            for line in statements.read_text(encoding="utf-8").splitlines():
                if line.strip() and not line.lstrip().startswith("#"):
                    parsed.append(parse_statement(line))
        constraints = [parse_constraint(text) for text in constraint or ()]
        structures = consistent_structures(declared, parsed, constraints)
        order = [v.name for v in declared]
        for i, dag in enumerate(structures, start=1):
            edges = format_edges(dag.sorted_edges(), dag.names)
            typer.echo(f"#{i}: " + (", ".join(edges) or "(no edges)"))
        typer.echo(f"{len(structures)} consistent structure(s)")
        if structures:
            shared = format_edges(shared_edges(structures), order)
            typer.echo("Shared edges: " + (", ".join(shared) or "(none)"))
        else:
            typer.echo("No structure is consistent with the statements", err=True)
            raise typer.Exit(EXIT_ANALYSIS)


@app.command()
def calibrate(
    test: Annotated[str, typer.Argument(help="fisher-z or g-test.")],
    trials: Annotated[int, typer.Option(help="Null datasets to simulate (>= 100).")] = 2000,
    alpha: Annotated[float, typer.Option(help="Test level.")] = 0.01,
    seed: Annotated[int, typer.Option(help="Simulation seed.")] = 0,
    samples: Annotated[int, typer.Option("--samples", "-n", help="Rows per dataset.")] = 500,
) -> None:
    """Empirical type-I error of a CI test under a simulated null."""
    from neurocause.calibrate import type_one_error

    with _command_errors():
        result = type_one_error(test, trials, alpha, seed, samples)
    low, high = result.interval
    band_low, band_high = result.band
    typer.echo(
        f"{result.test}: {result.rejections}/{result.trials} rejections, "
        f"rate {result.rate:.4f} (95% CI [{low:.4f}, {high:.4f}]) at alpha {result.alpha:g}"
    )
    if not result.accepted:
        typer.echo(f"Rate outside the acceptance band [{band_low:g}, {band_high:g}]", err=True)
        raise typer.Exit(EXIT_ANALYSIS)
    typer.echo(f"Within the acceptance band [{band_low:g}, {band_high:g}]")


@app.command()
def schema() -> None:
    """Print the JSON schema of analysis reports."""
    import json

    from neurocause.report import load_schema

    typer.echo(json.dumps(load_schema(), indent=2))


def main() -> None:
    """Console entry point; click's own usage errors exit with the usage code."""
    try:
        code = app(standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        sys.exit(EXIT_USAGE)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.Abort:
        typer.echo("Aborted", err=True)
        sys.exit(EXIT_USAGE)
    sys.exit(code if isinstance(code, int) else 0)


if __name__ == "__main__":
    main()

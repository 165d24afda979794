"""Command-line interface: ``pbox-expect run | converge | validate``.

Exit status is 0 on success, 2 for unreadable or invalid problem files and
3 when an engine fails.
"""
from __future__ import annotations

import sys
from pathlib import Path

import click

from .errors import PBoxError
from .problem import METHODS, ProblemError, load_problem
from .runner import (convergence, convergence_csv, convergence_table, fmt, results_csv,
                     results_table, run_problem, trace_csv)

EXIT_INPUT = 2
EXIT_ENGINE = 3


def _load(path: str):
    try:
        return load_problem(path)
    except ProblemError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)


def _engine_error(exc: Exception):
    click.echo(f"engine error: {exc}", err=True)
    sys.exit(EXIT_ENGINE)


def _write(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="")


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Lower and upper expectation bounds under p-box uncertainty."""


@main.command()
@click.argument("file", type=click.Path(dir_okay=False))
@click.option("--method", type=click.Choice(METHODS), default=None,
              help="Override the problem file's method.")
@click.option("--epsilon", type=float, default=None,
              help="Refine LP and random-set runs until their gaps are at most this.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for the sampled-member audit.")
@click.option("--trace-out", type=click.Path(dir_okay=False), default=None,
              help="CSV of the analytic extremizing CDF.")
@click.option("--trace-bound", type=click.Choice(["lower", "upper"]), default="lower",
              show_default=True, help="Which extremizer --trace-out writes.")
@click.option("--report-out", type=click.Path(dir_okay=False), default=None,
              help="Results CSV at full precision.")
@click.option("--timings/--no-timings", default=True, show_default=True,
              help="Include wall-clock seconds (omit for byte-identical reruns).")
def run(file, method, epsilon, seed, trace_out, trace_bound, report_out, timings):
    """Bound E[h] for the problem in FILE."""
    problem = _load(file)
    if epsilon is not None and not epsilon > 0:
        click.echo("error: --epsilon must be positive", err=True)
        sys.exit(EXIT_INPUT)
    try:
        out = run_problem(problem, method, epsilon, seed)
    except (PBoxError, ValueError, ArithmeticError) as exc:
        _engine_error(exc)
    if problem.name:
        click.echo(f"# {problem.name}")
    click.echo(results_table(out.results, timings), nl=False)
    for name, a in out.audits.items():
        click.echo(f"audit {name}: {a['count']} members, seed {a['seed']}, "
                   f"E in [{fmt(a['min'])}, {fmt(a['max'])}]")
    report_out = report_out or problem.output.get("report")
    trace_out = trace_out or problem.output.get("trace")
    if report_out:
        _write(report_out, results_csv(out.results, timings))
    if trace_out:
        if out.extremizers is None:
            click.echo("warning: no extremizing CDF for this problem; trace not written", err=True)
        else:
            ext = out.extremizers[0 if trace_bound == "lower" else 1]
            _write(trace_out, trace_csv(ext.trace(problem.pbox)))


@main.command()
@click.argument("file", type=click.Path(dir_okay=False))
@click.option("--sizes", required=True, help="Comma-separated discretization sizes.")
@click.option("--method", type=click.Choice(["lp", "randomset", "all"]), default=None)
@click.option("--sampler", type=click.Choice(["uniform", "quantile", "shape"]), default=None,
              help="LP point sampler (default: the problem file's).")
@click.option("--report-out", type=click.Path(dir_okay=False), default=None,
              help="Convergence CSV at full precision.")
def converge(file, sizes, method, sampler, report_out):
    """Tabulate E*, E** and the random-set sandwich across sizes."""
    problem = _load(file)
    try:
        ns = [int(s) for s in sizes.split(",") if s.strip()]
    except ValueError:
        click.echo(f"error: --sizes must be comma-separated integers, got {sizes!r}", err=True)
        sys.exit(EXIT_INPUT)
    if len(ns) < 2 or min(ns) < 2:
        click.echo("error: --sizes needs at least two sizes, each at least 2", err=True)
        sys.exit(EXIT_INPUT)
    try:
        header, rows = convergence(problem, ns, method, sampler)
    except (PBoxError, ValueError, ArithmeticError) as exc:
        _engine_error(exc)
    click.echo(convergence_table(header, rows), nl=False)
    if report_out:
        _write(report_out, convergence_csv(header, rows))


@main.command(name="validate")
@click.argument("file", type=click.Path(dir_okay=False))
def validate_cmd(file):
    """Check FILE against the schema and the p-box and shape invariants."""
    problem = _load(file)
    shape = problem.shape.kind
    if problem.shape.location is not None:
        shape += f" at {fmt(problem.shape.location)}"
    elif problem.shape.extrema:
        shape += f" with {len(problem.shape.extrema)} extrema"
    lo, hi = problem.pbox.domain
    click.echo(f"ok: domain [{fmt(lo)}, {fmt(hi)}], shape {shape}, method {problem.method}")


if __name__ == "__main__":
    main()

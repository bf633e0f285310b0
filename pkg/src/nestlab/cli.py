"""Command-line interface for nestlab.

Commands:
    analyze - Build the twin principal nest of a cubic and tabulate it
    check   - Check a combinatorial sequence for admissibility
    solve   - Find a symmetric cubic realizing a sequence
    ledger  - Run the separation-symbol ledger along a sequence
    walk    - Estimate drift of the level random walk

Exit codes:
    0 success, 2 not bimodal, 3 central return or outside the class,
    4 precision exhausted, 5 inadmissible sequence, 6 no parameter found,
    64 usage, syntax or configuration error.

Example:
    $ nestlab analyze positive 15.61986 --depth 6 --format csv
    $ nestlab check "A+,2,1;B-,2,1;C-,2,1"
    $ nestlab solve "A+,2,1;B-,2,1;C-,2,1;A+,2,1" --precision-bits 512
"""

from __future__ import annotations

import logging
import sys
from collections.abc import Callable
from dataclasses import replace
from typing import Any, NoReturn

import click

from nestlab import __version__
from nestlab.combinatorics import (
    CombSequence,
    SequenceSyntaxError,
    check_admissible,
    format_sequence,
    parse_sequence,
)
from nestlab.config import OutputFormat, RunConfig, env_var, load_config_file
from nestlab.cubic import (
    DEFAULT_PRECISION_BITS,
    CubicMap,
    NotBimodal,
    make_cubic,
    make_symmetric_cubic,
)
from nestlab.errors import ConfigError
from nestlab.ledger import growth_constant, run_ledger
from nestlab.nest import DEFAULT_MAX_ITER, Nest, NestError, NestStatus, build_nest
from nestlab.realization import (
    DEFAULT_MAX_EVALUATIONS,
    DEFAULT_TOLERANCE,
    SOLVER_MAX_ITER,
    NotAdmissible,
    NotFound,
    solve,
    verify,
)
from nestlab.serialize import dump_csv, dump_json, to_decimal, write_text
from nestlab.walk import (
    DEEP_LEVEL_CUTOFF,
    RETURN_LEVEL,
    InducedMapContext,
    WalkStats,
    deep_level_threshold,
    run_walks,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NOT_BIMODAL = 2
EXIT_NOT_IN_CLASS = 3
EXIT_PRECISION = 4
EXIT_INADMISSIBLE = 5
EXIT_NOT_FOUND = 6
EXIT_USAGE = 64

ANALYZE_HEADER = ("n", "I_width", "J_width", "lambda", "S", "S_hat", "theta", "r", "t", "status")
LEDGER_HEADER = ("step", "beta", "delta", "mu_lower", "rule_fired")
WALK_HEADER = ("sample_id", "k", "level", "stop_reason")

_STATUS_EXIT = {
    NestStatus.OK: EXIT_OK,
    NestStatus.CENTRAL_RETURN: EXIT_NOT_IN_CLASS,
    NestStatus.NOT_IN_CLASS_G: EXIT_NOT_IN_CLASS,
    NestStatus.PRECISION_EXHAUSTED: EXIT_PRECISION,
}


def _fail(message: str, code: int) -> NoReturn:
    click.echo(click.style(f"Error: {message}", fg="red"), err=True)
    sys.exit(code)


class _NestlabGroup(click.Group):
    """Click group reporting usage errors with exit code 64."""

    def parse_args(self, ctx: click.Context, args: list[str]) -> list[str]:
        try:
            return super().parse_args(ctx, args)
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise


# Shared options. Parameter names match RunConfig fields so that a
# configuration file can supply them through the context's default map.

Decorator = Callable[[Callable[..., Any]], Callable[..., Any]]


def _precision_option(f: Callable[..., Any]) -> Callable[..., Any]:
    return click.option(
        "--precision-bits",
        "precision_bits",
        type=int,
        default=DEFAULT_PRECISION_BITS,
        show_default=True,
        envvar=env_var("precision_bits"),
        help="Working precision in bits",
    )(f)


def _depth_option(default: int | None) -> Decorator:
    return click.option(
        "--depth",
        "depth",
        type=int,
        default=default,
        show_default=default is not None,
        envvar=env_var("depth"),
        help="Nest depth or number of triples",
    )


def _max_iter_option(default: int) -> Decorator:
    return click.option(
        "--max-iter",
        "max_iter",
        type=int,
        default=default,
        show_default=True,
        envvar=env_var("max_iter"),
        help="Iteration budget of each return search",
    )


def _output_options(f: Callable[..., Any]) -> Callable[..., Any]:
    f = click.option(
        "--out",
        "output_path",
        type=click.Path(dir_okay=False),
        default=None,
        envvar=env_var("output_path"),
        help="Write output to a file instead of standard output",
    )(f)
    return click.option(
        "--format",
        "output_format",
        type=click.Choice([fmt.value for fmt in OutputFormat]),
        default=OutputFormat.JSON.value,
        show_default=True,
        envvar=env_var("output_format"),
        help="Output format",
    )(f)


def _map_options(f: Callable[..., Any]) -> Callable[..., Any]:
    f = click.option("--b", "b", type=str, default=None, help="Quadratic coefficient")(f)
    f = click.option(
        "--symmetric", is_flag=True, help="Use b = -3a/2 (the default without --b)"
    )(f)
    f = click.argument("a", type=str)(f)
    return click.argument("family", type=click.Choice(["positive", "negative", "+", "-"]))(f)


def _config(**values: Any) -> RunConfig:
    try:
        return RunConfig.from_mapping(values)
    except ConfigError as e:
        _fail(str(e), EXIT_USAGE)


def _parse(text: str) -> CombSequence:
    try:
        return parse_sequence(text)
    except SequenceSyntaxError as e:
        click.echo(text, err=True)
        click.echo(" " * e.position + "^", err=True)
        _fail(str(e), EXIT_USAGE)
    except ValueError as e:
        _fail(str(e), EXIT_USAGE)


def _make_map(family: str, a: str, b: str | None, symmetric: bool, bits: int) -> CubicMap:
    if symmetric and b is not None:
        _fail("--symmetric and --b are mutually exclusive", EXIT_USAGE)
    try:
        if b is None:
            return make_symmetric_cubic(family, a, bits)
        return make_cubic(family, a, b, bits)
    except NotBimodal as e:
        _fail(str(e), EXIT_NOT_BIMODAL)
    except ValueError as e:
        _fail(str(e), EXIT_USAGE)


def _build(cubic: CubicMap, depth: int, max_iter: int) -> Nest:
    try:
        return build_nest(cubic, depth, max_iter)
    except ValueError as e:
        _fail(str(e), EXIT_USAGE)
    except NestError as e:
        _fail(str(e), EXIT_NOT_IN_CLASS)


def _emit(config: RunConfig, json_payload: dict[str, Any], csv_text: str) -> None:
    if config.output_format is OutputFormat.CSV:
        text = csv_text
    else:
        text = dump_json(json_payload, config.precision_bits)
    write_text(text, config.output_path)


@click.group(cls=_NestlabGroup)
@click.version_option(version=__version__, prog_name="nestlab")
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="key=value file with default settings",
)
@click.option("--verbose", "-v", count=True, help="Log INFO (-v) or DEBUG (-vv) to stderr")
@click.pass_context
def main(ctx: click.Context, config_path: str | None, verbose: int) -> None:
    """nestlab - twin principal nests of bimodal cubics.

    Computes nests at arbitrary precision, checks and realizes their
    generalized Fibonacci combinatorics, and runs the separation ledger
    and the level random walk.

    Shared settings are given to the commands that use them:
    --precision-bits, --depth and --max-iter to analyze, solve and walk;
    --format and --out to every command but check; --tau and --eta to
    ledger; --samples, --steps and --seed to walk. Each also reads
    NESTLAB_<SETTING> and the --config file.
    """
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(verbose, 2)]
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    if config_path is None:
        return
    try:
        values = load_config_file(config_path)
        RunConfig.from_mapping(values)
    except ConfigError as e:
        _fail(str(e), EXIT_USAGE)
    ctx.default_map = {name: dict(values) for name in main.commands}


@main.command("analyze")
@_map_options
@_precision_option
@_depth_option(12)
@_max_iter_option(DEFAULT_MAX_ITER)
@_output_options
def analyze(
    family: str,
    a: str,
    b: str | None,
    symmetric: bool,
    precision_bits: int,
    depth: int,
    max_iter: int,
    output_format: str,
    output_path: str | None,
) -> None:
    """Tabulate the twin principal nest of a cubic.

    FAMILY is positive or negative; A is the cubic coefficient. Without
    --b the map lies on the symmetric slice b = -3a/2.

    Examples:

        nestlab analyze positive 15.61986 --depth 8

        nestlab analyze negative 6 --b -8.5 --format csv
    """
    config = _config(
        precision_bits=precision_bits,
        depth=depth,
        max_iter=max_iter,
        output_format=output_format,
        output_path=output_path,
    )
    cubic = _make_map(family, a, b, symmetric, config.precision_bits)
    nest = _build(cubic, config.depth, config.max_iter)
    bits = config.precision_bits

    rows: list[tuple[Any, ...]] = []
    for level in nest.levels:
        rows.append(
            (
                level.n,
                to_decimal(level.I.width, bits),
                to_decimal(level.J.width, bits),
                to_decimal(level.scaling, bits),
                level.S,
                level.S_hat,
                "" if level.theta is None else str(level.theta.project()),
                level.r,
                level.t,
                NestStatus.OK.value,
            )
        )
    if not nest.ok:
        failed = nest.pending.n if nest.pending is not None else nest.depth + 1
        S = nest.pending.S if nest.pending is not None else None
        rows.append((failed, None, None, None, S, None, None, None, None, nest.status.value))

    payload = {
        "map": str(cubic),
        "family": cubic.family_sign.value,
        "a": to_decimal(cubic.a, bits),
        "b": to_decimal(cubic.b, bits),
        "c": to_decimal(cubic.c, bits),
        "d": to_decimal(cubic.d, bits),
        "status": nest.status.value,
        "reason": nest.reason,
        "levels": [dict(zip(ANALYZE_HEADER, row, strict=True)) for row in rows],
    }
    _emit(config, payload, dump_csv(ANALYZE_HEADER, rows))
    if not nest.ok:
        _fail(f"level {rows[-1][0]}: {nest.reason}", _STATUS_EXIT[nest.status])


@main.command("check")
@click.argument("sequence")
@click.option("--literal", is_flag=True, help="Apply the follower rules without parity resolution")
def check(sequence: str, literal: bool) -> None:
    """Check a combinatorial sequence for admissibility.

    SEQUENCE uses the grammar "A+,2,1;B-,3,2": subtype, r, t per level.

    Examples:

        nestlab check "A+,2,1;B-,2,1;C-,2,1"
    """
    seq = _parse(sequence)
    verdict = check_admissible(seq, strict=not literal)
    if verdict.ok:
        click.echo(click.style(f"ok: {format_sequence(seq)}", fg="green"))
        return
    _fail(
        f"triple {verdict.index} violates rule {verdict.rule}: {verdict.message}",
        EXIT_INADMISSIBLE,
    )


@main.command("solve")
@click.argument("sequence")
@click.option(
    "--family",
    "family_sign",
    type=click.Choice(["positive", "negative"]),
    default=None,
    help="Family to search (default: implied by the first subtype)",
)
@_precision_option
@_depth_option(None)
@_max_iter_option(SOLVER_MAX_ITER)
@click.option("--tolerance", type=float, default=DEFAULT_TOLERANCE, show_default=True)
@click.option(
    "--max-evaluations", type=int, default=DEFAULT_MAX_EVALUATIONS, show_default=True
)
@click.option("--verify-bits", type=int, default=None, help="Re-extract at this precision")
@_output_options
def solve_command(
    sequence: str,
    family_sign: str | None,
    precision_bits: int,
    depth: int | None,
    max_iter: int,
    tolerance: float,
    max_evaluations: int,
    verify_bits: int | None,
    output_format: str,
    output_path: str | None,
) -> None:
    """Find a symmetric cubic whose combinatorics begin with SEQUENCE.

    Examples:

        nestlab solve "A+,2,1;B-,2,1;C-,2,1;A+,2,1" --precision-bits 512
    """
    target = _parse(sequence)
    config = _config(
        precision_bits=precision_bits,
        depth=depth,
        max_iter=max_iter,
        output_format=output_format,
        output_path=output_path,
    )
    try:
        result = solve(
            target,
            depth=depth,
            family_sign=family_sign,
            tolerance=tolerance,
            precision_bits=config.precision_bits,
            max_evaluations=max_evaluations,
            max_iter=config.max_iter,
        )
    except NotAdmissible as e:
        _fail(str(e), EXIT_INADMISSIBLE)
    except NotFound as e:
        _fail(str(e), EXIT_NOT_FOUND)
    except ValueError as e:
        _fail(str(e), EXIT_USAGE)

    payload = result.to_dict()
    if verify_bits is not None:
        payload["verify_bits"] = verify_bits
        payload["verified"] = verify(result, verify_bits, config.max_iter)
    header = tuple(payload)
    csv_text = dump_csv(header, [tuple(payload.values())])
    _emit(replace(config, precision_bits=result.precision_bits), payload, csv_text)


@main.command("ledger")
@click.argument("sequence")
@click.option(
    "--tau",
    type=float,
    default=0.5,
    show_default=True,
    envvar=env_var("tau"),
    help="Lower bound of the first central moduli",
)
@click.option(
    "--eta",
    "eta_config",
    type=float,
    default=None,
    envvar=env_var("eta_config"),
    help="Growth of a resolved Fibonacci block (default: beta_0 / 32)",
)
@_output_options
def ledger(
    sequence: str,
    tau: float,
    eta_config: float | None,
    output_format: str,
    output_path: str | None,
) -> None:
    """Run the separation-symbol ledger along SEQUENCE.

    Inadmissible sequences are run anyway with a warning.

    Examples:

        nestlab ledger "A+,2,1;B-,2,1;C-,2,1" --tau 0.5 --format csv
    """
    seq = _parse(sequence)
    config = _config(
        tau=tau, eta_config=eta_config, output_format=output_format, output_path=output_path
    )
    verdict = check_admissible(seq)
    if not verdict.ok:
        logger.warning(
            "Sequence is not admissible at triple %s: %s", verdict.index, verdict.message
        )
    rows = run_ledger(seq, config.tau, config.eta_config)
    table = [(row.step, row.beta, row.delta, row.mu_lower, row.rule_fired.value) for row in rows]
    payload = {
        "sequence": format_sequence(seq),
        "tau": config.tau,
        "eta_config": config.eta_config,
        "growth_constant": growth_constant(rows) if len(rows) >= 2 else None,
        "rows": [dict(zip(LEDGER_HEADER, row, strict=True)) for row in table],
    }
    _emit(config, payload, dump_csv(LEDGER_HEADER, table))


@main.command("walk")
@_map_options
@_precision_option
@_depth_option(12)
@_max_iter_option(DEFAULT_MAX_ITER)
@click.option("--samples", type=int, default=1000, show_default=True, envvar=env_var("samples"))
@click.option("--steps", type=int, default=200, show_default=True, envvar=env_var("steps"))
@click.option("--seed", type=int, default=0, show_default=True, envvar=env_var("seed"))
@click.option(
    "--cutoff",
    type=float,
    default=DEEP_LEVEL_CUTOFF,
    show_default=True,
    help="Scaling factor below which levels count as deep",
)
@click.option(
    "--return-level",
    type=click.IntRange(min=0),
    default=RETURN_LEVEL,
    show_default=True,
    help="Level a completed sample must revisit to count as returned",
)
@click.option(
    "--trajectories",
    type=click.Path(dir_okay=False),
    default=None,
    help="Also write the per-step trajectory CSV to this file",
)
@_output_options
def walk(
    family: str,
    a: str,
    b: str | None,
    symmetric: bool,
    precision_bits: int,
    depth: int,
    max_iter: int,
    samples: int,
    steps: int,
    seed: int,
    cutoff: float,
    return_level: int,
    trajectories: str | None,
    output_format: str,
    output_path: str | None,
) -> None:
    """Estimate the drift of the level random walk of a cubic.

    With --format csv the output is the trajectory table; otherwise it is
    the aggregate statistics as JSON.

    Examples:

        nestlab walk positive 15.61986 --depth 8 --samples 500 --seed 7
    """
    config = _config(
        precision_bits=precision_bits,
        depth=depth,
        max_iter=max_iter,
        samples=samples,
        steps=steps,
        seed=seed,
        output_format=output_format,
        output_path=output_path,
    )
    cubic = _make_map(family, a, b, symmetric, config.precision_bits)
    nest = _build(cubic, config.depth, config.max_iter)
    if nest.depth < 1:
        code = EXIT_USAGE if nest.ok else _STATUS_EXIT[nest.status]
        _fail(f"no level beyond 0 to walk on: {nest.reason or 'depth is 0'}", code)
    try:
        context = InducedMapContext.build(nest, config.max_iter)
    except NestError as e:
        _fail(str(e), EXIT_NOT_IN_CLASS)

    walks = run_walks(context, config.samples, config.steps, config.seed)
    threshold = deep_level_threshold(nest, cutoff)
    stats = WalkStats.from_trajectories(
        walks, config.steps, nest.depth if threshold is None else threshold, return_level
    )
    table = [
        (tr.sample_id, k, level, tr.stop_reason.value)
        for tr in walks
        for k, level in enumerate(tr.levels)
    ]
    csv_text = dump_csv(WALK_HEADER, table)
    if trajectories is not None:
        write_text(csv_text, trajectories)
    payload = {
        "map": str(cubic),
        "nest_depth": nest.depth,
        "nest_status": nest.status.value,
        "seed": config.seed,
        "stats": stats.to_dict(),
    }
    _emit(config, payload, csv_text)


if __name__ == "__main__":
    main()

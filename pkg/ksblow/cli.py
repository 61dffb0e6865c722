from dataclasses import replace
from typing import Annotated, Optional
from pathlib import Path
import click, typer

from ksblow.config import config
from ksblow.exceptions import ConfigError, KsblowError, ModelError
from ksblow.logging import configure_logger, logger, set_log_level
from ksblow.initdata import membership
from ksblow.models import ConditionReport, NonlinearityModel, check_conditions, model_from_mapping, parse_model
from ksblow.runner import confirm_blowup, prepare_initial_state, run_scenario, write_artifacts
from ksblow.scenario import SimulationConfig, load_config, load_sweep
from ksblow.sweep import run_sweep, sweep_table
from ksblow.table import Field, Format, Table, to_json_string
from ksblow.trajectory import Trajectory, write_snapshot
from ksblow.types import Regime, Verdict
from ksblow.verdict import RunVerdict, Trigger, classify_trajectory
from ksblow import __version__, __package__


class OrderedCommands(typer.core.TyperGroup):
    def list_commands(self, ctx: click.Context) -> list[str]:
        return list(self.commands.keys())


class MutuallyExclusiveError(click.exceptions.UsageError):
    def __init__(self, opt1: str, opt2: str) -> None:
        super().__init__(f'Option {opt1} cannot be used together with option {opt2}')


app = typer.Typer(
    cls=OrderedCommands,
    context_settings={'help_option_names': ['-h', '--help']},
    no_args_is_help=True,
    pretty_exceptions_enable=True,
)

ConfigOpt = Annotated[Path, typer.Option(
    '--config', exists=True, dir_okay=False, readable=True,
    metavar='PATH', help='YAML configuration file.',
    show_default=False,
)]

OutOpt = Annotated[Optional[Path], typer.Option(
    '--out', file_okay=False,
    metavar='DIR', help='Output directory, overriding the configuration and KSBLOW_OUT.',
    show_default=False,
)]

ExponentOpt = Annotated[Optional[float], typer.Option(show_default=False)]


def abort(message: str) -> None:
    logger.critical(message)
    raise typer.Exit(code=1)


def resolve_out_dir(out: Path | None, sim: SimulationConfig | None = None) -> Path:
    if out is not None:
        return out
    if sim is not None and sim.out_dir is not None:
        return Path(sim.out_dir)
    return Path(config.out_dir)


def load(path: Path) -> SimulationConfig:
    try:
        return load_config(path)
    except ConfigError as e:
        raise click.UsageError(str(e))


def verdict_table(verdict: RunVerdict) -> Table:
    table = Table([
        Field('Verdict', Format.VERDICT),
        Field('T*', Format.FLOAT),
        Field('max ||u||_inf', Format.FLOAT),
        Field('min dt', Format.FLOAT),
        Field('Confirmed'),
        Field('Reason'),
    ])
    table.add_row([verdict.label, verdict.T_star, verdict.max_linf_u, verdict.min_dt, verdict.confirmed, verdict.reason])
    return table


def conditions_table(report: ConditionReport) -> Table:
    table = Table([
        Field('Condition'),
        Field('Status', Format.STATUS),
        Field('Witness s', Format.FLOAT),
        Field('Coefficient', Format.FLOAT),
    ])
    for entry in report.entries.values():
        table.add_row([entry.condition, entry.status, entry.witness_s, entry.fitted_coefficient])
    return table


def version_callback(value: bool) -> None:
    if value:
        print(f'{__package__} {__version__}')
        raise typer.Exit()


@app.callback()
def main_callback(
    strict: Annotated[bool, typer.Option(help='Abort on conservation and consistency failures instead of warning.')] = config.strict,
    verbose: Annotated[bool, typer.Option('--verbose', help='Enable additional logging.')] = False,
    quiet: Annotated[bool, typer.Option('--quiet', help='Disable all non-critical logging.')] = False,
    version: Annotated[bool, typer.Option('--version', callback=version_callback, help='Show version information.')] = False,
) -> None:
    if verbose and quiet:
        raise MutuallyExclusiveError('--verbose', '--quiet')

    config.strict = strict
    set_log_level(verbose, quiet)

    configure_logger()


@app.command('check-model')
def check_model_command(
    model: Annotated[str, typer.Argument(
        metavar='MODEL',
        help='Catalog model: semilinear, power_diffusion, remark_family, or call notation such as power_diffusion(q=-1).',
    )],
    q: ExponentOpt = None,
    gamma1: ExponentOpt = None,
    gamma2: ExponentOpt = None,
    s0: ExponentOpt = None,
    sampled: Annotated[bool, typer.Option('--sampled', help='Decide catalog models by sampling instead of exponents.')] = False,
    show_table: Annotated[bool, typer.Option('--table', help='Print a table of the conditions instead of JSON.')] = False,
) -> None:
    '''
    Check the structural conditions on phi and psi and print the regime they imply.

    Exits with 0 when a regime is decided, 1 when it is Unknown and 2 when any condition is unknown.
    '''
    try:
        if '(' in model:
            if any(value is not None for value in (q, gamma1, gamma2, s0)):
                raise click.UsageError('Give the exponents either in call notation or as options, not both')
            nonlinearity: NonlinearityModel = parse_model(model)
        else:
            data = {'name': model, 'q': q, 'gamma1': gamma1, 'gamma2': gamma2, 's0': s0}
            nonlinearity = model_from_mapping(data)
    except ModelError as e:
        raise click.BadParameter(str(e), param_hint='MODEL')

    try:
        report = check_conditions(nonlinearity, sampled=sampled)
    except KsblowError as e:
        abort(str(e))

    if show_table:
        print(conditions_table(report).to_string())
        print(f'Regime: {report.regime.value}')
    else:
        print(to_json_string(report.to_json()))

    if report.any_unknown:
        raise typer.Exit(code=2)
    raise typer.Exit(code=0 if report.regime != Regime.UNKNOWN else 1)


@app.command('make-initial-data')
def make_initial_data_command(config_file: ConfigOpt, out: OutOpt = None) -> None:
    '''
    Build the concentrated initial data of a configuration and report its membership of the blowup set.
    '''
    sim = load(config_file)
    try:
        state0, sim = prepare_initial_state(sim)
        report = membership(state0, sim.model.build(), sim.membership.K_user, sim.membership.A_cap)
    except KsblowError as e:
        abort(str(e))

    out_dir = resolve_out_dir(out, sim)
    out_dir.mkdir(parents=True, exist_ok=True)
    config_hash = sim.config_hash()

    snapshot = out_dir / f'{config_hash}-initial.csv'
    write_snapshot(snapshot, state0)

    summary = {'config_hash': config_hash, 'eta': sim.initial_data.eta, **report.to_json()}
    (out_dir / f'{config_hash}-membership.json').write_text(to_json_string(summary) + '\n', encoding='utf-8')
    logger.info(f'Initial data written to {snapshot}')

    print(to_json_string(summary))


@app.command('simulate')
def simulate_command(
    config_file: ConfigOpt,
    out: OutOpt = None,
    refinements: Annotated[int, typer.Option(
        min=0, max=2, help='Rerun a blowup at 2N (and 4N) cells to confirm it.',
    )] = 0,
) -> None:
    '''
    Integrate a configuration, write its series, snapshots and summary, and exit with the verdict's code.

    Exit codes: BoundedCandidate 0, FiniteTimeBlowup 3, InfiniteTimeBlowupCandidate 4, Inconclusive 5.
    '''
    sim = load(config_file)
    try:
        result = run_scenario(sim)
        if refinements and result.verdict.label == Verdict.FINITE_TIME_BLOWUP:
            result = replace(result, verdict=confirm_blowup(result.config, refinements, base=result))
        write_artifacts(result, resolve_out_dir(out, sim))
    except KsblowError as e:
        abort(str(e))

    print(verdict_table(result.verdict).to_string())
    raise typer.Exit(code=result.verdict.exit_code)


@app.command('classify')
def classify_command(
    series: Annotated[Path, typer.Argument(
        exists=True, dir_okay=False, readable=True,
        help='Time-series CSV written by simulate.',
    )],
    t_end: Annotated[float, typer.Option(min=0.0, help='Final time the run was configured for.')],
    dt_min: Annotated[float, typer.Option(help='Smallest step size the run allowed.')] = 1e-14,
    cells: Annotated[int, typer.Option(min=2, help='Number of cells of the run.')] = 256,
) -> None:
    '''
    Re-derive the verdict of a finished run from its time series.

    A series ending before t_end counts as a run stopped by the blowup trigger.
    '''
    try:
        trajectory = Trajectory.read_csv(series)
    except KsblowError as e:
        abort(str(e))
    if not len(trajectory):
        abort(f'{series} holds no records')

    last = trajectory.last
    steps = trajectory.column('dt')[1:]
    min_dt = float(steps.min()) if len(steps) else float('inf')
    trigger = None
    if last.t < t_end * (1.0 - 1e-12):
        trigger = Trigger('series', last.t, last.linf_u, f'series ends at t = {last.t:.9g} before t_end')

    verdict = classify_trajectory(trajectory, t_end, dt_min, cells, trigger, min_dt)
    print(to_json_string(verdict.to_json()))
    raise typer.Exit(code=verdict.exit_code)


@app.command('sweep')
def sweep_command(
    config_file: ConfigOpt,
    out: OutOpt = None,
    jobs: Annotated[Optional[int], typer.Option(min=1, help='Worker processes, overriding the sweep file.', show_default=False)] = None,
    json_export: Annotated[bool, typer.Option('--json', help='Write the phase diagram as JSON instead of CSV.')] = False,
) -> None:
    '''
    Run every cell of a parameter sweep and write the phase-diagram table.
    '''
    try:
        spec = load_sweep(config_file)
    except ConfigError as e:
        raise click.UsageError(str(e))

    rows = run_sweep(spec, jobs)
    table = sweep_table(spec, rows)

    out_dir = resolve_out_dir(out, spec.template)
    out_dir.mkdir(parents=True, exist_ok=True)
    if json_export:
        path = out_dir / f'{spec.config_hash()}-sweep.json'
        path.write_text(table.get_json_string(header=False), encoding='utf-8')
    else:
        path = out_dir / f'{spec.config_hash()}-sweep.csv'
        path.write_text(table.get_csv_string(header=True), encoding='utf-8')
    logger.info(f'Phase diagram exported to {path}')

    print(table.to_string())

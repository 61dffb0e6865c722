'''
Parameter sweeps: one independent run per cell of the axes product, executed on a process pool
and collected in cell order.
'''
import math
from collections.abc import Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

from ksblow.config import config
from ksblow.logging import configure_worker, logger
from ksblow.runner import run_scenario
from ksblow.scenario import SWEEP_AXES, SweepSpec
from ksblow.table import Field, Format, Table
from ksblow.types import Verdict


@dataclass(frozen=True)
class SweepRow:
    index: int
    config_hash: str
    axes: Mapping[str, float]
    verdict: Verdict
    T_star: float | None = None
    sup_ratio36: float | None = None
    fitted_constant: float | None = None
    sup_Bhat: float | None = None
    T_extrapolated: float | None = None
    error: str = field(default='')

    def to_row(self, axes: Sequence[str]) -> list[Any]:
        return [self.config_hash, *(self.axes[axis] for axis in axes), self.verdict, self.T_star,
                self.sup_ratio36, self.fitted_constant, self.sup_Bhat, self.T_extrapolated, self.error]


def _run_cell(job: tuple[int, Mapping[str, float], SweepSpec, bool]) -> SweepRow:
    ''' Worker entry point; any failure of the cell becomes an Error row. '''
    index, cell, spec, strict = job
    config.strict = strict

    sim = spec.template
    for axis, value in cell.items():
        sim = sim.with_axis(axis, value)
    config_hash = sim.config_hash()

    try:
        result = run_scenario(spec.cell_config(cell))
    except Exception as e:
        logger.error(f'Cell {index} ({config_hash}) failed: {e}')
        message = str(e).splitlines()[0] if str(e) else type(e).__name__
        return SweepRow(index, config_hash, cell, Verdict.ERROR, error=message)

    records = result.trajectory.records
    return SweepRow(
        index=index,
        config_hash=config_hash,
        axes=cell,
        verdict=result.verdict.label,
        T_star=result.verdict.T_star,
        sup_ratio36=result.ratio.sup if result.ratio else math.nan,
        fitted_constant=result.ratio.fitted_constant if result.ratio else math.nan,
        sup_Bhat=max(r.Bhat for r in records),
        T_extrapolated=result.T_extrapolated,
    )


def run_sweep(spec: SweepSpec, jobs: int | None = None) -> list[SweepRow]:
    '''
    Run every cell of the sweep. Rows come back in the order of SweepSpec.cells regardless of
    which worker finishes first.
    '''
    cells = spec.cells()
    jobs = jobs or spec.jobs
    work = [(index, cell, spec, config.strict) for index, cell in enumerate(cells)]
    logger.info(f'Sweeping {len(cells)} cells over {", ".join(spec.axes)} with {jobs} job(s)')

    if jobs == 1:
        rows = [_run_cell(job) for job in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs, initializer=configure_worker, initargs=(config.log_level,)) as executor:
            rows = list(executor.map(_run_cell, work))

    errors = sum(row.verdict == Verdict.ERROR for row in rows)
    if errors:
        logger.warning(f'{errors} of {len(rows)} cells failed')
    return rows


def sweep_fields(axes: Sequence[str]) -> list[Field]:
    return [
        Field('config_hash'),
        *(Field(axis, Format.FLOAT) for axis in axes),
        Field('verdict', Format.VERDICT),
        Field('T_star', Format.FLOAT),
        Field('sup_ratio36', Format.FLOAT),
        Field('fitted_constant', Format.FLOAT),
        Field('sup_Bhat', Format.FLOAT),
        Field('T_extrapolated', Format.FLOAT),
        Field('error', visible=False),
    ]


def sweep_table(spec: SweepSpec, rows: Sequence[SweepRow]) -> Table:
    axes = [axis for axis in SWEEP_AXES if axis in spec.axes]
    table = Table(sweep_fields(axes))
    for row in rows:
        table.add_row(row.to_row(axes))
    return table

import math

import pytest

from ksblow.scenario import SweepSpec
from ksblow.sweep import SweepRow, run_sweep, sweep_table
from ksblow.types import Verdict


@pytest.fixture
def spec() -> SweepSpec:
    return SweepSpec.from_mapping({
        'axes': {'q': [-1.0, -0.5], 'eta': [0.5, 0.01]},
        'jobs': 1,
        'template': {
            'mesh': {'N': 16},
            'model': {'name': 'power_diffusion', 'q': -1},
            'solver': {'t_end': 0.02},
            'diagnostics': {'every_steps': 5},
        },
    })


def test_rows_follow_cell_order(spec):
    rows = run_sweep(spec)
    assert [row.index for row in rows] == [0, 1, 2, 3]
    assert [row.axes for row in rows] == spec.cells()
    expected = [spec.template.with_axis('q', cell['q']).with_axis('eta', cell['eta']).config_hash() for cell in spec.cells()]
    assert [row.config_hash for row in rows] == expected


def test_failed_cells_become_error_rows(spec):
    rows = run_sweep(spec)
    unresolved = [row for row in rows if row.axes['eta'] == 0.01]
    assert all(row.verdict == Verdict.ERROR for row in unresolved)
    assert all('eta' in row.error for row in unresolved)
    assert all(row.T_star is None for row in unresolved)

    finished = [row for row in rows if row.axes['eta'] == 0.5]
    assert all(row.verdict != Verdict.ERROR for row in finished)
    assert all(row.error == '' for row in finished)
    assert all(math.isfinite(row.sup_Bhat) for row in finished)


def test_error_rows_keep_their_hash(spec):
    rows = run_sweep(spec)
    assert len({row.config_hash for row in rows}) == 4


def test_sweep_table(spec):
    rows = [
        SweepRow(0, 'aaaaaaaaaaaa', {'q': -1.0, 'eta': 0.5}, Verdict.BOUNDED_CANDIDATE, sup_ratio36=0.1, sup_Bhat=0.3),
        SweepRow(1, 'bbbbbbbbbbbb', {'q': -1.0, 'eta': 0.01}, Verdict.ERROR, error='too narrow'),
    ]
    table = sweep_table(spec, rows)
    assert len(table.rows) == 2
    header = table.get_csv_string(header=True).splitlines()[0].split(',')
    assert header[:3] == ['config_hash', 'q', 'eta']
    assert 'error' in header
    assert 'verdict' in header


def test_unexpected_failures_become_error_rows(spec, monkeypatch):
    def failing(sim):
        if sim.initial_data.eta == 0.5:
            raise RuntimeError('solver state corrupted')
        raise KeyError()

    monkeypatch.setattr('ksblow.sweep.run_scenario', failing)
    rows = run_sweep(spec, jobs=1)
    assert len(rows) == 4
    assert all(row.verdict == Verdict.ERROR for row in rows)
    assert {row.error for row in rows} == {'solver state corrupted', 'KeyError'}

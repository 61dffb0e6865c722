from dataclasses import replace

import pytest
import yaml

from ksblow.exceptions import ConfigError
from ksblow.scenario import (MeshSpec, SimulationConfig, SweepSpec, dump_config, load_config, load_sweep)
from ksblow.solver import Cadence
from ksblow.types import FluxScheme, Profile


CONFIG = '''
mesh:
  R: 1.0
  N: 128
model:
  name: power_diffusion
  q: -1
solver:
  t_end: 0.5
  flux_scheme: gradient
initial_data:
  m: 2
  eta: 0.05
  profile: gaussian
diagnostics:
  every_time: 0.01
  every_steps: null
  snapshot_times: [0, 0.25]
'''


def test_defaults():
    sim = SimulationConfig.from_mapping({})
    assert sim == SimulationConfig()
    assert sim.mesh == MeshSpec(R=1.0, N=256)
    assert sim.model.name == 'semilinear'
    assert sim.initial_data.m == 1.0
    assert sim.initial_data.eta == 0.1
    assert SimulationConfig.from_mapping(None) == sim


def test_load_config(tmp_path):
    path = tmp_path / 'run.yaml'
    path.write_text(CONFIG)
    sim = load_config(path)
    assert sim.mesh.N == 128
    assert sim.model.q == -1.0
    assert sim.model.build().name == 'power_diffusion(q=-1)'
    assert sim.solver.t_end == 0.5
    assert sim.solver.flux_scheme == FluxScheme.GRADIENT
    assert sim.initial_data.m == 2.0
    assert sim.initial_data.profile == Profile.GAUSSIAN
    assert sim.diagnostics.cadence() == Cadence(None, 0.01, (0.0, 0.25))


def test_problems_name_dotted_paths():
    data = {
        'mesh': {'N': 1, 'size': 3},
        'solver': {'v_scheme': 'sideways', 'energy_guard': 'yes'},
        'initial_data': {'m': 1.0},
        'diagnostics': {'every_steps': 'often'},
        'extra': {},
    }
    with pytest.raises(ConfigError) as info:
        SimulationConfig.from_mapping(data)
    problems = info.value.problems
    assert 'mesh.size: unknown key' in problems
    assert 'extra: unknown section' in problems
    assert any(p.startswith('solver.v_scheme: expected one of explicit, implicit') for p in problems)
    assert any(p.startswith('solver.energy_guard: expected true or false') for p in problems)
    assert any(p.startswith('diagnostics.every_steps: expected an integer') for p in problems)


def test_semantic_problems_are_collected():
    data = {
        'mesh': {'N': 1},
        'initial_data': {'m': 1.0, 'eta': 0.1, 'F_target': -1.0},
        'membership': {'K_user': 0},
        'model': {'name': 'quadratic'},
    }
    with pytest.raises(ConfigError) as info:
        SimulationConfig.from_mapping(data)
    problems = info.value.problems
    assert any(p.startswith('mesh.N') for p in problems)
    assert any(p.startswith('initial_data: exactly one') for p in problems)
    assert any(p.startswith('membership.K_user') for p in problems)
    assert any(p.startswith('model: Unknown model') for p in problems)


def test_solver_problems_carry_section():
    with pytest.raises(ConfigError) as info:
        SimulationConfig.from_mapping({'solver': {'dt_min': 1.0, 'dt_max': 0.1}})
    assert any(p.startswith('solver.dt_min') for p in info.value.problems)


def test_not_a_mapping():
    with pytest.raises(ConfigError):
        SimulationConfig.from_mapping([1, 2])
    with pytest.raises(ConfigError):
        SimulationConfig.from_mapping({'mesh': 3})


def test_invalid_yaml(tmp_path):
    path = tmp_path / 'broken.yaml'
    path.write_text('mesh: [1, 2\n')
    with pytest.raises(ConfigError):
        load_config(path)
    with pytest.raises(ConfigError):
        load_config(tmp_path / 'missing.yaml')


def test_dump_and_load(tmp_path):
    path = tmp_path / 'run.yaml'
    path.write_text(CONFIG)
    sim = load_config(path)

    copy = tmp_path / 'copy' / 'run.yaml'
    dump_config(sim, copy)
    assert load_config(copy) == sim
    assert yaml.safe_load(copy.read_text())['solver']['flux_scheme'] == 'gradient'


def test_hash_ignores_out_dir():
    sim = SimulationConfig()
    assert len(sim.config_hash()) == 12
    assert replace(sim, out_dir='/tmp/elsewhere').config_hash() == sim.config_hash()
    assert replace(sim, mesh=MeshSpec(N=512)).config_hash() != sim.config_hash()


def test_with_axis():
    sim = SimulationConfig.from_mapping({
        'model': {'name': 'remark_family', 'gamma1': 3, 'gamma2': 0.5},
        'initial_data': {'m': 1.0, 'F_target': -1.0},
    })
    assert sim.with_axis('gamma1', 4).model.gamma1 == 4.0
    assert sim.with_axis('m', 2).initial_data.m == 2.0
    cell = sim.with_axis('eta', 0.2)
    assert cell.initial_data.eta == 0.2
    assert cell.initial_data.F_target is None
    with pytest.raises(ConfigError):
        sim.with_axis('R', 2.0)


SWEEP = '''
axes:
  eta: [0.2, 0.1]
  q: [-2, -1, -0.5]
jobs: 2
template:
  model:
    name: power_diffusion
    q: -1
  mesh:
    N: 64
'''


def test_sweep_cells(tmp_path):
    path = tmp_path / 'sweep.yaml'
    path.write_text(SWEEP)
    spec = load_sweep(path)
    assert spec.jobs == 2
    assert spec.template.mesh.N == 64
    cells = spec.cells()
    assert len(cells) == 6
    # Axes follow the fixed axis order, not the order of the file
    assert cells[0] == {'q': -2.0, 'eta': 0.2}
    assert cells[1] == {'q': -2.0, 'eta': 0.1}
    assert cells[-1] == {'q': -0.5, 'eta': 0.1}

    sim = spec.cell_config(cells[1])
    assert sim.model.q == -2.0
    assert sim.initial_data.eta == 0.1


def test_sweep_hash_ignores_jobs():
    spec = SweepSpec({'q': (-1.0,)})
    assert replace(spec, jobs=4).config_hash() == spec.config_hash()
    assert SweepSpec({'q': (-2.0,)}).config_hash() != spec.config_hash()


def test_sweep_cell_must_be_valid():
    spec = SweepSpec({'eta': (2.0,)})
    with pytest.raises(ConfigError):
        spec.cell_config(spec.cells()[0])


@pytest.mark.parametrize('data', [
    {'axes': {}},
    {'template': {}},
    {'axes': {'q': []}},
    {'axes': {'q': ['a']}},
    {'axes': {'R': [1.0]}},
    {'axes': {'q': [-1.0]}, 'jobs': 0},
    {'axes': {'q': [-1.0]}, 'seed': 1},
    'q',
])
def test_sweep_problems(data):
    with pytest.raises(ConfigError):
        SweepSpec.from_mapping(data)


def test_sweep_template_problems_are_prefixed():
    with pytest.raises(ConfigError) as info:
        SweepSpec.from_mapping({'axes': {'q': [-1]}, 'template': {'mesh': {'N': 0}}})
    assert any(p.startswith('template.mesh.N') for p in info.value.problems)

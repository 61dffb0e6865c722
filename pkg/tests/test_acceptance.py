'''
Regime reproduction on the scenarios shipped with the package, each sized to finish within about a
minute. Select them with `pytest -m slow`.
'''
import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from ksblow.models import check_conditions, power_diffusion, remark_family, semilinear
from ksblow.runner import confirm_blowup, run_scenario
from ksblow.scenario import load_config, load_sweep
from ksblow.solver import Cadence, RadialState, SolverConfig, run
from ksblow.sweep import run_sweep
from ksblow.grid import RadialMesh
from ksblow.initdata import InitialDataSpec, build
from ksblow.trajectory import Trajectory
from ksblow.types import Regime, Verdict
from ksblow.verdict import RunVerdict

SCENARIOS = Path(__file__).parents[1] / 'scenarios'

pytestmark = pytest.mark.slow


# dt = cfl_safety * dt_max whenever dt_max lies below the CFL bounds, which fixes the step count
STEPS = 10_000
SPARSE = Cadence(every_steps=100)


def run_steps(state0: RadialState, model, dt: float) -> tuple[Trajectory, RunVerdict, int]:
    steps = []
    config = SolverConfig(t_end=STEPS * dt, dt_max=dt / 0.4)
    trajectory, verdict = run(state0, model, config, diag_hooks=(lambda state, _: steps.append(state.step_count),),
                              cadence=SPARSE)
    return trajectory, verdict, steps[-1]


@pytest.mark.parametrize('model', [semilinear(), power_diffusion(q=-1.0), remark_family(gamma1=3.0, gamma2=0.5)],
                         ids=lambda model: model.name)
def test_long_run_conserves_mass(model):
    mesh = RadialMesh(1.0, 256)
    state0 = build(InitialDataSpec(m=1.0, eta=0.2), mesh)
    trajectory, _, steps = run_steps(state0, model, dt=1e-6)

    assert STEPS <= steps < 1.01 * STEPS
    mass_u = trajectory.column('mass_u')
    assert np.max(np.abs(mass_u - mass_u[0])) < 1e-12 * mass_u[0]
    bound = max(state0.mass, state0.v.values @ mesh.volumes) * (1.0 + 1e-6)
    assert np.all(trajectory.column('mass_v') <= bound)


def test_steady_state_holds_for_many_steps():
    mesh = RadialMesh(1.0, 256)
    state0 = RadialState.homogeneous(mesh, math.e)
    trajectory, verdict, steps = run_steps(state0, power_diffusion(q=-1.0), dt=1e-5)

    assert STEPS <= steps < 1.01 * STEPS
    assert verdict.label == Verdict.BOUNDED_CANDIDATE
    assert np.max(np.abs(trajectory.linf - math.e)) < 1e-12
    assert np.max(trajectory.column('D')) < 1e-20
    F = trajectory.column('F')
    assert np.max(np.abs(F - F[0])) < 1e-12 * (1.0 + abs(F[0]))


def test_power_diffusion_blows_up_in_finite_time():
    assert check_conditions(power_diffusion(q=-1.0)).regime == Regime.FINITE_TIME_BLOWUP

    sim = load_config(SCENARIOS / 'power_diffusion_blowup.yaml')
    base = run_scenario(sim)
    assert base.verdict.label == Verdict.FINITE_TIME_BLOWUP
    assert base.verdict.T_star is not None
    assert math.isfinite(base.ratio.sup)

    verdict = confirm_blowup(sim, refinements=1, base=base)
    assert verdict.label == Verdict.FINITE_TIME_BLOWUP
    assert verdict.confirmed
    assert [N for N, _ in verdict.refinements] == [256, 512]


def test_blowup_at_half_mass():
    sim = load_config(SCENARIOS / 'power_diffusion_blowup.yaml')
    sim = replace(sim, initial_data=replace(sim.initial_data, m=0.5, eta=0.01))
    result = run_scenario(sim)
    assert result.verdict.label == Verdict.FINITE_TIME_BLOWUP


def test_remark_family_runs_without_collapse():
    ''' The full 100 time units take hours with explicit steps, so this covers the opening stretch only. '''
    assert check_conditions(remark_family(gamma1=3.0, gamma2=0.5)).regime == Regime.INFINITE_TIME_BLOWUP

    sim = load_config(SCENARIOS / 'remark_family_growth.yaml')
    sim = replace(sim, solver=replace(sim.solver, t_end=0.05), diagnostics=replace(sim.diagnostics, every_time=0.005))
    result = run_scenario(sim)
    assert result.verdict.label != Verdict.FINITE_TIME_BLOWUP
    assert result.verdict.min_dt > 10.0 * result.config.solver.dt_min
    assert result.liapunov.monotone
    mass_u = result.trajectory.column('mass_u')
    assert np.max(np.abs(mass_u - mass_u[0])) < 1e-12 * mass_u[0]


def test_subcritical_semilinear_stays_bounded():
    result = run_scenario(load_config(SCENARIOS / 'semilinear_bounded.yaml'))
    assert result.verdict.label == Verdict.BOUNDED_CANDIDATE
    assert result.liapunov.monotone


def test_power_diffusion_sweep():
    rows = run_sweep(load_sweep(SCENARIOS / 'sweep_power_diffusion.yaml'), jobs=2)
    assert len(rows) == 6
    assert all(row.verdict != Verdict.ERROR for row in rows)

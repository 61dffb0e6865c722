'''
Single runs from a SimulationConfig: initial data, integration, trajectory reports, refinement
confirmation and the files written for each run.
'''
import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from ksblow import __version__
from ksblow.diagnostics import (LiapunovReport, RatioReport, check_liapunov_identity, check_ratio_bound,
                                estimate_blowup_time, v_decay_ratio)
from ksblow.exceptions import ExtrapolationError
from ksblow.initdata import MembershipReport, build, find_eta_for_F, membership
from ksblow.logging import logger
from ksblow.scenario import SimulationConfig
from ksblow.solver import RadialState, run
from ksblow.table import to_json_string
from ksblow.trajectory import Trajectory, write_snapshot
from ksblow.types import Verdict
from ksblow.verdict import RunVerdict, refinement_verdict


@dataclass
class RunResult:
    config: SimulationConfig
    trajectory: Trajectory
    verdict: RunVerdict
    initial: RadialState
    final: RadialState
    membership: MembershipReport
    liapunov: LiapunovReport | None = None
    ratio: RatioReport | None = None
    T_extrapolated: float | None = None
    extrapolation_refused: str | None = None
    v_decay: float = math.nan
    snapshots: list[RadialState] = field(default_factory=list)

    @property
    def config_hash(self) -> str:
        return self.config.config_hash()

    def summary(self) -> dict[str, Any]:
        ''' Everything needed to trace the verdict back to its inputs; no timestamps. '''
        return {
            'version': __version__,
            'config_hash': self.config_hash,
            'config': self.config.to_mapping(),
            'model': self.config.model.build().echo(),
            'eta': self.config.initial_data.eta,
            'membership': self.membership.to_json(),
            **self.verdict.to_json(),
            'steps': self.final.step_count,
            'clip_count': self.final.clip_count,
            'energy_violations': self.final.energy_violations,
            'liapunov': self.liapunov.to_json() if self.liapunov else None,
            'ratio': self.ratio.to_json() if self.ratio else None,
            'T_extrapolated': self.T_extrapolated,
            'extrapolation_refused': self.extrapolation_refused,
            'v_decay_ratio': self.v_decay,
        }


def prepare_initial_state(sim: SimulationConfig) -> tuple[RadialState, SimulationConfig]:
    '''
    Build (u0, v0) for a config. A config giving F_target instead of eta is resolved first, and
    the returned config carries the eta that was found.
    '''
    mesh = sim.mesh.build()
    spec = sim.initial_data
    if spec.F_target is not None:
        eta = find_eta_for_F(spec, mesh, sim.model.build(), spec.F_target)
        spec = replace(spec, eta=eta, F_target=None)
        sim = replace(sim, initial_data=spec)
    return build(spec, mesh), sim


def run_scenario(sim: SimulationConfig) -> RunResult:
    state0, sim = prepare_initial_state(sim)
    model = sim.model.build()
    report = membership(state0, model, sim.membership.K_user, sim.membership.A_cap)
    logger.info(f'Initial data: m = {report.m_actual:.6g}, A = {report.A_actual:.6g}, F0 = {report.F0:.6g}')

    final = [state0]
    snapshots: list[RadialState] = []
    trajectory, verdict = run(
        state0, model, sim.solver,
        diag_hooks=(lambda state, _: final.__setitem__(0, state),),
        cadence=sim.diagnostics.cadence(),
        snapshot_hooks=(snapshots.append,),
    )

    records = trajectory.records
    liapunov = check_liapunov_identity(records) if len({r.t for r in records}) > 1 else None
    ratio = check_ratio_bound(records)

    # A trigger with F still above -1 (the usual mesh-bound collapse) leaves no comparison ODE to integrate
    T_extrapolated = refused = None
    if verdict.label == Verdict.FINITE_TIME_BLOWUP:
        try:
            T_extrapolated = estimate_blowup_time(records)
        except ExtrapolationError as e:
            refused = str(e)
            logger.warning(f'Blowup time not extrapolated: {e}')

    return RunResult(
        config=sim,
        trajectory=trajectory,
        verdict=verdict,
        initial=state0,
        final=final[0],
        membership=report,
        liapunov=liapunov,
        ratio=ratio,
        T_extrapolated=T_extrapolated,
        extrapolation_refused=refused,
        v_decay=v_decay_ratio(records, state0),
        snapshots=snapshots,
    )


def refine(base: RunResult, refinements: int = 1) -> list[RunResult]:
    ''' Rerun the base config with the same initial data at 2N, 4N, ... cells. '''
    results = []
    for k in range(1, refinements + 1):
        mesh = replace(base.config.mesh, N=base.config.mesh.N * 2**k)
        logger.info(f'Refinement {k} of {refinements}: N = {mesh.N}')
        results.append(run_scenario(replace(base.config, mesh=mesh)))
    return results


def confirm_blowup(sim: SimulationConfig, refinements: int = 1, base: RunResult | None = None) -> RunVerdict:
    '''
    Confirm or reject a FiniteTimeBlowup from one mesh by rerunning at N, 2N (and 4N with two
    refinements). The verdict is Inconclusive unless every refinement triggers and they agree.
    '''
    if base is None:
        base = run_scenario(sim)
    if base.verdict.label != Verdict.FINITE_TIME_BLOWUP:
        raise ValueError(f'Only a FiniteTimeBlowup can be confirmed, the base run is {base.verdict.label.value}')
    if refinements < 1:
        return base.verdict

    runs = [base, *refine(base, refinements)]
    verdict = refinement_verdict([(r.config.mesh.N, r.verdict) for r in runs])
    logger.info(f'Refinement study: {verdict.label.value} ({verdict.reason})')
    return verdict


def artifact_paths(config_hash: str, out_dir: Path) -> dict[str, Path]:
    return {
        'series': out_dir / f'{config_hash}-series.csv',
        'summary': out_dir / f'{config_hash}-summary.json',
        'final': out_dir / f'{config_hash}-final.csv',
    }


def snapshot_path(config_hash: str, out_dir: Path, t: float) -> Path:
    return out_dir / f'{config_hash}-snapshot-t{t:.6g}.csv'


def write_artifacts(result: RunResult, out_dir: Path) -> Sequence[Path]:
    ''' Series CSV, snapshots, final state and summary JSON, each named after the config hash. '''
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = artifact_paths(result.config_hash, out_dir)

    result.trajectory.write_csv(paths['series'])
    write_snapshot(paths['final'], result.final)
    written = [paths['series'], paths['final']]

    for state in result.snapshots:
        path = snapshot_path(result.config_hash, out_dir, state.t)
        write_snapshot(path, state)
        written.append(path)

    with open(paths['summary'], 'w', encoding='utf-8') as file:
        file.write(to_json_string(result.summary()))
        file.write('\n')
    written.append(paths['summary'])

    logger.info(f'Wrote {len(written)} files to {out_dir}')
    return written

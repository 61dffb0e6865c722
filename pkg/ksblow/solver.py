'''
Time integration of the radial system

    u_t = (1/r) (r phi(u) u_r)_r - (1/r) (r psi(u) v_r)_r
    v_t = (1/r) (r v_r)_r - v + u

with no-flux boundaries. Each step advances u explicitly with a conservative face flux and then
v by one backward Euler solve using the new u. The step size comes from a CFL bound and is
halved on positivity or energy violations; a collapse below dt_min is a blowup trigger.
'''
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, fields, replace

import numpy as np

from ksblow.diagnostics import DiagnosticsRecord, ENERGY_TOLERANCE, face_terms, liapunov_F, record
from ksblow.exceptions import BlowupSuspected, ConfigError, ConservationError, DomainError, TimeStepCollapse
from ksblow.grid import RadialField, RadialMesh
from ksblow.logging import logger, raise_or_warn
from ksblow.models import NonlinearityModel
from ksblow.trajectory import Trajectory
from ksblow.types import FluxScheme, PositivityMode, VScheme
from ksblow.verdict import RunVerdict, Trigger, classify_trajectory

# Accepted states satisfy min u >= -POSITIVITY_TOLERANCE * max |u| (likewise v)
POSITIVITY_TOLERANCE = 1e-12

# Relative drift of the mass of u that counts as a conservation failure
MASS_TOLERANCE = 1e-10


@dataclass(frozen=True)
class RadialState:
    mesh: RadialMesh
    u: RadialField
    v: RadialField
    t: float = 0.0
    dt: float = 0.0
    step_count: int = 0
    clip_count: int = 0
    energy_violations: int = 0

    @classmethod
    def from_arrays(cls, mesh: RadialMesh, u: np.ndarray, v: np.ndarray, **kwargs) -> 'RadialState':
        return cls(mesh, RadialField(u, mesh), RadialField(v, mesh), **kwargs)

    @classmethod
    def homogeneous(cls, mesh: RadialMesh, c: float, **kwargs) -> 'RadialState':
        return cls(mesh, RadialField.constant(mesh, c), RadialField.constant(mesh, c), **kwargs)

    @property
    def mass(self) -> float:
        return self.mesh.integrate(self.u.values)

    @property
    def linf(self) -> float:
        return float(np.max(np.abs(self.u.values)))


@dataclass(frozen=True)
class SolverConfig:
    t_end: float = 1.0
    cfl_safety: float = 0.4
    dt_min: float = 1e-14
    dt_max: float = 1e-2
    u_blowup_threshold: float = 1e8
    collapse_fraction: float = 0.5
    v_scheme: VScheme = VScheme.IMPLICIT
    positivity_mode: PositivityMode = PositivityMode.REJECT_AND_HALVE
    flux_scheme: FluxScheme = FluxScheme.UPWIND
    energy_guard: bool = True
    max_retries: int = 30
    allow_degenerate: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, 'v_scheme', VScheme(self.v_scheme))
        object.__setattr__(self, 'positivity_mode', PositivityMode(self.positivity_mode))
        object.__setattr__(self, 'flux_scheme', FluxScheme(self.flux_scheme))
        if problems := self.problems():
            raise ConfigError(problems)

    def problems(self, prefix: str = 'solver') -> list[str]:
        problems = []
        if not 0.0 < self.cfl_safety < 1.0:
            problems.append(f'{prefix}.cfl_safety: must lie in (0, 1), got {self.cfl_safety}')
        if not 0.0 < self.dt_min < self.dt_max:
            problems.append(f'{prefix}.dt_min: must satisfy 0 < dt_min < dt_max, got {self.dt_min} and {self.dt_max}')
        if not self.t_end > 0.0:
            problems.append(f'{prefix}.t_end: must be positive, got {self.t_end}')
        if not self.u_blowup_threshold > 0.0:
            problems.append(f'{prefix}.u_blowup_threshold: must be positive, got {self.u_blowup_threshold}')
        if not 0.0 < self.collapse_fraction <= 1.0:
            problems.append(f'{prefix}.collapse_fraction: must lie in (0, 1], got {self.collapse_fraction}')
        if self.max_retries < 0:
            problems.append(f'{prefix}.max_retries: must be non-negative, got {self.max_retries}')
        return problems

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class Cadence:
    ''' When run emits records: every k accepted steps and/or every dt_record of model time. '''
    every_steps: int | None = 1
    every_time: float | None = None
    snapshot_times: tuple[float, ...] = field(default=())


RecordHook = Callable[[RadialState, DiagnosticsRecord], None]
SnapshotHook = Callable[[RadialState], None]


def _position(mesh: RadialMesh, values: np.ndarray) -> float:
    bad = np.flatnonzero(~np.isfinite(values))
    return float(mesh.centers[min(bad[0], mesh.N - 1)]) if bad.size else math.nan


# Operations

def flux_u(state: RadialState, model: NonlinearityModel, scheme: FluxScheme = FluxScheme.UPWIND) -> np.ndarray:
    '''
    Face fluxes F_k = r_k (phi u_r - psi v_r) on the N + 1 faces, zero on both boundary faces.
    The upwind scheme averages phi and takes psi from the cell the chemotactic drift leaves;
    the gradient scheme writes the flux as r psi (G'(u) - v)_r with psi taken from the donor cell.
    '''
    mesh, u, v = state.mesh, state.u.values, state.v.values
    flux = np.zeros(mesh.N + 1)
    inner = slice(1, mesh.N)

    match scheme:
        case FluxScheme.UPWIND:
            phi = model.phi(u)
            psi = model.psi(u)
            for values, what in ((phi, 'phi'), (psi, 'psi')):
                if not np.all(np.isfinite(values)):
                    raise BlowupSuspected(state.t, _position(mesh, values), what)

            gu = mesh.grad(u)[inner]
            gv = mesh.grad(v)[inner]
            phi_bar = 0.5 * (phi[:-1] + phi[1:])
            # Drift runs up v_r: from the inner cell where v rises outward
            psi_up = np.where(gv > 0.0, psi[:-1], psi[1:])
            flux[inner] = mesh.faces[inner] * (phi_bar * gu - psi_up * gv)

        case FluxScheme.GRADIENT:
            terms = face_terms(mesh, u, v, model, FluxScheme.GRADIENT)
            flux = mesh.faces * terms.psi * terms.drive
            if not np.all(np.isfinite(flux)):
                raise BlowupSuspected(state.t, _position(mesh, flux), 'flux')

    return flux


def _donor_rates(state: RadialState, model: NonlinearityModel) -> np.ndarray:
    ''' Per-cell outflow rate sum_out (a_k / w_i) beta(u_i) |mu_r| of the gradient scheme. '''
    mesh, u = state.mesh, state.u.values
    terms = face_terms(mesh, u, state.v.values, model, FluxScheme.GRADIENT)
    gmu = terms.drive[1:-1]
    k = np.arange(1, mesh.N)
    donor = np.where(gmu > 0.0, k, k - 1)
    rates = np.zeros(mesh.N)
    np.add.at(rates, donor, mesh.face_area[1:-1] * model.beta(u[donor]) * np.abs(gmu) / mesh.volumes[donor])
    return rates


def propose_dt(state: RadialState, model: NonlinearityModel, config: SolverConfig) -> float:
    '''
    cfl_safety times the smallest of the diffusive bound dr^2 / (2 max phi), the transport bound
    of the flux scheme and dt_max. Transport moves mass at speed beta(u) |v_r| for the upwind
    scheme; the gradient scheme uses its exact positivity limit instead.
    '''
    mesh, u, v = state.mesh, state.u.values, state.v.values
    dr = mesh.dr
    bounds = [config.dt_max]

    phi_max = float(np.max(model.phi(u)))
    if phi_max > 0.0:
        bounds.append(dr**2 / (2.0 * phi_max))

    match config.flux_scheme:
        case FluxScheme.UPWIND:
            gv = mesh.grad(v)[1:-1]
            beta = model.beta(u)
            beta_up = np.where(gv > 0.0, beta[:-1], beta[1:])
            speed = float(np.max(beta_up * np.abs(gv), initial=0.0))
            if speed > 0.0:
                bounds.append(dr / (2.0 * speed))
        case FluxScheme.GRADIENT:
            rate = float(np.max(_donor_rates(state, model)))
            if rate > 0.0:
                bounds.append(1.0 / rate)

    if config.v_scheme == VScheme.EXPLICIT:
        bounds.append(dr**2 / (2.0 + dr**2))

    return config.cfl_safety * min(bounds)


def _advance(state: RadialState, model: NonlinearityModel, config: SolverConfig, dt: float) -> tuple[np.ndarray, np.ndarray]:
    mesh, u, v = state.mesh, state.u.values, state.v.values

    flux = flux_u(state, model, config.flux_scheme)
    u_new = u + dt * 2.0 * np.pi * np.diff(flux) / mesh.volumes
    if not np.all(np.isfinite(u_new)):
        raise BlowupSuspected(state.t + dt, _position(mesh, u_new), 'u')

    # Increment form: a steady state gives a zero right-hand side and stays bitwise fixed
    rhs = dt * (mesh.laplacian(v) - v + u_new)
    match config.v_scheme:
        case VScheme.IMPLICIT:
            v_new = v + mesh.helmholtz_solve(rhs, alpha=dt, shift=1.0 + dt)
        case VScheme.EXPLICIT:
            v_new = v + rhs

    if not np.all(np.isfinite(v_new)):
        raise BlowupSuspected(state.t + dt, _position(mesh, v_new), 'v')
    return u_new, v_new


def _negative(values: np.ndarray) -> bool:
    return float(values.min()) < -POSITIVITY_TOLERANCE * float(np.max(np.abs(values)))


def _step(state: RadialState, model: NonlinearityModel, config: SolverConfig,
          F: float | None = None) -> tuple[RadialState, float | None]:
    ''' One accepted step, and F at the new state when the energy guard is on. '''
    dt = state.dt
    if not dt > 0.0:
        raise ValueError(f'Step size must be positive, got {dt}')

    if config.energy_guard and F is None:
        F = liapunov_F(state, model)

    clip_count = state.clip_count
    energy_violations = state.energy_violations
    positivity_rejections = energy_rejections = 0

    while True:
        if dt < config.dt_min:
            raise TimeStepCollapse(state.t, dt, config.dt_min)

        u_new, v_new = _advance(state, model, config, dt)

        if _negative(u_new) or _negative(v_new):
            if config.positivity_mode == PositivityMode.REJECT_AND_HALVE:
                positivity_rejections += 1
                dt *= 0.5
                continue
            logger.warning(f'Clipping negative values at t = {state.t + dt:.9g} (min u = {u_new.min():.3g}, min v = {v_new.min():.3g})')
            u_new = np.maximum(u_new, 0.0)
            v_new = np.maximum(v_new, 0.0)
            clip_count += 1

        candidate = replace(state, u=RadialField(u_new, state.mesh), v=RadialField(v_new, state.mesh),
                            t=state.t + dt, dt=dt, step_count=state.step_count + 1,
                            clip_count=clip_count, energy_violations=energy_violations)

        if not config.energy_guard:
            break

        F_new = liapunov_F(candidate, model)
        if F_new <= F + ENERGY_TOLERANCE * (1.0 + abs(F)):
            F = F_new
            break

        # Energy rejections stop at dt_min instead of signalling a collapse
        if energy_rejections < config.max_retries and 0.5 * dt >= config.dt_min:
            energy_rejections += 1
            dt *= 0.5
            continue

        logger.warning(f'F rose by {F_new - F:.3g} at t = {candidate.t:.9g} after {energy_rejections} retries, step accepted')
        candidate = replace(candidate, energy_violations=energy_violations + 1)
        F = F_new
        break

    if positivity_rejections or energy_rejections:
        logger.debug(f'Step at t = {state.t:.9g} rejected {positivity_rejections} time(s) for positivity and '
                     f'{energy_rejections} time(s) for energy, dt = {dt:.3g}')
    return candidate, F


def step(state: RadialState, model: NonlinearityModel, config: SolverConfig) -> RadialState:
    ''' Advance by state.dt, halving on rejection; raises TimeStepCollapse below dt_min. '''
    new_state, _ = _step(state, model, config)
    return new_state


def solve_stationary_v(u: RadialField) -> RadialField:
    ''' v with -Delta_h v + v = u and Neumann conditions, the minimiser of F at fixed u. '''
    return RadialField(u.mesh.helmholtz_solve(u.values, alpha=1.0, shift=1.0), u.mesh)


def collapse_threshold(state: RadialState, config: SolverConfig) -> tuple[float, str]:
    ''' The smaller of the absolute threshold and collapse_fraction of the mass inside the innermost cell. '''
    mesh_bound = config.collapse_fraction * state.mass / state.mesh.volumes[0]
    if mesh_bound < config.u_blowup_threshold:
        return mesh_bound, f'{config.collapse_fraction:g} of the mass concentrated in the innermost cell'
    return config.u_blowup_threshold, f'||u||_inf above {config.u_blowup_threshold:g}'


def run(state0: RadialState, model: NonlinearityModel, config: SolverConfig,
        diag_hooks: Sequence[RecordHook] = (), cadence: Cadence = Cadence(),
        snapshot_hooks: Sequence[SnapshotHook] = ()) -> tuple[Trajectory, RunVerdict]:
    '''
    Integrate to t_end or until the blowup trigger fires: ||u||_inf above the collapse threshold,
    or the step size collapsing below dt_min after retries.
    '''
    mesh = state0.mesh
    if not config.allow_degenerate and (np.any(state0.u.values <= 0.0) or np.any(state0.v.values <= 0.0)):
        raise DomainError('Initial data must be positive in every cell, allow_degenerate is for test runs only')

    mass0 = state0.mass
    threshold, threshold_reason = collapse_threshold(state0, config)
    trajectory = Trajectory()
    snapshots = sorted(t for t in cadence.snapshot_times if 0.0 <= t <= config.t_end)

    def emit(state: RadialState) -> None:
        r = record(state, model, config.flux_scheme)
        trajectory.append(r)
        logger.debug(f't = {r.t:.9g} dt = {r.dt:.3g} linf = {r.linf_u:.6g} F = {r.F:.9g} D = {r.D:.6g}')
        for hook in diag_hooks:
            hook(state, r)

    def snapshot(state: RadialState) -> None:
        while snapshots and snapshots[0] <= state.t:
            snapshots.pop(0)
            for hook in snapshot_hooks:
                hook(state)

    state = state0
    F = liapunov_F(state, model) if config.energy_guard else None
    trigger: Trigger | None = None
    min_dt = math.inf
    next_record = cadence.every_time

    logger.info(f'Running {model.name} on N = {mesh.N}, R = {mesh.R:g} to t = {config.t_end:g} (m = {mass0:.6g})')
    emit(state)
    snapshot(state)

    while state.t < config.t_end:
        stop = min([config.t_end, *snapshots[:1]])
        dt = min(propose_dt(state, model, config), stop - state.t)

        try:
            state, F = _step(replace(state, dt=dt), model, config, F)
        except TimeStepCollapse as e:
            trigger = Trigger('dt-collapse', e.t, state.linf, str(e))
            break

        # Land exactly on stop times despite round-off in t + dt
        if abs(stop - state.t) <= 1e-12 * max(1.0, stop):
            state = replace(state, t=stop)

        min_dt = min(min_dt, state.dt)

        if mass0 > 0.0 and state.clip_count == 0 and abs(state.mass - mass0) > MASS_TOLERANCE * mass0:
            raise_or_warn(ConservationError(mass0, state.mass))

        if state.linf > threshold:
            trigger = Trigger('threshold', state.t, state.linf, threshold_reason)
            emit(state)
            break

        due = cadence.every_steps is not None and state.step_count % cadence.every_steps == 0
        if cadence.every_time is not None and state.t >= next_record:
            due = True
            while next_record <= state.t:
                next_record += cadence.every_time
        if due:
            emit(state)
        snapshot(state)

    if trajectory.last.t != state.t:
        emit(state)

    verdict = classify_trajectory(trajectory, config.t_end, config.dt_min, mesh.N, trigger, min_dt)
    logger.info(f'{verdict.label.value} after {state.step_count} steps at t = {state.t:.9g}: {verdict.reason}')
    if state.clip_count:
        logger.warning(f'Clipping fired {state.clip_count} time(s), mass of u is no longer conserved')
    return trajectory, verdict

'''
Energy functionals along trajectories.

With f = -Delta_h v + v - u on cells and g = (phi/sqrt(psi)) u_r - sqrt(psi) v_r on faces, the
discrete dissipation is D = ||f||^2 + ||g||^2, where cell sums carry the annulus areas and face
sums the weights 2 pi r_k dr. The face mobility psi and the face quotient phi/psi follow the flux
scheme of the run, so that D is the exact semi-discrete energy decay rate of the gradient scheme.
'''
import math
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Any, NamedTuple, Sequence

import numpy as np
from scipy.special import hyp2f1

from ksblow import KAPPA, THETA
from ksblow.exceptions import DomainError, ExtrapolationError
from ksblow.grid import RadialField, RadialMesh, w12_norm
from ksblow.logging import logger
from ksblow.models import NonlinearityModel, eval_dG, eval_G
from ksblow.types import FluxScheme

if TYPE_CHECKING:
    from ksblow.solver import RadialState

# F may rise by this much per accepted step before it counts as a violation
ENERGY_TOLERANCE = 1e-9

# Extrapolation window: last quarter of the records, never fewer than this
MIN_WINDOW = 20

# A ratio above this multiple of the trajectory median counts as unbounded
RATIO_SPREAD = 1e6


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    dt: float
    mass_u: float
    mass_v: float
    linf_u: float
    F: float
    D: float
    norm_f: float
    norm_g: float
    ratio36: float
    Bhat: float
    A_W12: float = math.nan
    dFdt_residual: float = math.nan

    def to_json(self) -> dict[str, float]:
        return asdict(self)


class FaceTerms(NamedTuple):
    ''' Face mobility psi_f and the potential gradient (phi/psi) u_r - v_r, both zero on the boundary. '''
    psi: np.ndarray
    drive: np.ndarray
    g: np.ndarray


def _interior(mesh: RadialMesh) -> slice:
    return slice(1, mesh.N)


def face_terms(mesh: RadialMesh, u: np.ndarray, v: np.ndarray, model: NonlinearityModel,
               scheme: FluxScheme = FluxScheme.UPWIND) -> FaceTerms:
    inner = _interior(mesh)
    psi = np.zeros(mesh.N + 1)
    drive = np.zeros(mesh.N + 1)
    g = np.zeros(mesh.N + 1)

    match scheme:
        case FluxScheme.UPWIND:
            gu = mesh.grad(u)[inner]
            gv = mesh.grad(v)[inner]
            u_face = 0.5 * (u[:-1] + u[1:])
            psi_f = model.psi(u_face)
            phi_f = model.phi(u_face)

            # The phi/psi u_r term vanishes where u_r does, even if psi does too
            singular = (psi_f == 0.0) & (gu != 0.0)
            if np.any(singular):
                k = int(np.flatnonzero(singular)[0]) + 1
                raise DomainError(f'psi(u) = 0 at face r = {mesh.faces[k]:.6g} with a non-zero u_r')

            with np.errstate(divide='ignore', invalid='ignore'):
                quotient = np.where(gu == 0.0, 0.0, phi_f / psi_f * gu)
                diffusive = np.where(gu == 0.0, 0.0, phi_f / np.sqrt(psi_f) * gu)

            psi[inner] = psi_f
            drive[inner] = quotient - gv
            g[inner] = diffusive - np.sqrt(psi_f) * gv

        case FluxScheme.GRADIENT:
            if np.any(u <= 0.0):
                raise DomainError('The gradient flux scheme needs u > 0 in every cell')
            mu = eval_dG(model, u) - v
            gmu = mesh.grad(mu)[inner]
            psi_c = model.psi(u)
            # Mass moves down the potential gradient, so the donor cell is the outer one when it rises
            psi_f = np.where(gmu > 0.0, psi_c[1:], psi_c[:-1])

            psi[inner] = psi_f
            drive[inner] = gmu
            g[inner] = np.sqrt(psi_f) * gmu

    return FaceTerms(psi, drive, g)


# Functionals

def compute_f(state: 'RadialState') -> RadialField:
    ''' f = -Delta_h v + v - u. '''
    mesh, u, v = state.mesh, state.u.values, state.v.values
    return RadialField(-mesh.laplacian(v) + v - u, mesh)


def compute_g(state: 'RadialState', model: NonlinearityModel, scheme: FluxScheme = FluxScheme.UPWIND) -> np.ndarray:
    return face_terms(state.mesh, state.u.values, state.v.values, model, scheme).g


def liapunov_F(state: 'RadialState', model: NonlinearityModel) -> float:
    ''' F = 1/2 int |v_r|^2 + 1/2 int v^2 - int u v + int G(u). '''
    mesh, u, v = state.mesh, state.u.values, state.v.values
    gv = mesh.grad(v)
    w = mesh.volumes
    return 0.5 * mesh.face_sum(gv**2) + 0.5 * float(w @ v**2) - float(w @ (u * v)) + float(w @ eval_G(model, u))


def dissipation_D(state: 'RadialState', model: NonlinearityModel, scheme: FluxScheme = FluxScheme.UPWIND) -> float:
    ''' D = int v_t^2 + int psi (phi/psi u_r - v_r)^2 with v_t taken from the equation, i.e. -f. '''
    mesh = state.mesh
    v_t = compute_f(state).values
    terms = face_terms(mesh, state.u.values, state.v.values, model, scheme)
    return float(mesh.volumes @ v_t**2) + mesh.face_sum(terms.psi * terms.drive**2)


def check_v_decay(state: 'RadialState') -> float:
    '''
    Bhat = max_i v_i r^2, with r the outer radius of cell i (the supremum of r^2 over the annulus),
    so that v = c gives Bhat = c R^2.
    '''
    r_outer = state.mesh.faces[1:]
    return float(np.max(state.v.values * r_outer**KAPPA, initial=0.0))


def data_norm(state: 'RadialState') -> float:
    ''' ||u||_1 + ||v||_1 + ||v_r||_2, the bound on Bhat in terms of the data. '''
    mesh = state.mesh
    gv = mesh.grad(state.v.values)
    return (mesh.integrate(np.abs(state.u.values)) + mesh.integrate(np.abs(state.v.values))
            + math.sqrt(mesh.face_sum(gv**2)))


def homogeneous_F(model: NonlinearityModel, m: float, R: float) -> float:
    ''' F of the constant state u = v = m / (pi R^2). '''
    area = math.pi * R**2
    c = m / area
    return area * (eval_G(model, c) - 0.5 * c**2)


def record(state: 'RadialState', model: NonlinearityModel, scheme: FluxScheme = FluxScheme.UPWIND) -> DiagnosticsRecord:
    mesh, u, v = state.mesh, state.u.values, state.v.values
    w = mesh.volumes

    f = compute_f(state).values
    terms = face_terms(mesh, u, v, model, scheme)
    norm_f = math.sqrt(float(w @ f**2))
    norm_g = math.sqrt(mesh.face_sum(terms.g**2))

    F = liapunov_F(state, model)
    D = float(w @ f**2) + mesh.face_sum(terms.psi * terms.drive**2)

    return DiagnosticsRecord(
        t=state.t,
        dt=state.dt,
        mass_u=mesh.integrate(u),
        mass_v=mesh.integrate(v),
        linf_u=float(np.max(np.abs(u))),
        F=F,
        D=D,
        norm_f=norm_f,
        norm_g=norm_g,
        ratio36=-F / (max(D, 0.0)**THETA + 1.0),
        Bhat=check_v_decay(state),
        A_W12=w12_norm(state.v),
    )


# Trajectory checks

@dataclass(frozen=True)
class LiapunovReport:
    residuals: np.ndarray = field(repr=False)
    max_residual: float
    mean_residual: float
    max_relative: float
    mean_relative: float
    violations: int

    @property
    def monotone(self) -> bool:
        return self.violations == 0

    def to_json(self) -> dict[str, Any]:
        return {
            'max_residual': self.max_residual,
            'mean_residual': self.mean_residual,
            'max_relative': self.max_relative,
            'mean_relative': self.mean_relative,
            'violations': self.violations,
            'monotone': self.monotone,
        }


def identity_residuals(records: Sequence[DiagnosticsRecord]) -> np.ndarray:
    ''' |dF/dt + D| between consecutive records, with D averaged over both ends. '''
    t = np.array([r.t for r in records])
    F = np.array([r.F for r in records])
    D = np.array([r.D for r in records])
    return np.abs(np.diff(F) / np.diff(t) + 0.5 * (D[:-1] + D[1:]))


def check_liapunov_identity(records: Sequence[DiagnosticsRecord]) -> LiapunovReport:
    distinct: list[DiagnosticsRecord] = []
    for r in records:
        if not distinct or r.t > distinct[-1].t:
            distinct.append(r)
    if len(distinct) < 2:
        raise ValueError('The energy identity needs at least two records at distinct times')

    residuals = identity_residuals(distinct)
    D = np.array([r.D for r in distinct])
    relative = residuals / (1.0 + 0.5 * (D[:-1] + D[1:]))

    F = np.array([r.F for r in distinct])
    violations = int(np.sum(np.diff(F) > ENERGY_TOLERANCE * (1.0 + np.abs(F[:-1]))))

    return LiapunovReport(
        residuals=residuals,
        max_residual=float(residuals.max()),
        mean_residual=float(residuals.mean()),
        max_relative=float(relative.max()),
        mean_relative=float(relative.mean()),
        violations=violations,
    )


@dataclass(frozen=True)
class RatioReport:
    ''' Boundedness of (-F) / (D^theta + 1) along a run; the bound itself is the fitted constant. '''
    values: np.ndarray = field(repr=False)
    sup: float
    median: float
    bounded: bool

    @property
    def fitted_constant(self) -> float:
        return max(self.sup, 0.0)

    def to_json(self) -> dict[str, Any]:
        return {'sup': self.sup, 'median': self.median, 'fitted_constant': self.fitted_constant, 'bounded': self.bounded}


def check_ratio_bound(records: Sequence[DiagnosticsRecord]) -> RatioReport:
    if not records:
        raise ValueError('No records to check')

    values = np.array([r.ratio36 for r in records])
    finite = np.isfinite([r.D for r in records])
    median = float(np.median(values))
    scale = max(abs(median), np.finfo(float).tiny)
    bounded = bool(np.all(values[finite] <= RATIO_SPREAD * scale))

    return RatioReport(values=values, sup=float(values.max()), median=median, bounded=bounded)


def remaining_time(y: float, c: float, theta: float = THETA) -> float:
    '''
    Time for y' = c (y^p - 1), p = 1/theta, to diverge from y > 1:

        int_y^inf dy / (y^p - 1) = y^(1 - p) / (p - 1) * 2F1(1, (p - 1)/p; (2p - 1)/p; y^-p)
    '''
    p = 1.0 / theta
    a = (p - 1.0) / p
    return y**(1.0 - p) / ((p - 1.0) * c) * float(hyp2f1(1.0, a, a + 1.0, y**-p))


def estimate_blowup_time(records: Sequence[DiagnosticsRecord], theta: float = THETA) -> float:
    '''
    Fit c in d(-F)/dt >= c ((-F)^(1/theta) - 1) over the last quarter of the records (at least
    MIN_WINDOW of them), take the smallest c and integrate the comparison ODE to divergence.
    '''
    if len(records) < MIN_WINDOW:
        raise ExtrapolationError(f'Need at least {MIN_WINDOW} records to extrapolate, got {len(records)}')

    window = records[-max(MIN_WINDOW, len(records) // 4):]
    t = np.array([r.t for r in window])
    y = -np.array([r.F for r in window])

    if not np.all(np.diff(t) > 0.0):
        raise ExtrapolationError('Records in the fitting window are not at increasing times')
    if not np.all(np.diff(y) > 0.0):
        raise ExtrapolationError('-F is not increasing over the fitting window')
    if y[0] <= 1.0:
        raise ExtrapolationError(f'-F = {y[0]:.6g} <= 1 at the start of the fitting window')

    midpoint = 0.5 * (y[:-1] + y[1:])
    c = float(np.min(np.diff(y) / np.diff(t) / (midpoint**(1.0 / theta) - 1.0)))

    estimate = float(t[-1]) + remaining_time(float(y[-1]), c, theta)
    logger.debug(f'Fitted c = {c:.6g} over {len(window)} records, extrapolated blowup at t = {estimate:.9g}')
    return estimate


def v_decay_ratio(records: Sequence[DiagnosticsRecord], state0: 'RadialState') -> float:
    ''' sup_t Bhat relative to the data norm of the initial state. '''
    norm = data_norm(state0)
    sup = max(r.Bhat for r in records)
    return sup / norm if norm > 0.0 else math.inf

'''
Concentrated radial initial data (u_eta, v_eta) and the quantities deciding membership of the
blowup set: mass, ||v0||_{W^{1,2}} and the initial energy F0.
'''
import math
from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from ksblow.diagnostics import homogeneous_F, liapunov_F
from ksblow.exceptions import DomainError, ResolutionError
from ksblow.grid import RadialField, RadialMesh, w12_norm
from ksblow.logging import logger
from ksblow.models import NonlinearityModel
from ksblow.solver import RadialState, solve_stationary_v
from ksblow.types import Profile, VMode

# Default positivity floor relative to the mean density m / (pi R^2)
FLOOR_FRACTION = 1e-8

# Profiles narrower than this many cells are not resolved
MIN_CELLS_PER_ETA = 2.0

ETA_RTOL = 1e-4


@dataclass(frozen=True)
class InitialDataSpec:
    m: float
    eta: float | None = None
    profile: Profile = Profile.RATIONAL4
    floor: float | None = None
    v_mode: VMode = VMode.ELLIPTIC
    F_target: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, 'profile', Profile(self.profile))
        object.__setattr__(self, 'v_mode', VMode(self.v_mode))

    def problems(self, R: float, prefix: str = 'initial_data') -> list[str]:
        problems = []
        if not self.m > 0:
            problems.append(f'{prefix}.m: must be positive, got {self.m}')
        if (self.eta is None) == (self.F_target is None):
            problems.append(f'{prefix}: exactly one of eta and F_target must be given')
        if self.eta is not None and not 0 < self.eta < R:
            problems.append(f'{prefix}.eta: must lie in (0, R = {R:g}), got {self.eta}')
        if self.floor is not None and self.floor < 0:
            problems.append(f'{prefix}.floor: must be non-negative, got {self.floor}')
        return problems


def profile_shape(profile: Profile, r: np.ndarray, eta: float) -> np.ndarray:
    match profile:
        case Profile.RATIONAL4:
            return (1.0 + (r / eta)**2)**-2
        case Profile.GAUSSIAN:
            return np.exp(-(r / eta)**2)
        case Profile.FLAT:
            return np.ones_like(r)


def min_resolvable_eta(mesh: RadialMesh) -> float:
    return MIN_CELLS_PER_ETA * mesh.dr


def build(spec: InitialDataSpec, mesh: RadialMesh) -> RadialState:
    '''
    u0 = m shape / Z + floor, rescaled so that its mesh integral is exactly m; v0 solves the
    stationary equation for u0 (elliptic) or is the Helmholtz smoothing of u0 at scale eta (copy).
    '''
    eta = spec.eta
    if eta is None:
        raise ValueError('Resolve eta (find_eta_for_F) before building the initial data')
    if spec.profile != Profile.FLAT and not eta > min_resolvable_eta(mesh):
        raise ResolutionError(eta, message=f'eta = {eta:.6g} is below {MIN_CELLS_PER_ETA:g} dr = {min_resolvable_eta(mesh):.6g}, refine the mesh')

    shape = profile_shape(spec.profile, mesh.centers, eta)
    floor = spec.floor if spec.floor is not None else FLOOR_FRACTION * spec.m / (math.pi * mesh.R**2)

    u = spec.m * shape / mesh.integrate(shape) + floor
    u *= spec.m / mesh.integrate(u)
    u0 = RadialField(u, mesh)

    match spec.v_mode:
        case VMode.ELLIPTIC:
            v0 = solve_stationary_v(u0)
        case VMode.COPY:
            v0 = RadialField(mesh.helmholtz_solve(u, alpha=eta**2, shift=1.0), mesh)

    return RadialState(mesh, u0, v0)


@dataclass(frozen=True)
class MembershipReport:
    m_actual: float
    A_actual: float
    F0: float
    K_user: float
    A_cap: float | None = None

    @property
    def A(self) -> float:
        return self.A_cap if self.A_cap is not None else self.A_actual

    @property
    def is_member(self) -> bool:
        if self.A_cap is not None and self.A_actual > self.A_cap:
            return False
        return self.F0 <= -self.K_user * (1.0 + self.A**2)

    def to_json(self) -> dict[str, Any]:
        return {
            'm_actual': self.m_actual,
            'A_actual': self.A_actual,
            'A_cap': self.A_cap,
            'F0': self.F0,
            'K_user': self.K_user,
            'is_member': self.is_member,
        }


def membership(state0: RadialState, model: NonlinearityModel, K_user: float = 1.0, A_cap: float | None = None) -> MembershipReport:
    ''' K_user stands in for the existential constant of the blowup set. '''
    return MembershipReport(
        m_actual=state0.mass,
        A_actual=w12_norm(state0.v),
        F0=liapunov_F(state0, model),
        K_user=K_user,
        A_cap=A_cap,
    )


def find_eta_for_F(spec: InitialDataSpec, mesh: RadialMesh, model: NonlinearityModel, F_target: float) -> float:
    '''
    Largest eta with F(u_eta, v_eta) <= F_target: halve eta from R/2 until the target is met, then
    bisect in log(eta) between the last two trials. F decreases as the data concentrates only for
    masses above about 8 pi; below it the search ends in DomainError or ResolutionError.
    '''
    F_flat = homogeneous_F(model, spec.m, mesh.R)
    if not F_target < F_flat:
        raise DomainError(f'F_target = {F_target:.6g} is not below the energy {F_flat:.6g} of the homogeneous state')

    def energy(eta: float) -> float:
        return liapunov_F(build(replace(spec, eta=eta, F_target=None), mesh), model)

    eta_min = min_resolvable_eta(mesh) * (1.0 + 1e-9)
    hi = 0.5 * mesh.R
    if (F_hi := energy(hi)) <= F_target:
        logger.info(f'F = {F_hi:.6g} at eta = {hi:.6g} already meets the target')
        return hi

    while True:
        lo = max(0.5 * hi, eta_min)
        F_lo = energy(lo)
        logger.debug(f'eta = {lo:.6g}: F = {F_lo:.9g}')
        if F_lo <= F_target:
            break
        if lo == eta_min:
            raise ResolutionError(lo, F_lo)
        hi = lo

    while hi / lo > 1.0 + ETA_RTOL:
        mid = math.sqrt(lo * hi)
        if energy(mid) <= F_target:
            lo = mid
        else:
            hi = mid

    logger.info(f'eta = {lo:.6g} reaches F <= {F_target:g} on N = {mesh.N}')
    return lo

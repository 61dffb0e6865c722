'''
Uniform cell-centred radial mesh on (0, R) with 2D polar weights.

Cell i covers the annulus [i dr, (i + 1) dr], so no node sits at the origin. Face k sits at
radius k dr; faces 0 and N carry no flux (symmetry at r = 0, Neumann at r = R). Every operator
here works on plain arrays so the solver can call it in its inner loop; RadialField wraps an
array together with its mesh for everything else.
'''
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_banded


def _frozen(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class RadialMesh:
    R: float
    N: int

    def __post_init__(self) -> None:
        if not self.R > 0:
            raise ValueError(f'Outer radius must be positive, got {self.R}')
        if self.N < 2:
            raise ValueError(f'At least two cells are needed, got N = {self.N}')

    @property
    def dr(self) -> float:
        return self.R / self.N

    @cached_property
    def centers(self) -> np.ndarray:
        return _frozen((np.arange(self.N) + 0.5) * self.dr)

    @cached_property
    def faces(self) -> np.ndarray:
        return _frozen(np.arange(self.N + 1) * self.dr)

    @cached_property
    def volumes(self) -> np.ndarray:
        ''' Annulus areas pi ((i + 1)^2 - i^2) dr^2. '''
        return _frozen(np.pi * (2.0 * np.arange(self.N) + 1.0) * self.dr**2)

    @cached_property
    def face_area(self) -> np.ndarray:
        ''' Circumference 2 pi r_k of every face. '''
        return _frozen(2.0 * np.pi * self.faces)

    @cached_property
    def face_weights(self) -> np.ndarray:
        ''' 2 pi r_k dr, the quadrature weight of a face quantity. '''
        return _frozen(self.face_area * self.dr)

    @cached_property
    def _coupling(self) -> np.ndarray:
        # a_k / dr on interior faces, zero on both boundary faces
        c = self.face_area / self.dr
        c[0] = c[-1] = 0.0
        return _frozen(c)

    def refine(self, factor: int = 2) -> 'RadialMesh':
        return RadialMesh(self.R, self.N * factor)

    # Stencils on plain arrays

    def integrate(self, values: np.ndarray) -> float:
        return float(self.volumes @ values)

    def grad(self, values: np.ndarray) -> np.ndarray:
        ''' Face gradients (N + 1 entries), zero on the boundary faces. '''
        g = np.zeros(self.N + 1)
        g[1:-1] = np.diff(values) / self.dr
        return g

    def div(self, flux: np.ndarray) -> np.ndarray:
        ''' Cell divergence of a face quantity already multiplied by the face circumference. '''
        return np.diff(flux) / self.volumes

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        return self.div(self.face_area * self.grad(values))

    def face_sum(self, values: np.ndarray) -> float:
        ''' sum_k w~_k values_k over the faces. '''
        return float(self.face_weights @ values)

    def helmholtz_solve(self, rhs: np.ndarray, alpha: float, shift: float = 1.0) -> np.ndarray:
        ''' Solve (shift I - alpha Delta_h) x = rhs with one banded LU. '''
        c, w = self._coupling, self.volumes
        ab = np.zeros((3, self.N))
        ab[0, 1:] = -alpha * c[1:-1] / w[:-1]
        ab[1, :] = shift + alpha * (c[:-1] + c[1:]) / w
        ab[2, :-1] = -alpha * c[1:-1] / w[1:]
        return solve_banded((1, 1), ab, rhs, check_finite=False)


class Norms(NamedTuple):
    l1: float
    l2: float
    linf: float


@dataclass(frozen=True)
class RadialField:
    values: np.ndarray
    mesh: RadialMesh

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.mesh.N,):
            raise ValueError(f'Field has shape {values.shape}, mesh has {self.mesh.N} cells')
        if not np.all(np.isfinite(values)):
            raise ValueError('Field values must be finite')
        object.__setattr__(self, 'values', values)

    @classmethod
    def constant(cls, mesh: RadialMesh, c: float) -> 'RadialField':
        return cls(np.full(mesh.N, float(c)), mesh)

    @classmethod
    def from_profile(cls, mesh: RadialMesh, profile) -> 'RadialField':
        ''' Sample a function of r at the cell centres. '''
        return cls(np.asarray(profile(mesh.centers), dtype=float), mesh)

    def _check_mesh(self, other: 'RadialField') -> None:
        if other.mesh != self.mesh:
            raise ValueError(f'Fields live on different meshes: {self.mesh} and {other.mesh}')

    def __add__(self, other: 'RadialField') -> 'RadialField':
        self._check_mesh(other)
        return RadialField(self.values + other.values, self.mesh)

    def __sub__(self, other: 'RadialField') -> 'RadialField':
        self._check_mesh(other)
        return RadialField(self.values - other.values, self.mesh)

    def __mul__(self, scale: float) -> 'RadialField':
        return RadialField(self.values * scale, self.mesh)

    __rmul__ = __mul__


# Operations on fields

def integrate(field: RadialField) -> float:
    return field.mesh.integrate(field.values)


def grad_faces(field: RadialField) -> np.ndarray:
    return field.mesh.grad(field.values)


def laplacian(field: RadialField) -> RadialField:
    return RadialField(field.mesh.laplacian(field.values), field.mesh)


def norms(field: RadialField) -> Norms:
    w = field.mesh.volumes
    a = np.abs(field.values)
    return Norms(l1=float(w @ a), l2=float(np.sqrt(w @ a**2)), linf=float(a.max(initial=0.0)))


def w12_norm(field: RadialField) -> float:
    ''' (||v||_2^2 + sum_k w~_k (v_r)_k^2)^(1/2). '''
    g = grad_faces(field)
    return float(np.sqrt(norms(field).l2**2 + field.mesh.face_sum(g**2)))

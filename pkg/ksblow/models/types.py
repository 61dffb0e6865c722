from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ksblow import S0
from ksblow.exceptions import EvaluationError, ModelError
from ksblow.types import ModelKind, Regime, Status

ArrayFn = Callable[[np.ndarray], np.ndarray]

# Sampled positivity check runs over s in {0} U [1e-12, 1e12]
POSITIVITY_SAMPLES = np.concatenate(([0.0], np.geomspace(1e-12, 1e12, 241)))


@dataclass(frozen=True)
class NonlinearityModel:
    '''
    The pair (phi, beta) of the cross-diffusion system, with psi(s) = s * beta(s).

    Catalog families are power laws in (1 + s); their exponents drive both the closed forms of
    G and H and the exact condition checks. Custom models carry vectorised evaluators.
    '''
    kind: ModelKind
    q: float | None = None
    gamma1: float | None = None
    gamma2: float | None = None
    s0: float = S0
    phi_fn: ArrayFn | None = field(default=None, compare=False, repr=False)
    beta_fn: ArrayFn | None = field(default=None, compare=False, repr=False)
    label: str | None = None

    def __post_init__(self) -> None:
        self.validate()

    @property
    def name(self) -> str:
        match self.kind:
            case ModelKind.SEMILINEAR:
                return 'semilinear'
            case ModelKind.POWER_DIFFUSION:
                return f'power_diffusion(q={self.q:g})'
            case ModelKind.REMARK_FAMILY:
                return f'remark_family(gamma1={self.gamma1:g}, gamma2={self.gamma2:g})'
            case _:
                return self.label or 'custom'

    @property
    def is_catalog(self) -> bool:
        return self.kind != ModelKind.CUSTOM

    @property
    def l1(self) -> float | None:
        ''' Exponent of phi in powers of (1 + s). '''
        match self.kind:
            case ModelKind.SEMILINEAR:
                return 0.0
            case ModelKind.POWER_DIFFUSION:
                return self.q
            case ModelKind.REMARK_FAMILY:
                return -self.gamma1 - 2 * self.gamma2
        return None

    @property
    def l2(self) -> float | None:
        ''' Exponent of beta in powers of (1 + s). '''
        match self.kind:
            case ModelKind.SEMILINEAR | ModelKind.POWER_DIFFUSION:
                return 0.0
            case ModelKind.REMARK_FAMILY:
                return -self.gamma1 - self.gamma2
        return None

    @property
    def p(self) -> float | None:
        ''' Exponent of phi/beta, so that phi/psi = (1 + s)^p / s. '''
        if not self.is_catalog:
            return None
        return self.l1 - self.l2

    def phi(self, s: np.ndarray | float) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.is_catalog:
            return np.exp(self.l1 * np.log1p(s))
        return np.asarray(self.phi_fn(s), dtype=float)

    def beta(self, s: np.ndarray | float) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.is_catalog:
            return np.exp(self.l2 * np.log1p(s))
        return np.asarray(self.beta_fn(s), dtype=float)

    def psi(self, s: np.ndarray | float) -> np.ndarray:
        return np.asarray(s, dtype=float) * self.beta(s)

    def phi_over_beta(self, s: np.ndarray | float) -> np.ndarray:
        ''' sigma * phi(sigma) / psi(sigma), the integrand of H. '''
        s = np.asarray(s, dtype=float)
        if self.is_catalog:
            return np.exp(self.p * np.log1p(s))
        return self.phi(s) / self.beta(s)

    def validate(self) -> None:
        if self.s0 <= 1.0:
            raise ModelError(f'Threshold s0 must exceed 1, got {self.s0}')

        match self.kind:
            case ModelKind.POWER_DIFFUSION:
                if self.q is None or not np.isfinite(self.q):
                    raise ModelError('power_diffusion needs a finite exponent q')
            case ModelKind.REMARK_FAMILY:
                if self.gamma1 is None or self.gamma2 is None:
                    raise ModelError('remark_family needs exponents gamma1 and gamma2')
                if not self.gamma1 > 2:
                    raise ModelError(f'remark_family needs gamma1 > 2, got {self.gamma1}')
                if not 0 < self.gamma2 < 1:
                    raise ModelError(f'remark_family needs gamma2 in (0, 1), got {self.gamma2}')
            case ModelKind.CUSTOM:
                if self.phi_fn is None or self.beta_fn is None:
                    raise ModelError('custom models need evaluators for phi and beta')

        phi = self.phi(POSITIVITY_SAMPLES)
        beta = self.beta(POSITIVITY_SAMPLES)
        for values, what in ((phi, 'phi'), (beta, 'beta')):
            if not np.all(np.isfinite(values)):
                bad = POSITIVITY_SAMPLES[~np.isfinite(values)][0]
                raise EvaluationError(self.name, bad, f'non-finite {what}')
            if np.any(values <= 0.0):
                bad = POSITIVITY_SAMPLES[values <= 0.0][0]
                raise EvaluationError(self.name, bad, f'{what} is not positive')

    def echo(self) -> dict[str, Any]:
        return {
            'name': self.kind.value,
            'q': self.q,
            'gamma1': self.gamma1,
            'gamma2': self.gamma2,
            's0': self.s0,
        }


@dataclass(frozen=True)
class ConditionParams:
    a: float = 10.0
    mu: float = 0.5
    b: float = 10.0
    c0: float = 1e-3
    C_raz: float = 1e-2
    D1: float = 10.0
    C1: float = 1e-3
    C2: float = 10.0
    s_max_check: float = 1e12
    n_samples: int = 2048

    def __post_init__(self) -> None:
        coefficients = {'a': self.a, 'b': self.b, 'c0': self.c0, 'C_raz': self.C_raz,
                        'D1': self.D1, 'C1': self.C1, 'C2': self.C2}
        for name, value in coefficients.items():
            if not value > 0:
                raise ModelError(f'Condition coefficient {name} must be positive, got {value}')
        if not 0 < self.mu < 1:
            raise ModelError(f'Exponent mu must lie in (0, 1), got {self.mu}')
        if self.n_samples < 16:
            raise ModelError(f'At least 16 samples are needed, got {self.n_samples}')


@dataclass(frozen=True)
class ConditionEntry:
    condition: str
    status: Status
    witness_s: float | None = None
    fitted_coefficient: float | None = None
    details: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.status == Status.FAIL and self.witness_s is None:
            raise ValueError(f'Failed condition {self.condition} needs a witness')
        if self.status == Status.PASS and self.fitted_coefficient is None:
            raise ValueError(f'Passed condition {self.condition} needs a fitted coefficient')

    @property
    def passed(self) -> bool:
        return self.status == Status.PASS

    def to_json(self) -> dict[str, Any]:
        return {
            'condition': self.condition,
            'status': self.status.value,
            'witness_s': self.witness_s,
            'fitted_coefficient': self.fitted_coefficient,
            **({'details': dict(self.details)} if self.details else {}),
        }


@dataclass
class ConditionReport:
    model: str
    entries: dict[str, ConditionEntry] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    regime: Regime | None = None

    def __getitem__(self, condition: str) -> ConditionEntry:
        return self.entries[condition]

    def __contains__(self, condition: str) -> bool:
        return condition in self.entries

    def add(self, entry: ConditionEntry) -> None:
        self.entries[entry.condition] = entry

    def passes(self, *conditions: str) -> bool:
        return all(c in self.entries and self.entries[c].passed for c in conditions)

    def fails(self, condition: str) -> bool:
        return condition in self.entries and self.entries[condition].status == Status.FAIL

    @property
    def any_unknown(self) -> bool:
        return any(e.status == Status.UNKNOWN for e in self.entries.values())

    def to_json(self) -> dict[str, Any]:
        return {
            'model': self.model,
            'conditions': [entry.to_json() for entry in self.entries.values()],
            'regime': self.regime.value if self.regime else None,
            'notes': list(self.notes),
        }

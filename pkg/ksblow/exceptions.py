from collections.abc import Sequence


class KsblowError(Exception):
    pass

class ModelError(KsblowError):
    pass

class EvaluationError(ModelError):
    def __init__(self, model: str, s: float, message: str = 'non-finite evaluation') -> None:
        super().__init__(f'{model}: {message} at s = {s:.6g}')
        self.s = s

class QuadratureError(KsblowError):
    def __init__(self, a: float, b: float, estimate: float) -> None:
        super().__init__(f'Adaptive quadrature did not converge on [{a:.6g}, {b:.6g}] (partial estimate {estimate:.6g})')
        self.interval = (a, b)

class DomainError(KsblowError):
    pass

class ResolutionError(KsblowError):
    def __init__(self, eta: float, F: float | None = None, message: str | None = None) -> None:
        detail = f'; F = {F:.6g} there' if F is not None else ''
        super().__init__(message or f'Concentration eta = {eta:.6g} is the smallest resolvable on this mesh{detail}, refine the mesh')
        self.eta = eta
        self.F = F

class BlowupSuspected(KsblowError):
    def __init__(self, t: float, position: float, what: str = 'state') -> None:
        super().__init__(f'Non-finite {what} at t = {t:.9g}, r = {position:.6g}')
        self.t = t
        self.position = position

class ConservationError(KsblowError):
    def __init__(self, initial: float, current: float) -> None:
        super().__init__(f'Mass of u drifted from {initial!r} to {current!r}')

class ExtrapolationError(KsblowError):
    pass

class ConfigError(KsblowError):
    def __init__(self, problems: Sequence[str]) -> None:
        super().__init__('Invalid configuration:\n  ' + '\n  '.join(problems))
        self.problems = list(problems)

class TimeStepCollapse(KsblowError):
    def __init__(self, t: float, dt: float, dt_min: float) -> None:
        super().__init__(f'Time step collapsed to {dt:.3g} < {dt_min:.3g} at t = {t:.9g}')
        self.t = t
        self.dt = dt

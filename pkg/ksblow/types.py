from enum import Enum


class Status(str, Enum):
    PASS = 'pass'
    FAIL = 'fail'
    UNKNOWN = 'unknown'

class ModelKind(str, Enum):
    SEMILINEAR = 'semilinear'
    POWER_DIFFUSION = 'power_diffusion'
    REMARK_FAMILY = 'remark_family'
    CUSTOM = 'custom'

class Regime(str, Enum):
    FINITE_TIME_BLOWUP = 'FiniteTimeBlowupRegime'
    INFINITE_TIME_BLOWUP = 'InfiniteTimeBlowupRegime'
    GLOBAL_EXISTENCE = 'GlobalExistenceRegime'
    UNKNOWN = 'Unknown'

class Verdict(str, Enum):
    FINITE_TIME_BLOWUP = 'FiniteTimeBlowup'
    INFINITE_TIME_BLOWUP_CANDIDATE = 'InfiniteTimeBlowupCandidate'
    BOUNDED_CANDIDATE = 'BoundedCandidate'
    INCONCLUSIVE = 'Inconclusive'
    ERROR = 'Error'

class VScheme(str, Enum):
    EXPLICIT = 'explicit'
    IMPLICIT = 'implicit'

class PositivityMode(str, Enum):
    REJECT_AND_HALVE = 'reject-and-halve'
    CLIP_WARN = 'clip-warn'

class FluxScheme(str, Enum):
    UPWIND = 'upwind'
    GRADIENT = 'gradient'

class Profile(str, Enum):
    RATIONAL4 = 'rational4'
    GAUSSIAN = 'gaussian'
    FLAT = 'flat'

class VMode(str, Enum):
    ELLIPTIC = 'elliptic'
    COPY = 'copy'

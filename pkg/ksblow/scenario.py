'''
Run and sweep configuration files.

A SimulationConfig is a YAML document with the sections below; every section is optional and
falls back to its defaults. All problems found while loading are collected and raised together
as one ConfigError naming the dotted path of each offending field.

    mesh:          {R, N}
    model:         {name, q, gamma1, gamma2, s0}
    solver:        {t_end, cfl_safety, dt_min, dt_max, u_blowup_threshold, collapse_fraction,
                    v_scheme, positivity_mode, flux_scheme, energy_guard, max_retries}
    initial_data:  {m, eta | F_target, profile, floor, v_mode}
    membership:    {K_user, A_cap}
    diagnostics:   {every_steps, every_time, snapshot_times}
    out_dir:       path
'''
import enum, hashlib, itertools, json
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

from ksblow import S0
from ksblow.config import config
from ksblow.exceptions import ConfigError, KsblowError
from ksblow.grid import RadialMesh
from ksblow.initdata import InitialDataSpec
from ksblow.logging import logger
from ksblow.models import NonlinearityModel, model_from_mapping
from ksblow.solver import Cadence, SolverConfig

SWEEP_AXES = ('q', 'gamma1', 'gamma2', 'm', 'eta')


@dataclass(frozen=True)
class MeshSpec:
    R: float = 1.0
    N: int = 256

    def problems(self, prefix: str = 'mesh') -> list[str]:
        problems = []
        if not self.R > 0:
            problems.append(f'{prefix}.R: must be positive, got {self.R}')
        if not self.N >= 2:
            problems.append(f'{prefix}.N: must be at least 2, got {self.N}')
        return problems

    def build(self) -> RadialMesh:
        return RadialMesh(self.R, self.N)


@dataclass(frozen=True)
class ModelSpec:
    name: str = 'semilinear'
    q: float | None = None
    gamma1: float | None = None
    gamma2: float | None = None
    s0: float = S0

    def build(self) -> NonlinearityModel:
        return model_from_mapping(asdict(self))


@dataclass(frozen=True)
class MembershipSpec:
    K_user: float = 1.0
    A_cap: float | None = None

    def problems(self, prefix: str = 'membership') -> list[str]:
        problems = []
        if not self.K_user > 0:
            problems.append(f'{prefix}.K_user: must be positive, got {self.K_user}')
        if self.A_cap is not None and not self.A_cap > 0:
            problems.append(f'{prefix}.A_cap: must be positive, got {self.A_cap}')
        return problems


@dataclass(frozen=True)
class DiagnosticsSpec:
    every_steps: int | None = 1
    every_time: float | None = None
    snapshot_times: tuple[float, ...] = field(default=())

    def problems(self, prefix: str = 'diagnostics') -> list[str]:
        problems = []
        if self.every_steps is not None and self.every_steps < 1:
            problems.append(f'{prefix}.every_steps: must be at least 1, got {self.every_steps}')
        if self.every_time is not None and not self.every_time > 0:
            problems.append(f'{prefix}.every_time: must be positive, got {self.every_time}')
        if self.every_steps is None and self.every_time is None:
            problems.append(f'{prefix}: one of every_steps and every_time must be set')
        return problems

    def cadence(self) -> Cadence:
        return Cadence(self.every_steps, self.every_time, self.snapshot_times)


# Field coercion

def _field_type(cls: type, name: str) -> tuple[Any, bool]:
    ''' The annotation of a dataclass field with None stripped, and whether None was allowed. '''
    kind = next(f.type for f in fields(cls) if f.name == name)
    args = getattr(kind, '__args__', ())
    if type(None) in args:
        return next(a for a in args if a is not type(None)), True
    return kind, False


def _coerce(cls: type, name: str, value: Any, path: str, problems: list[str]) -> Any:
    ''' Check a YAML scalar against the annotation of a dataclass field. '''
    if name == 'snapshot_times':
        if not isinstance(value, list) or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in value):
            problems.append(f'{path}: expected a list of times, got {value!r}')
            return ()
        return tuple(float(t) for t in value)

    kind, optional = _field_type(cls, name)
    if value is None:
        if not optional:
            problems.append(f'{path}: must not be empty')
        return None

    if isinstance(kind, type) and issubclass(kind, enum.Enum):
        try:
            return kind(value)
        except ValueError:
            problems.append(f'{path}: expected one of {", ".join(e.value for e in kind)}, got {value!r}')
            return None
    if kind is bool:
        if not isinstance(value, bool):
            problems.append(f'{path}: expected true or false, got {value!r}')
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            problems.append(f'{path}: expected an integer, got {value!r}')
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            problems.append(f'{path}: expected a number, got {value!r}')
            return None
        return float(value)
    if kind is str and not isinstance(value, str):
        problems.append(f'{path}: expected a string, got {value!r}')
    return value


def _section(cls: type, data: Any, path: str, problems: list[str]) -> Any:
    if data is None:
        data = {}
    if not isinstance(data, Mapping):
        problems.append(f'{path}: expected a mapping, got {type(data).__name__}')
        return None

    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            problems.append(f'{path}.{key}: unknown key')

    count = len(problems)
    values = {key: _coerce(cls, key, value, f'{path}.{key}', problems) for key, value in data.items() if key in known}
    if len(problems) > count:
        return None

    try:
        return cls(**values)
    except ConfigError as e:
        problems.extend(e.problems)
    except TypeError as e:
        problems.append(f'{path}: {e}')
    return None


def _plain(section: Any) -> dict[str, Any]:
    def convert(value: Any) -> Any:
        if isinstance(value, enum.Enum):
            return value.value
        if isinstance(value, tuple):
            return [convert(v) for v in value]
        return value
    return {f.name: convert(getattr(section, f.name)) for f in fields(section)}


@dataclass(frozen=True)
class SimulationConfig:
    mesh: MeshSpec = field(default_factory=MeshSpec)
    model: ModelSpec = field(default_factory=ModelSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)
    initial_data: InitialDataSpec = field(default_factory=lambda: InitialDataSpec(m=1.0, eta=0.1))
    membership: MembershipSpec = field(default_factory=MembershipSpec)
    diagnostics: DiagnosticsSpec = field(default_factory=DiagnosticsSpec)
    out_dir: str | None = None

    @classmethod
    def from_mapping(cls, data: Any) -> 'SimulationConfig':
        problems: list[str] = []
        if data is None:
            data = {}
        if not isinstance(data, Mapping):
            raise ConfigError([f'configuration: expected a mapping, got {type(data).__name__}'])

        sections = {
            'mesh': MeshSpec,
            'model': ModelSpec,
            'solver': SolverConfig,
            'initial_data': InitialDataSpec,
            'membership': MembershipSpec,
            'diagnostics': DiagnosticsSpec,
        }
        for key in data:
            if key not in sections and key != 'out_dir':
                problems.append(f'{key}: unknown section')

        values: dict[str, Any] = {}
        for name, section_cls in sections.items():
            if name in data:
                values[name] = _section(section_cls, data[name], name, problems)

        if (out_dir := data.get('out_dir')) is not None:
            if isinstance(out_dir, str):
                values['out_dir'] = out_dir
            else:
                problems.append(f'out_dir: expected a path, got {out_dir!r}')

        if not problems:
            config = cls(**values)
            problems.extend(config.problems())
            if not problems:
                return config
        raise ConfigError(problems)

    def problems(self) -> list[str]:
        problems = [
            *self.mesh.problems(),
            *self.initial_data.problems(self.mesh.R),
            *self.membership.problems(),
            *self.diagnostics.problems(),
        ]
        try:
            self.model.build()
        except KsblowError as e:
            problems.append(f'model: {e}')
        return problems

    def to_mapping(self) -> dict[str, Any]:
        return {
            'mesh': _plain(self.mesh),
            'model': _plain(self.model),
            'solver': _plain(self.solver),
            'initial_data': _plain(self.initial_data),
            'membership': _plain(self.membership),
            'diagnostics': _plain(self.diagnostics),
            'out_dir': self.out_dir,
        }

    def config_hash(self) -> str:
        ''' First 12 hex digits of SHA-256 over the canonical JSON of everything but out_dir. '''
        mapping = self.to_mapping()
        del mapping['out_dir']
        canonical = json.dumps(mapping, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:12]

    def with_axis(self, axis: str, value: float) -> 'SimulationConfig':
        match axis:
            case 'q' | 'gamma1' | 'gamma2':
                return replace(self, model=replace(self.model, **{axis: float(value)}))
            case 'm':
                return replace(self, initial_data=replace(self.initial_data, m=float(value)))
            case 'eta':
                return replace(self, initial_data=replace(self.initial_data, eta=float(value), F_target=None))
        raise ConfigError([f'axes.{axis}: unknown axis, expected one of {", ".join(SWEEP_AXES)}'])


def load_config(path: Path) -> SimulationConfig:
    logger.debug(f'Loading configuration from {path}')
    try:
        with open(path, 'r', encoding='utf-8') as file:
            data = yaml.safe_load(file)
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError([f'{path}: {e}'])
    return SimulationConfig.from_mapping(data)


def dump_config(config: SimulationConfig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as file:
        yaml.safe_dump(config.to_mapping(), file, sort_keys=False)


@dataclass(frozen=True)
class SweepSpec:
    axes: Mapping[str, tuple[float, ...]]
    template: SimulationConfig = field(default_factory=SimulationConfig)
    jobs: int = 1

    def cells(self) -> list[dict[str, float]]:
        ''' Cartesian product of the axes, in SWEEP_AXES order with the last axis varying fastest. '''
        names = [axis for axis in SWEEP_AXES if axis in self.axes]
        return [dict(zip(names, values)) for values in itertools.product(*(self.axes[n] for n in names))]

    def config_hash(self) -> str:
        ''' Hash of the axes and the template; the degree of parallelism does not change the rows. '''
        template = self.template.to_mapping()
        del template['out_dir']
        canonical = json.dumps({'axes': {k: list(v) for k, v in self.axes.items()}, 'template': template},
                               sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:12]

    def cell_config(self, cell: Mapping[str, float]) -> SimulationConfig:
        config = self.template
        for axis, value in cell.items():
            config = config.with_axis(axis, value)
        if problems := config.problems():
            raise ConfigError(problems)
        return config

    @classmethod
    def from_mapping(cls, data: Any) -> 'SweepSpec':
        problems: list[str] = []
        if not isinstance(data, Mapping):
            raise ConfigError([f'sweep: expected a mapping, got {type(data).__name__}'])

        for key in data:
            if key not in ('axes', 'template', 'jobs'):
                problems.append(f'{key}: unknown key')

        axes: dict[str, tuple[float, ...]] = {}
        raw_axes = data.get('axes')
        if not isinstance(raw_axes, Mapping) or not raw_axes:
            problems.append('axes: at least one axis is needed')
        else:
            for axis, values in raw_axes.items():
                if axis not in SWEEP_AXES:
                    problems.append(f'axes.{axis}: unknown axis, expected one of {", ".join(SWEEP_AXES)}')
                elif not isinstance(values, list) or not values:
                    problems.append(f'axes.{axis}: must be a non-empty list')
                elif not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
                    problems.append(f'axes.{axis}: values must be numbers')
                else:
                    axes[axis] = tuple(float(v) for v in values)

        jobs = data.get('jobs', config.jobs)
        if isinstance(jobs, bool) or not isinstance(jobs, int) or jobs < 1:
            problems.append(f'jobs: must be a positive integer, got {jobs!r}')

        try:
            template = SimulationConfig.from_mapping(data.get('template'))
        except ConfigError as e:
            problems.extend(f'template.{problem}' for problem in e.problems)

        if problems:
            raise ConfigError(problems)
        return cls(axes, template, jobs)


def load_sweep(path: Path) -> SweepSpec:
    logger.debug(f'Loading sweep from {path}')
    try:
        with open(path, 'r', encoding='utf-8') as file:
            data = yaml.safe_load(file)
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError([f'{path}: {e}'])
    return SweepSpec.from_mapping(data)

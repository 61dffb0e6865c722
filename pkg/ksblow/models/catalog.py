import re
from collections.abc import Callable, Mapping
from typing import Any, Final

from ksblow import S0
from ksblow.exceptions import ModelError
from ksblow.logging import logger
from ksblow.models.types import NonlinearityModel
from ksblow.types import ModelKind

_CALL = re.compile(r'^\s*(?P<name>[a-z_]+)\s*(?:\((?P<args>.*)\))?\s*$')


def semilinear(s0: float = S0) -> NonlinearityModel:
    return NonlinearityModel(ModelKind.SEMILINEAR, s0=s0)

def power_diffusion(q: float, s0: float = S0) -> NonlinearityModel:
    return NonlinearityModel(ModelKind.POWER_DIFFUSION, q=float(q), s0=s0)

def remark_family(gamma1: float, gamma2: float, s0: float = S0) -> NonlinearityModel:
    return NonlinearityModel(ModelKind.REMARK_FAMILY, gamma1=float(gamma1), gamma2=float(gamma2), s0=s0)


CATALOG: Final[Mapping[str, Callable[..., NonlinearityModel]]] = {
    ModelKind.SEMILINEAR.value: semilinear,
    ModelKind.POWER_DIFFUSION.value: power_diffusion,
    ModelKind.REMARK_FAMILY.value: remark_family,
}


def model_from_mapping(data: Mapping[str, Any]) -> NonlinearityModel:
    '''
    Build a catalog model from a config block such as {name: remark_family, gamma1: 3, gamma2: 0.5}.
    Keys that do not belong to the named family must be absent or null.
    '''
    name = data.get('name')
    if name not in CATALOG:
        raise ModelError(f'Unknown model \'{name}\', expected one of {", ".join(CATALOG)}')

    factory = CATALOG[name]
    arguments = {key: value for key, value in data.items() if key != 'name' and value is not None}
    try:
        model = factory(**arguments)
    except TypeError as e:
        raise ModelError(f'Invalid arguments for {name}: {e}')

    logger.debug(f'Resolved model {model.name}')
    return model


def parse_model(text: str) -> NonlinearityModel:
    ''' Parse catalog notation: semilinear, power_diffusion(q=-1), remark_family(gamma1=3, gamma2=0.5). '''
    match = _CALL.match(text)
    if not match:
        raise ModelError(f'Cannot parse model \'{text}\'')

    data: dict[str, Any] = {'name': match['name']}
    for item in filter(None, (part.strip() for part in (match['args'] or '').split(','))):
        key, sep, value = item.partition('=')
        if not sep:
            raise ModelError(f'Expected key=value in \'{item}\' of \'{text}\'')
        try:
            data[key.strip()] = float(value)
        except ValueError:
            raise ModelError(f'Exponent \'{key.strip()}\' in \'{text}\' is not a number')

    return model_from_mapping(data)

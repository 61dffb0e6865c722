import logging

import numpy as np
import pytest

from ksblow.config import config
from ksblow.grid import RadialMesh
from ksblow.models import power_diffusion, remark_family, semilinear
from ksblow.solver import RadialState, SolverConfig


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    ''' Fresh process settings per test; the CLI callback mutates both config and the logger. '''
    saved = config.strict, config.log_level, config.out_dir, config.jobs
    config.strict = True
    config.out_dir = str(tmp_path / 'runs')

    logger = logging.getLogger('ksblow')
    handlers, propagate, level = list(logger.handlers), logger.propagate, logger.level
    logger.propagate = True
    logger.setLevel(logging.NOTSET)

    yield

    config.strict, config.log_level, config.out_dir, config.jobs = saved
    logger.handlers[:] = handlers
    logger.propagate = propagate
    logger.setLevel(level)


@pytest.fixture
def mesh() -> RadialMesh:
    return RadialMesh(1.0, 32)


@pytest.fixture
def fine_mesh() -> RadialMesh:
    return RadialMesh(1.0, 128)


@pytest.fixture(params=['semilinear', 'power_diffusion', 'remark_family'])
def catalog_model(request):
    return {
        'semilinear': semilinear(),
        'power_diffusion': power_diffusion(q=-1.0),
        'remark_family': remark_family(gamma1=3.0, gamma2=0.5),
    }[request.param]


@pytest.fixture
def bump(mesh: RadialMesh) -> RadialState:
    ''' Smooth positive state with v close to its stationary profile. '''
    r = mesh.centers
    u = 1.0 / np.pi * (1.0 + 0.5 * np.cos(np.pi * r))
    v = 1.0 / np.pi * (1.0 + 0.3 * np.cos(np.pi * r))
    return RadialState.from_arrays(mesh, u, v)

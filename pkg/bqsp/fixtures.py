import pytest
import logging
import numpy as np
from pathlib import Path

from bqsp.hilbert import FockBasisConfig
from bqsp.session_context import RunContext, env_fock_dim


_logger = logging.getLogger(__name__)


def pytest_addoption(parser: pytest.Parser):
    parser.addoption(
        '--fock-dim', type=int, help='Fock truncation used by the fock_cfg fixture', default=None
    )
    parser.addoption(
        '--bqsp-seed', type=int, help='Seed of the rng fixture', default=0
    )


@pytest.fixture(scope='session')
def fock_dim(pytestconfig: pytest.Config) -> int | None:
    # command line first, then BQSP_FOCK_DIM.
    dim = pytestconfig.getoption('fock_dim')
    yield dim if dim is not None else env_fock_dim()


@pytest.fixture(scope='session')
def rng_seed(pytestconfig: pytest.Config) -> int:
    yield pytestconfig.getoption('bqsp_seed')


@pytest.fixture(scope='session')
def fock_cfg(fock_dim: int | None) -> FockBasisConfig:
    yield FockBasisConfig(fock_dim if fock_dim is not None else 60, 1e-6, strict=False)


@pytest.fixture(scope='function')
def rng(rng_seed: int) -> np.random.Generator:
    yield np.random.default_rng(rng_seed)


@pytest.fixture(scope='function')
def run_ctxt(rng_seed: int, fock_dim: int | None, log_dir: Path, tmp_path: Path) -> RunContext:
    # the log_dir fixture MUST either be provided by another package or by a conftest.py file.
    _logger.debug(f'current test log directory: {log_dir}')
    yield RunContext(seed=rng_seed, jobs=1, output_dir=tmp_path / 'results', fock_dim=fock_dim)

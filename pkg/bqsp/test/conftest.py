import pytest
from pathlib import Path

# bqsp.fixtures needs this fixture to exist in order to work properly
@pytest.fixture(scope='session')
def log_dir():
    return Path.cwd()

import numpy as np
import pytest


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='run long Monte Carlo acceptance tests')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long Monte Carlo acceptance run')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_disk_points(rng, n, radius=0.95):
    return radius * np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))

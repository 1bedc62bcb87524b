import pytest
from django.core.cache import cache


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run slow Monte-Carlo tests')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def clear_table_cache():
    cache.clear()
    yield
    cache.clear()


@pytest.fixture
def coarse_quadrature(settings):
    """Gauss-Jacobi capped at 8 nodes with an unreachable tolerance."""
    settings.QUADRATURE_TOL = 1e-15
    settings.QUADRATURE_MIN_NODES = 4
    settings.QUADRATURE_MAX_NODES = 8
    return settings

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_addoption(parser):
    parser.addoption(
        "--run-full",
        action="store_true",
        default=False,
        help="run the full-protocol acceptance studies (hours of runtime)",
    )


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "full: full-protocol study, skipped unless --run-full is given"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-full"):
        return
    skip = pytest.mark.skip(reason="full-protocol study; enable with --run-full")
    for item in items:
        if "full" in item.keywords:
            item.add_marker(skip)

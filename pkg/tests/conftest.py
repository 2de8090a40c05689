import contextlib

import numpy as np
import pytest

from oracles import SO2_CONFIG
from orbitspace import OrbitSpace, load_config

ACCEPTANCE: dict[int, tuple[str, str]] = {}


@pytest.fixture(scope="session")
def cfg():
    return load_config()


@pytest.fixture(scope="session")
def space():
    return OrbitSpace().fit()


@pytest.fixture(scope="session")
def mib(cfg):
    return cfg.mib


@pytest.fixture(scope="session")
def gp(cfg):
    return cfg.group


@pytest.fixture(scope="session")
def closure(space):
    return space.closure_


@pytest.fixture(scope="session")
def ph(space):
    return space.phat_


@pytest.fixture(scope="session")
def catalog(space):
    return space.catalog_


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def criterion():
    """Context manager recording a PASS/FAIL line for one acceptance criterion."""

    @contextlib.contextmanager
    def record(number: int, title: str):
        ACCEPTANCE[number] = ("FAIL", title)
        yield
        ACCEPTANCE[number] = ("PASS", title)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        status, title = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {title}")


@pytest.fixture(scope="session")
def so2_space():
    return OrbitSpace(SO2_CONFIG).fit()

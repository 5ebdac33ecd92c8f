import pytest

from epssim.fixtures import load_fixture_dir
from epssim.system import DEFAULT_FIXTURES, System


@pytest.fixture(scope="session")
def fixture_set():
    return load_fixture_dir(DEFAULT_FIXTURES)


@pytest.fixture
def system(fixture_set):
    s = System()
    s.load(fixture_set)
    return s

import pytest

from helpers import analyze, load


@pytest.fixture(scope="session")
def cg():
    return analyze(load("cg.knl"))

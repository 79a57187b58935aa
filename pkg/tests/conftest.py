import numpy as np
import pytest

from graphbli import _kernels


@pytest.fixture(params=sorted(_kernels.BACKENDS))
def kernel_backend(request):
    """Run the requesting test once per available kernel backend."""
    prev = _kernels.set_backend(request.param)
    yield request.param
    _kernels.set_backend(prev)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)

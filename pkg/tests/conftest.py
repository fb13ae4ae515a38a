import numpy as np
import pytest

from scglue import _kernels


@pytest.fixture(params=["numba", "numpy"])
def kernel_backend(request):
    """Run the test once per kernel backend and restore the previous one."""
    prev = _kernels.backend()
    _kernels.set_backend(request.param)
    yield request.param
    _kernels.set_backend(prev)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

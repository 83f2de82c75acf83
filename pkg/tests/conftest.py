import numpy as np
import pytest

from sbprecode import _kernels_py

try:
    from sbprecode import _kernels as _kernels_c
except ImportError:  # pragma: no cover - depends on the build
    _kernels_c = None

BACKENDS = [pytest.param(_kernels_py, id="python")]
if _kernels_c is not None:
    BACKENDS.append(pytest.param(_kernels_c, id="cython"))

ACCEPTANCE_LINES = []


@pytest.fixture(params=BACKENDS)
def kernels(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_unit(rng, n, size=None):
    shape = (n,) if size is None else (size, n)
    v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_psd(rng, n, size, n_rx=8):
    h = rng.standard_normal((size, n_rx, n)) + 1j * rng.standard_normal((size, n_rx, n))
    return np.conj(np.swapaxes(h, 1, 2)) @ h


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

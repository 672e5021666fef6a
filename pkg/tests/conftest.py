import pytest

from nanores.netlist import CoupledResonatorParams


@pytest.fixture
def device():
    """Nanowire device as shipped in the default config."""
    return CoupledResonatorParams.from_fractions(x_b=0.185, l_b=0.30)


@pytest.fixture
def weak_feed():
    """Feedline coupling reduced to 10 aF so bias-line leakage dominates kappa."""
    return CoupledResonatorParams.from_fractions(x_b=0.185, l_b=0.25, C_k=10e-18)


@pytest.fixture(params=["numba", "numpy"])
def kernel_backend(request):
    """Run a test once per kernel backend, restoring the original afterwards."""
    from nanores import _kernels as K

    if request.param == "numba" and not K.HAVE_NUMBA:
        pytest.skip("numba unavailable")
    prev = K.USE_NUMBA
    K.set_backend(request.param == "numba")
    yield request.param
    K.set_backend(prev)


def pytest_terminal_summary(terminalreporter):
    try:
        from tests.test_acceptance import RESULTS
    except ImportError:
        import sys

        mod = sys.modules.get("test_acceptance")
        RESULTS = getattr(mod, "RESULTS", [])
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

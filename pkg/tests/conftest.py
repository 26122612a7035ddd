import numpy as np
import pytest

from imcflab import FlowConfig, MetricSpec, SphereGrid, build_round_sphere, run_imcf

_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []
    config.addinivalue_line("markers", "property: invariant/property suites re-run by acceptance criterion 10")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_RESULTS, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(line[1])


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion."""

    def record(number, passed, detail):
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        request.config.stash[_RESULTS].append((number, line))
        return passed

    return record


@pytest.fixture(scope="session")
def grid16():
    return SphereGrid(16, 32)


@pytest.fixture(scope="session")
def grid32():
    return SphereGrid(32, 64)


@pytest.fixture(scope="session")
def schwarzschild_trace(grid32):
    """Centered isotropic sphere rho = 5 in Schwarzschild m = 1, t in [0, 2]."""
    cfg = FlowConfig(
        MetricSpec("schwarzschild", mass=1.0),
        build_round_sphere((0, 0, 0), 5.0, grid32),
        t_end=2.0,
        record_every=0.1,
        c_values=(2.0,),
    )
    return run_imcf(cfg)


@pytest.fixture(scope="session")
def euclidean_ball_trace(grid32):
    """Round balls from radius e^-1 past radius 2 (the c = 2 maximizer is radius 1, at t = 2)."""
    cfg = FlowConfig(
        MetricSpec("euclidean"),
        build_round_sphere((0, 0, 0), np.exp(-1.0), grid32),
        t_end=3.4,
        record_every=0.1,
        c_values=(2.0,),
    )
    return run_imcf(cfg)


@pytest.fixture(scope="session")
def hyperbolic_ball_trace(grid16):
    """Geodesic balls in H^3 passing through r* = artanh(1/2) at t = 1 (c = 4 maximizer)."""
    r_star = np.arctanh(0.5)
    r0 = np.arcsinh(np.sinh(r_star) * np.exp(-0.5))
    cfg = FlowConfig(
        MetricSpec("hyperbolic-polar"),
        build_round_sphere((0, 0, 0), r0, grid16),
        t_end=2.0,
        record_every=0.1,
        dt_max=1e-3,
        c_values=(4.0,),
    )
    return run_imcf(cfg)

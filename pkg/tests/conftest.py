import sys
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sparse2d.geometry import DenseGridSpec
from sparse2d.synthesis import MaskSpec, SynthesisConfig, run_synthesis

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# lambda / d - r_ml for the 16 x 16 desk grid; see the README for why the
# literal 1.6561 edge cannot be used at this aperture size
DESK_OUTER = 0.51333333333333333 / 0.3 - 0.11


@pytest.fixture(scope="session")
def grid32():
    return DenseGridSpec.reference_32x32()


@pytest.fixture(scope="session")
def desk_grid():
    return DenseGridSpec(16, 16, 0.3, 0.3, 3.0e6, 1540.0)


@pytest.fixture(scope="session")
def desk_config(desk_grid):
    mask = MaskSpec.from_db(0.11, -15.0, DESK_OUTER)
    return SynthesisConfig(desk_grid, mask, epsilon=1e-3, w_thre=0.05, du=0.02, dv=0.02,
                           max_iterations=60)


@pytest.fixture(scope="session")
def desk_result(desk_config):
    return run_synthesis(desk_config)


@pytest.fixture
def rng():
    return np.random.default_rng(20240615)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)

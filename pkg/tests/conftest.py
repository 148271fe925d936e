import numpy as np
import pytest

ACCEPTANCE_IDS = [f"AC{i}" for i in range(1, 12)]


def pytest_configure(config):
    config.acceptance_lines = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def record(request):
    """Store one summary line per acceptance criterion."""
    def _record(key, passed, detail):
        request.config.acceptance_lines[key] = (bool(passed), detail)
    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.acceptance_lines
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in ACCEPTANCE_IDS:
        if key in lines:
            ok, detail = lines[key]
            terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'}  {detail}")
        else:
            terminalreporter.write_line(f"{key} FAIL  (not run or errored before recording)")


def cgauss(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)

import pytest

from glsurface import gl2d
from glsurface.profile1d import optimize_alpha


@pytest.fixture(scope="session")
def flat_opt():
    return optimize_alpha(0.0, 0.0, 1.5, n_points=1024)


@pytest.fixture(scope="session")
def curved_opt():
    return optimize_alpha(1.0, 0.05, 1.5, n_points=1024)


@pytest.fixture(scope="session")
def disc_setup():
    grid = gl2d.make_disc_grid(1.0, 0.12)
    opt = gl2d.profile_for_grid(grid, 1.5)
    fld = gl2d.minimize_gl(0.12, 1.5, 1.0, grid, opt=opt)
    return grid, opt, fld


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one line per acceptance criterion; printed in the terminal summary."""
    log = getattr(request.config, "_acceptance_lines", None)
    if log is None:
        log = request.config._acceptance_lines = []
    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

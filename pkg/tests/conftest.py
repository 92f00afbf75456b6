import numpy as np
import pytest

from hsflow.circle import CircleGrid, Mat3Field


def cosine_alpha(n, a=0.5):
    grid = CircleGrid(n)
    alpha = np.zeros((n, 3, 3))
    alpha[:, 0, 0] = 1.0 + a * np.cos(grid.x)
    alpha[:, 1, 1] = alpha[:, 2, 2] = 1.0
    return Mat3Field(grid, alpha)


def constant_field(n, m):
    return Mat3Field(CircleGrid(n), np.broadcast_to(np.asarray(m, dtype=float), (n, 3, 3)).copy())


def random_spd(rng, size=None, lo=0.2):
    shape = (3, 3) if size is None else (size, 3, 3)
    m = rng.standard_normal(shape)
    return m @ np.swapaxes(m, -1, -2) + lo * np.eye(3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line; the lines are repeated in the terminal summary."""
    lines = request.config.stash[_VERDICTS]

    def record(number, title, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}  {title}: {detail}"
        print(line)
        lines.append((number, line))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from guplab.grid import MomentumGrid, normalize

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


def gaussian_mixture(grid, centers, widths, shifts, weights):
    """Normalised sum of modulated Gaussians; smooth and rapidly decaying."""
    p = grid.points
    amps = np.zeros(p.size, dtype=complex)
    for c, w, x, (re, im) in zip(centers, widths, shifts, weights):
        amps += (re + 1j * im) * np.exp(-0.5 * ((p - c) / w) ** 2 - 1j * p * x)
    return normalize(grid.wavefunction(amps))


@st.composite
def smooth_states(draw, grid=None, terms=3, reach=4.0):
    """Random Schwartz-class states on ``grid`` (the default grid if None)."""
    grid = grid or MomentumGrid.default()
    k = draw(st.integers(1, terms))
    real = st.floats(-1, 1, allow_nan=False)
    centers = [draw(st.floats(-reach, reach)) for _ in range(k)]
    widths = [draw(st.floats(0.6, 2.5)) for _ in range(k)]
    shifts = [draw(st.floats(-3, 3)) for _ in range(k)]
    weights = [(draw(real), draw(real)) for _ in range(k)]
    if all(abs(a) + abs(b) < 1e-3 for a, b in weights):
        weights[0] = (1.0, 0.0)
    return gaussian_mixture(grid, centers, widths, shifts, weights)


@pytest.fixture(scope="session")
def default_grid():
    return MomentumGrid.default()


# one line per acceptance criterion, echoed in the terminal summary so the
# verdicts are visible even when pytest captures output
_CRITERIA_LINES = []


@pytest.fixture
def record_criterion():
    return _CRITERIA_LINES.append


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

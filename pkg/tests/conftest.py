import numpy as np
import pytest

from infratrack.core import FULL_MASK, Object, StateMask, unclassified


def make_object(px=0.0, py=0.0, vx=0.0, vy=0.0, theta=0.0, omega=0.0, *, cov=None, mask=FULL_MASK, oid=1, t=0.0, dims=(1.8, 4.5, 1.5)):
    return Object(
        id=oid,
        state=np.array([px, py, vx, vy, theta, omega], dtype=float),
        state_cov=np.eye(6) if cov is None else np.asarray(cov, dtype=float),
        dims=np.asarray(dims, dtype=float),
        dims_cov=np.eye(3) * 0.25,
        classes=unclassified(),
        mask=mask,
        t=t,
        last_associated=t,
    )


@pytest.fixture
def obj_factory():
    return make_object


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spd(rng, n, scale=1.0):
    A = rng.normal(size=(n, n))
    return scale * (A @ A.T + n * 0.1 * np.eye(n))


__all__ = ["make_object", "random_spd", "StateMask", "ACCEPTANCE_LINES"]


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

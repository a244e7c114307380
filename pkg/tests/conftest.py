import numpy as np
import pytest

from decorr.data import standardize


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_dataset(rng, n, p, rho=0.0):
    """Standardized dataset with equicorrelated columns and a sparse response."""
    cov = np.full((p, p), rho) + (1 - rho) * np.eye(p)
    X = rng.standard_normal((n, p)) @ np.linalg.cholesky(cov).T
    beta = np.zeros(p)
    beta[: min(3, p)] = (3.0, -2.0, 1.5)[: min(3, p)]
    y = X @ beta + rng.standard_normal(n)
    return standardize(X, y)


def orthonormal_design(rng, n, p):
    Q, _ = np.linalg.qr(rng.standard_normal((n, p)))
    return Q


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_line():
    """Record a one-line verdict that is echoed in the terminal summary."""

    def record(number, passed, detail):
        status = passed if isinstance(passed, str) else ("PASS" if passed else "FAIL")
        line = f"criterion {number}: {status}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def mahler_measure(coeffs):
    """Jensen's formula: |leading coefficient| times the product of max(1, |root|).

    ``coeffs`` maps exponents to coefficients of a Laurent polynomial; the
    shift by the lowest exponent does not change the measure.
    """
    lo, hi = min(coeffs), max(coeffs)
    poly = [coeffs.get(k, 0.0) for k in range(hi, lo - 1, -1)]
    roots = np.roots(poly)
    return abs(poly[0]) * float(np.prod(np.maximum(1.0, np.abs(roots))))


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = {}


def record_criterion(number, ok, detail):
    ACCEPTANCE_LINES[number] = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])

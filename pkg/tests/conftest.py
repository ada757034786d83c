import math

import pytest

from irsfso.beam_optics import BeamParams
from irsfso.irs_phase import IrsGeometry

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Collects one line per acceptance check; printed in the terminal summary."""
    def record(criterion, passed, detail):
        _ACCEPTANCE.append((criterion, passed, detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    grouped = {}
    for criterion, passed, detail in _ACCEPTANCE:
        ok, details = grouped.get(criterion, (True, []))
        grouped[criterion] = (ok and passed, details + [("" if passed else "[fail] ") + detail])
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(grouped):
        ok, details = grouped[criterion]
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  " + "; ".join(details))


@pytest.fixture(scope="session")
def fig2_beam():
    return BeamParams(w0=1e-3, wavelength=1550e-9)


@pytest.fixture(scope="session")
def fig2_geometry():
    return IrsGeometry(theta_i=math.pi / 3, theta_r=math.pi / 6, d_t2r=500.0, d_r2l=500.0)

import numpy as np
import pytest

from mpfc.grid import BC, CellField, GridSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_field(spec, rng, scale=1.0):
    return CellField.from_interior(spec, scale * rng.standard_normal((spec.m, spec.n)))


def grid(m, n, bc_x="periodic", bc_y=None, length=None):
    h = 1.0 if length is None else length / m
    return GridSpec(m, n, h, BC(bc_x), BC(bc_y or bc_x))


BCS = [("periodic", "periodic"), ("neumann", "neumann"), ("periodic", "neumann")]


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line; the lines are repeated in the terminal summary."""
    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        _VERDICTS.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)

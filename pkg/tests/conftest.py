import numpy as np
import pytest

from cmvloc.field import TrigPolynomial, VerblunskyField, certificate_sum
from cmvloc.torus import Frequency

ACCEPTANCE_LINES = []

LOCALIZED_COEFFS = {(-3, 0): 0.23 - 0.1j, (-1, 3): 0.08 - 0.45j, (2, -1): 0.27 - 0.03j}


def localized_field():
    return VerblunskyField.from_coeffs(LOCALIZED_COEFFS, h=5e-4)


def omega2():
    return Frequency((np.sqrt(2) - 1, np.sqrt(3) - 1), 0.25, 3.0)


def golden():
    return Frequency(((np.sqrt(5) - 1) / 2,), 0.35, 2.0)


def random_field(rng, d=None, max_terms=4, budget=0.95):
    """Random trigonometric field with certificate sum <= budget."""
    d = d or int(rng.integers(1, 3))
    h = float(rng.uniform(1e-3, 0.05))
    cs = {}
    for _ in range(int(rng.integers(1, max_terms + 1))):
        k = tuple(int(v) for v in rng.integers(-3, 4, d))
        cs[k] = cs.get(k, 0) + complex(rng.normal(), rng.normal())
    scale = budget * rng.uniform(0.2, 1.0) / max(certificate_sum(TrigPolynomial(cs), h), 1e-300)
    return VerblunskyField.from_coeffs({k: v * scale for k, v in cs.items()}, h=h, d=d)


def random_omega(rng, d):
    return Frequency(tuple(float(v) for v in rng.uniform(0.05, 0.95, d)), 1e-6, d + 1.0)


@pytest.fixture
def record():
    def _record(number, name, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {name}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from pwabel.flow import AbelEq
from pwabel.trigpoly import TrigPoly

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])
settings.load_profile("default")

coef = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)
trigpolys = st.builds(TrigPoly, coef, coef, coef)


@st.composite
def sign_changing_eqs(draw, lo=-3.0, hi=3.0):
    """Equations whose b has two simple zeros (|b0| clearly below amplitude)."""
    c = st.floats(lo, hi, allow_nan=False)
    a = TrigPoly(draw(c), draw(c), draw(c))
    b1, b2 = draw(c), draw(c)
    amp = float(np.hypot(b1, b2))
    if amp < 0.2:
        b1, b2 = b1 + 0.5, b2 + 0.5
        amp = float(np.hypot(b1, b2))
    b0 = draw(st.floats(-0.8, 0.8)) * amp
    return AbelEq(a, TrigPoly(b0, b1, b2))


@st.composite
def normalized_eqs(draw, a0_min=0.05):
    """Normalized equations (b = sin t + b0 (1 - cos t)) with |a0| >= a0_min."""
    a0 = draw(st.floats(a0_min, 2.0)) * draw(st.sampled_from([-1.0, 1.0]))
    a1, a2 = draw(coef), draw(coef)
    b0 = draw(st.floats(-2.0, 2.0))
    return AbelEq(TrigPoly(a0, a1, a2), TrigPoly(b0, -b0, 1.0))


def random_eq(rng, lo=-3.0, hi=3.0):
    return AbelEq.from_coeffs(rng.uniform(lo, hi, 3), rng.uniform(lo, hi, 3))


def random_normalized(rng, a0_min=0.05):
    while True:
        a = rng.uniform(-3, 3, 3)
        if abs(a[0]) >= a0_min:
            b0 = rng.uniform(-2, 2)
            return AbelEq(TrigPoly(*a), TrigPoly(b0, -b0, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance(capsys):
    def report(number, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

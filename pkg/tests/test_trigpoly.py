import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sint

from pwabel.errors import IdenticallyZero, NoSignChange
from pwabel.trigpoly import (TWO_PI, TrigPoly, changes_sign, eval_tp, integrate, normalize,
                             second_zero, zeros_in_period)

from conftest import coef, sign_changing_eqs, trigpolys


@pytest.mark.parametrize("p, t, want", [
    ((0, 0, 1), math.pi / 2, 1.0),
    ((1, 1, 0), math.pi, 0.0),
    ((0.7, -0.7, 1), 0.0, 0.0),
])
def test_eval_examples(p, t, want):
    assert eval_tp(TrigPoly(*p), t) == pytest.approx(want, abs=1e-15)


def test_eval_vectorized():
    p = TrigPoly(1.0, 2.0, 3.0)
    ts = np.linspace(0, 7, 11)
    np.testing.assert_allclose(p(ts), [eval_tp(p, t) for t in ts], rtol=0, atol=1e-15)


@pytest.mark.parametrize("p, t0, t1, want", [
    ((0.3, 1.7, -2.2), 0.0, TWO_PI, TWO_PI * 0.3),
    ((0, 0, 1), 0.0, math.pi, 2.0),
    ((1, 0, 0), 0.4, 2.9, 2.5),
])
def test_integrate_examples(p, t0, t1, want):
    assert integrate(TrigPoly(*p), t0, t1) == pytest.approx(want, rel=1e-14, abs=1e-14)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@given(trigpolys, st.floats(-10, 10), st.floats(-10, 10))
def test_integrate_matches_quadrature(p, t0, t1):
    ref = sint.quad(lambda t: eval_tp(p, t), t0, t1, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    scale = (abs(p.c0) + p.amplitude) * abs(t1 - t0) + 1e-300
    assert abs(integrate(p, t0, t1) - ref) <= 1e-12 * max(scale, abs(ref))


def test_integrate_short_interval():
    assert integrate(TrigPoly(0, 0, 1), 0.0, 1e-8) == pytest.approx(5e-17, rel=1e-12)
    assert integrate(TrigPoly(0, 1, 0), 1.0, 1.0 + 1e-9) == pytest.approx(1e-9 * math.cos(1.0 + 5e-10), rel=1e-12)


@given(trigpolys, st.floats(-50, 50))
def test_periodic_and_amplitude_bound(p, t):
    assert abs(eval_tp(p, t) - eval_tp(p, t + TWO_PI)) <= 1e-12 * (1 + abs(p.c0) + p.amplitude)
    assert abs(eval_tp(p, t) - p.c0) <= p.amplitude * (1 + 1e-12) + 1e-15


def test_zeros_sin():
    zs = zeros_in_period(TrigPoly(0, 0, 1))
    assert [round(z.t, 12) for z in zs] == [0.0, round(math.pi, 12)]
    assert not any(z.double for z in zs)


def test_zeros_double():
    zs = zeros_in_period(TrigPoly(1, -1, 0))
    assert len(zs) == 1 and zs[0].double and abs(zs[0].t) < 1e-12
    assert not changes_sign(TrigPoly(1, -1, 0))


def test_zeros_normalized_b0_one():
    zs = zeros_in_period(TrigPoly(1, -1, 1))
    assert [z.t for z in zs] == pytest.approx([0.0, 1.5 * math.pi], abs=1e-12)
    assert second_zero(1.0) == pytest.approx(1.5 * math.pi, abs=1e-14)


def test_zeros_identically_zero():
    with pytest.raises(IdenticallyZero):
        zeros_in_period(TrigPoly(0, 0, 0))


def test_zeros_near_pi():
    # tan-half-angle substitution is singular at pi; the fallback must find it
    p = TrigPoly(0.0, 0.0, 1.0).shift(0.0)
    zs = zeros_in_period(TrigPoly(1e-13, 0.0, 1.0))
    assert any(abs(z.t - math.pi) < 1e-10 for z in zs)
    assert len(zeros_in_period(p)) == 2


@given(trigpolys)
def test_zeros_are_zeros(p):
    if p.amplitude < 1e-6:
        return  # double-zero detection uses an absolute slope threshold
    for z in zeros_in_period(p):
        assert 0.0 <= z.t < TWO_PI
        assert abs(eval_tp(p, z.t)) <= 1e-9 * (abs(p.c0) + p.amplitude)


def test_normalize_identity():
    nf = normalize(TrigPoly(1, 2, 3), TrigPoly(0, 0, 1))
    assert nf.time_shift == pytest.approx(0.0, abs=1e-14)
    assert nf.x_scale == pytest.approx(1.0) and nf.b0 == pytest.approx(0.0, abs=1e-15)


def test_normalize_scale():
    nf = normalize(TrigPoly(1, 2, 3), TrigPoly(0, 0, 2))
    assert nf.x_scale == pytest.approx(2.0) and nf.b0 == pytest.approx(0.0, abs=1e-15)


def test_normalize_cos():
    nf = normalize(TrigPoly(1, 0, 0), TrigPoly(0, 1, 0))
    assert nf.time_shift == pytest.approx(1.5 * math.pi, abs=1e-12)
    ts = np.linspace(0, TWO_PI, 50)
    np.testing.assert_allclose(eval_tp(nf.b, ts), np.sin(ts), atol=1e-12)


def test_normalize_no_sign_change():
    with pytest.raises(NoSignChange):
        normalize(TrigPoly(1, 0, 0), TrigPoly(2, 1, 0))


@given(sign_changing_eqs())
def test_normalized_sign_pattern_and_inverse(eq):
    nf = normalize(eq.a, eq.b)
    assert eval_tp(nf.b, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert nf.b.derivative()(0.0) == pytest.approx(1.0, abs=1e-12)
    inside = np.linspace(0, nf.tbar, 102)[1:-1]
    outside = np.linspace(nf.tbar, TWO_PI, 102)[1:-1]
    assert np.all(eval_tp(nf.b, inside) > 0) and np.all(eval_tp(nf.b, outside) < 0)
    ts = np.linspace(0, TWO_PI, 64)
    scale = abs(eq.b.c0) + eq.b.amplitude
    np.testing.assert_allclose(nf.original_b(ts), eval_tp(eq.b, ts),
                               atol=1e-12 * scale)
    np.testing.assert_allclose(eval_tp(nf.a, nf.normalized_time(ts)), eval_tp(eq.a, ts),
                               atol=1e-12 * (1 + abs(eq.a.c0) + eq.a.amplitude))

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from pwabel.curves import (abar, common_zero_discriminant, common_zero_gap, count_components_m,
                           h_eval, h_m_intersections, h_zero_branch, h_zero_branch_vec,
                           h_zero_point, k_eval, m_eval, m_expansion, m_zero_polylines, mbar_eval,
                           n_eval, n_poly, rational_model, region_of, solve_tangency,
                           tangency_eval, tangency_newton_oracle)
from pwabel.errors import DivisionNearZero
from pwabel.flow import AbelEq, Tolerances
from pwabel.poincare import delta, half_map_plus
from pwabel.trigpoly import TWO_PI, TrigPoly, eval_tp, second_zero

from conftest import normalized_eqs, random_eq, random_normalized

FINE = Tolerances(1e-12, 1e-14, 1e-13)

# m = 0 has four components in the open square for this equation
FOUR_COMPONENTS = AbelEq(TrigPoly(-1.64, -1.1, 1.78), TrigPoly(0.71, -0.71, 1.0))


def norm_eq(a, b0):
    return AbelEq(TrigPoly(*a), TrigPoly(b0, -b0, 1.0))


def generic_draw(rng, a0_min=0.05):
    while True:
        eq = random_normalized(rng, a0_min)
        r1, r2 = eq.a.c1 / eq.a.c0, eq.a.c2 / eq.a.c0
        if abs(common_zero_discriminant(r1, r2, eq.b.c0)) > 1e-6:
            return eq


# --------------------------------------------------------------------------
# h


def test_h_constant_a():
    eq = norm_eq((1, 0, 0), 0.3)
    t = np.linspace(0, 3, 7)
    np.testing.assert_allclose(h_eval(eq, t, t + math.pi), 0, atol=1e-13)
    np.testing.assert_allclose(h_eval(eq, t, t + 1), 2 - TWO_PI, atol=1e-13)


@given(normalized_eqs(), st.floats(0, TWO_PI))
def test_h_on_diagonal(eq, t):
    assert h_eval(eq, t, t) == pytest.approx(-TWO_PI * eq.a.c0, abs=1e-12)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_h_matches_quadrature(rng):
    for _ in range(1000):
        eq = random_eq(rng)
        t, x = rng.uniform(0, TWO_PI, 2)
        a = lambda s: eval_tp(eq.a, s)
        q = (integrate.quad(a, t, x, epsabs=1e-13, epsrel=1e-13)[0]
             + integrate.quad(a, t + TWO_PI, x, epsabs=1e-13, epsrel=1e-13)[0])
        assert h_eval(eq, t, x) == pytest.approx(q, abs=1e-10)


# --------------------------------------------------------------------------
# m, n, k


@given(normalized_eqs(), st.floats(0, TWO_PI))
def test_m_on_diagonal(eq, t):
    want = eval_tp(eq.a, t) * eval_tp(eq.b, t) * (1 - eq.c)
    assert m_eval(eq, t, t) == pytest.approx(want, abs=1e-12 * (1 + abs(want)))


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-2, 2), st.floats(0, TWO_PI), st.floats(0, TWO_PI))
def test_m_antisymmetric_without_damping(a1, a2, b0, t, x):
    eq = norm_eq((0.0, a1, a2), b0)
    assert m_eval(eq, t, x) == pytest.approx(-m_eval(eq, x, t), abs=1e-12)


def test_m_expansion_matches_definition(rng):
    for _ in range(200):
        eq = random_normalized(rng)
        t, x = rng.uniform(0, TWO_PI, 2)
        direct = 2 * m_eval(eq, t, x) / eq.a.c0
        scale = 1 + abs(direct) + eq.c
        assert abs(m_expansion(eq, t, x) - direct) < 1e-9 * scale


def test_n_examples():
    eq = norm_eq((1, 0, 0), 0.0)
    ts = np.linspace(0.1, 6, 9)
    np.testing.assert_allclose(n_eval(eq, ts), np.cos(ts), atol=1e-15)
    assert n_eval(norm_eq((1, 1, 0), 1.0), 0.0) == pytest.approx(2.0)


def test_n_is_derivative_numerator(rng):
    """k' = -n / b^2, checked by central differences."""
    # b0 = 1, r1 = 1, r2 = 0 at t = 0 is the special value n = 2, but b(0) = 0
    # there, so the difference check is made nearby
    eq = norm_eq((1, 1, 0), 1.0)
    for t in (0.3, 1.0, 2.0):
        h = 1e-5
        fd = (k_eval(eq, t + h) - k_eval(eq, t - h)) / (2 * h)
        assert fd == pytest.approx(-n_eval(eq, t) / eval_tp(eq.b, t) ** 2, rel=1e-6)
    checked = 0
    while checked < 100:
        eq = random_normalized(rng)
        t = 1.0
        bt = eval_tp(eq.b, t)
        if abs(bt) < 0.05:
            continue
        h = 1e-5
        fd = (k_eval(eq, t + h) - k_eval(eq, t - h)) / (2 * h)
        want = -n_eval(eq, t) / bt ** 2
        assert fd == pytest.approx(want, rel=1e-6, abs=1e-6)
        checked += 1


def test_k_division_near_zero():
    eq = norm_eq((1, 0, 0), 0.5)
    with pytest.raises(DivisionNearZero):
        k_eval(eq, 0.0)


# --------------------------------------------------------------------------
# the h = 0 branch


def test_h_zero_branch_examples():
    eq = norm_eq((1, 0, 0), 0.2)
    for z1 in (0.5, 2.0, 5.0):
        assert h_zero_branch(eq, z1) == pytest.approx(math.pi, abs=1e-12)
    z2 = h_zero_branch(norm_eq((1, 1, 0), 0.2), 0.0)
    assert 1.6 < z2 < 1.7
    assert (math.pi - z2) == pytest.approx(2 * math.sin(z2 / 2), abs=1e-12)


@given(normalized_eqs(), st.floats(0.0, 4 * math.pi))
def test_h_zero_branch_on_curve(eq, z1):
    t, x = h_zero_point(eq, z1)
    scale = abs(eq.a.c0) + abs(eq.a.c1) + abs(eq.a.c2)
    assert abs(h_eval(eq, t, x)) < 1e-9 * max(1.0, scale)
    assert h_zero_branch_vec(eq, np.array([z1]))[0] == pytest.approx(x - t, abs=1e-12)


def test_h_zero_branch_decreasing_in_rhs():
    # RHS = 2 r1 at z1 = 0, so increasing r1 moves z2 down
    z2s = [h_zero_branch(norm_eq((1, r1, 0), 0.0), 0.0) for r1 in np.linspace(-20, 20, 81)]
    assert np.all(np.diff(z2s) < 0)
    assert all(0 < z < TWO_PI for z in z2s)


def test_h_zero_bracket_single_sign_change(rng):
    for _ in range(50):
        eq = random_normalized(rng)
        r1, r2 = eq.a.c1 / eq.a.c0, eq.a.c2 / eq.a.c0
        z1 = rng.uniform(0, 4 * math.pi)
        rhs = 2 * (r1 * math.cos(z1 / 2) + r2 * math.sin(z1 / 2))
        z2 = np.linspace(1e-9, TWO_PI - 1e-9, 20001)
        g = (math.pi - z2) - rhs * np.sin(z2 / 2)
        assert np.count_nonzero(np.diff(np.sign(g))) == 1


# --------------------------------------------------------------------------
# rational model


def test_rational_model_degrees(rng):
    for _ in range(20):
        model = rational_model(generic_draw(rng))
        assert model.f.total_degree == 3
        assert model.g.total_degree <= 9


def test_rational_model_identities(rng):
    for _ in range(100):
        eq = random_normalized(rng)
        model = rational_model(eq)
        z1, z2 = rng.normal(0, 2, 2)
        t, x = model.t_of(z1), model.t_of(z2)
        d1, d2 = 1 + z1 * z1, 1 + z2 * z2
        m = mbar_eval(eq, t, x)
        fz = 2 * float(model.f(z1, z2)) / (d1 * d2)
        mscale = abs(eval_tp(abar(eq), t) * eval_tp(eq.b, x)) + abs(eval_tp(abar(eq), x) * eval_tp(eq.b, t)) * eq.c
        assert abs(fz - m) <= 1e-9 * mscale
        gv = tangency_eval(eq, t, x)
        gz = float(model.g(z1, z2)) / (d1 ** 3 * d2 ** 3)
        n = n_poly(eq)
        gscale = (abs(eval_tp(n, t) * eval_tp(eq.b, x) ** 3)
                  + abs(eval_tp(n, x) * eval_tp(eq.b, t) ** 3) * eq.c ** 2)
        assert abs(gz - gv) <= 1e-9 * gscale


# --------------------------------------------------------------------------
# components of m = 0


def line_scan_components(eq, lines=3000):
    """Count components of m = 0 from points on the curve.

    For fixed t, m = 0 is A cos x + B sin x + C = 0 with closed-form roots;
    doing the same for fixed x and linking nearby points gives the
    components without any grid contouring.
    """
    ab, b, c = abar(eq), eq.b, eq.c
    pts = []
    s = (np.arange(lines) + 0.5) * TWO_PI / lines
    for fixed_t in (True, False):
        for u in s:
            au, bu = eval_tp(ab, u), eval_tp(b, u)
            if fixed_t:
                # au (b0 - b0 cos x + sin x) - c bu (1 + r1 cos x + r2 sin x)
                A = -au * b.c0 - c * bu * ab.c1
                B = au - c * bu * ab.c2
                C = au * b.c0 - c * bu
            else:
                # ab(t) bu - c au b(t), as a function of t
                A = bu * ab.c1 + c * au * b.c0
                B = bu * ab.c2 - c * au
                C = bu - c * au * b.c0
            R = math.hypot(A, B)
            if R < abs(C):
                continue
            phi = math.atan2(B, A)
            w = math.acos(-C / R)
            for v in (phi + w, phi - w):
                v %= TWO_PI
                pts.append((u, v) if fixed_t else (v, u))
    pts = np.array(pts)
    tree = cKDTree(pts)
    pairs = tree.query_pairs(6 * TWO_PI / lines, output_type="ndarray")
    from scipy.sparse import coo_matrix
    G = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(pts), len(pts)))
    return connected_components(G, directed=False)[0]


def test_four_components_regression():
    eq = FOUR_COMPONENTS
    assert count_components_m(eq, 512) == 4
    assert count_components_m(eq, 1024) == 4
    assert len(m_zero_polylines(eq, 256)) == 4
    assert line_scan_components(eq) == 4


def test_components_grid_stable(rng):
    for _ in range(20):
        eq = generic_draw(rng)
        assert count_components_m(eq, 512) == count_components_m(eq, 1024)


def test_components_match_line_scan(rng):
    for _ in range(10):
        eq = generic_draw(rng)
        assert count_components_m(eq, 512) == line_scan_components(eq)


def test_components_requires_damping():
    with pytest.raises(ValueError):
        count_components_m(norm_eq((0, 1, 0), 0.5))


# --------------------------------------------------------------------------
# tangency system


def minors_residual(eq, t, x):
    """Relative size of the 2x2 minors of the gradient matrix (scaled by b^2)."""
    ab, b, n, c = abar(eq), eq.b, n_poly(eq), eq.c
    at, ax, bt, bx = eval_tp(ab, t), eval_tp(ab, x), eval_tp(b, t), eval_tp(b, x)
    nt, nx = eval_tp(n, t), eval_tp(n, x)
    # columns (-abar, b c, k' b(t)^2 b(x)^2)
    rows = np.array([[-at, bt * c, -nt * bx ** 2], [ax, -bx, nx * bt ** 2 * c]])
    worst = 0.0
    for i, j in ((0, 1), (0, 2), (1, 2)):
        d = rows[0, i] * rows[1, j] - rows[0, j] * rows[1, i]
        s = abs(rows[0, i] * rows[1, j]) + abs(rows[0, j] * rows[1, i])
        worst = max(worst, abs(d) / max(s, 1e-300))
    return worst


def test_tangency_bounds_and_residuals(rng):
    for _ in range(200):
        eq = generic_draw(rng)
        res = solve_tangency(eq)
        assert not res.partial
        assert res.count_square <= 27
        assert res.count <= 15
        tbar = second_zero(eq.b.c0)
        for p in res.points:
            assert region_of(p.t, p.x, tbar) == "interior"
            assert abs(mbar_eval(eq, p.t, p.x)) < 1e-8 * (1 + eq.c)
            assert minors_residual(eq, p.t, p.x) < 1e-6


def test_tangency_agrees_with_newton_oracle(rng):
    for _ in range(50):
        eq = generic_draw(rng)
        res = solve_tangency(eq)
        if not res.generic:
            continue
        found = [(p.t, p.x) for p in res.all_points]
        for t, x in tangency_newton_oracle(eq, grid=32):
            assert any(abs(t - a) < 1e-6 and abs(x - b) < 1e-6 for a, b in found), (eq, t, x)


def test_tangency_output_sorted_and_regions(rng):
    eq = generic_draw(rng)
    res = solve_tangency(eq)
    ts = [p.t for p in res.all_points]
    assert ts == sorted(ts)
    assert set(res.points) | set(res.boundary) <= set(res.all_points)


def test_region_membership():
    tbar = 2.0
    assert region_of(0.5, 2.0, tbar) == "interior"
    assert region_of(1.5, 1.5, tbar) == "boundary"
    assert region_of(3.0, 1.0, tbar) == "outside"


# --------------------------------------------------------------------------
# common zeros of abar and b


def test_discriminant_examples():
    assert common_zero_discriminant(-1.0, 0.7, 0.3) == 0.0
    assert common_zero_discriminant(0.0, 0.0, 0.0) == 1.0
    assert common_zero_discriminant(0.0, 1.0, 1.0) == 0.0
    assert common_zero_gap(0.0, 1.0, 1.0) < 1e-10


def test_discriminant_sign_agreement(rng):
    # the gap is quadratic in the distance to the variety while the
    # discriminant is linear, so draws with 1e-9 < |disc| < 1e-2 sit in the
    # band where the two thresholds are not comparable
    skipped = 0
    for _ in range(500):
        r1, r2 = rng.uniform(-3, 3, 2)
        b0 = rng.uniform(-2, 2)
        disc = common_zero_discriminant(r1, r2, b0)
        if 1e-9 < abs(disc) < 1e-2:
            skipped += 1
            continue
        assert (abs(disc) > 1e-9) == (common_zero_gap(r1, r2, b0) > 1e-6)
    assert skipped < 10
    for _ in range(50):
        r1 = rng.uniform(-3, 3)
        b0 = rng.choice([-1, 1]) * rng.uniform(0.2, 2)
        r2 = ((r1 + 1) * b0 * b0 - r1 + 1) / (2 * b0)
        assert abs(common_zero_discriminant(r1, r2, b0)) < 1e-9
        assert common_zero_gap(r1, r2, b0) < 1e-6


# --------------------------------------------------------------------------
# completeness of the counting chain


def _sign_changes(v):
    ok = np.isfinite(v[:-1]) & np.isfinite(v[1:])
    return np.nonzero(ok & (v[:-1] * v[1:] < 0))[0]


@pytest.mark.slow
def test_counting_chain(rng):
    """Between consecutive cycles the T+ graph crosses h = 0; between
    consecutive crossings h = 0 meets m = 0; between consecutive such points
    on one component of m = 0 there is a tangency point."""
    done = 0
    checked = dict(cycles=0, crossings=0, arcs=0)
    while done < 50:
        eq = generic_draw(rng)
        tbar = second_zero(eq.b.c0)
        ts = np.linspace(1e-6, tbar - 1e-6, 1500)
        xp = half_map_plus(eq, ts, FINE)
        roots = _sign_changes(delta(eq, ts, FINE))
        if roots.size == 0:
            continue
        done += 1
        hv = h_eval(eq, ts, xp)
        cross = _sign_changes(hv)
        for i, j in zip(roots, roots[1:]):
            assert np.any((cross >= i) & (cross <= j))
            checked["cycles"] += 1
        hm = h_m_intersections(eq)
        hm_z1 = np.array([t + x for t, x in hm])
        z1 = np.sort(ts[cross] + xp[cross])
        for u, v in zip(z1, z1[1:]):
            assert np.any((hm_z1 >= u - 1e-3) & (hm_z1 <= v + 1e-3))
            checked["crossings"] += 1
        tangency = solve_tangency(eq).all_points
        for line in m_zero_polylines(eq, 512):
            def where(p):
                d = np.hypot(line[:, 0] - p[0], line[:, 1] - p[1])
                return int(np.argmin(d)) if d.min() < 2e-2 else None
            on = sorted(k for k in map(where, hm) if k is not None)
            tk = [k for k in (where((p.t, p.x)) for p in tangency) if k is not None]
            for u, v in zip(on, on[1:]):
                assert any(u <= k <= v for k in tk)
                checked["arcs"] += 1
    assert checked["arcs"] > 0

import itertools

import pytest

from pwabel.bounds import GEOMETRY_CHECKS, audit, khovanskii_bound, paper_bounds
from pwabel.centers import detect_center
from pwabel.curves import (common_zero_discriminant, count_components_m, h_m_intersections,
                           normalized_eq, solve_tangency)
from pwabel.errors import DegenerateCurve
from pwabel.flow import AbelEq
from pwabel.poincare import find_cycles
from pwabel.trigpoly import TrigPoly, changes_sign

from conftest import random_eq


def test_khovanskii_values():
    assert khovanskii_bound(2, (1, 1), 0, 4) == 2458624 == 7 ** 4 * 2 ** 10
    assert khovanskii_bound(1, (1,), 0, 0) == 1
    assert khovanskii_bound(2, (1, 1), 0, 0) == 1


def test_khovanskii_rejects_bad_input():
    with pytest.raises(ValueError):
        khovanskii_bound(2, (1,), 0, 1)
    with pytest.raises(ValueError):
        khovanskii_bound(1, (-1,), 0, 1)


def test_khovanskii_monotone():
    for d1, d2, k, rho in itertools.product(range(1, 4), range(1, 4), range(3), range(4)):
        base = khovanskii_bound(2, (d1, d2), k, rho)
        assert khovanskii_bound(2, (d1 + 1, d2), k, rho) >= base
        assert khovanskii_bound(2, (d1, d2 + 1), k, rho) >= base
        assert khovanskii_bound(2, (d1, d2), k, rho + 1) >= base
        assert khovanskii_bound(2, (d1, d2), k + 1, rho) >= base


def test_paper_bounds():
    b = paper_bounds()
    assert b.khovanskii_region == 2458624
    assert b.khovanskii_total == 4 * 2458624
    assert b.coarse_total == 9834500 == 7 ** 4 * 2 ** 12 + 2 + 2
    assert b.coarse_total == 4 * b.khovanskii_region + 4
    assert b.bezout_tangency == 27
    assert b.assembled_bezout == 34 == b.bezout_tangency + 3 + 2 + 2
    assert b.assembled_groebner == 22 == 15 + 3 + 2 + 2
    assert all(isinstance(v, int) for v in b.to_dict().values())


def test_audit_center_is_vacuous():
    rep = find_cycles(AbelEq.from_coeffs((0, 0, 1), (0, 0, 1)))
    v = audit(rep, None, None)
    assert v.vacuous and v.passed and not v.checks


def test_audit_two_constant_sign_cycles():
    rep = find_cycles(AbelEq.from_coeffs((-1, 0, 0), (2, 1, 0)))
    v = audit(rep, None, None)
    assert v.passed
    total = {c.name: c for c in v.checks}["total <= 22"]
    assert total.lhs == 2 and total.margin == 20


def test_audit_flags_violation():
    rep = find_cycles(AbelEq.from_coeffs((-1, 0, 0), (2, 1, 0)))
    v = audit(rep, tangency_count=0, component_count=4, hm_count=0)
    assert [c.name for c in v.violations] == ["components <= 3"]
    assert not v.cycle_violations
    assert v.geometry_violations[0].name in GEOMETRY_CHECKS


def _audit_random(eq):
    rep = find_cycles(eq)
    tangency = components = hm = None
    generic = True
    if changes_sign(eq.b) and rep.kind != "center":
        eqn = normalized_eq(eq)
        r1, r2 = eqn.a.c1 / eqn.a.c0, eqn.a.c2 / eqn.a.c0
        if abs(common_zero_discriminant(r1, r2, eqn.b.c0)) < 1e-6:
            return None
        try:
            tr = solve_tangency(eqn)
        except DegenerateCurve:
            return None
        tangency, generic = tr.count_square, tr.generic
        components = count_components_m(eqn, 512)
        hm = len(h_m_intersections(eqn))
    return audit(rep, tangency, components, hm, generic)


@pytest.mark.slow
def test_audit_random_generic(rng):
    """The cycle-count inequalities hold on random equations.  The geometry
    checks are tallied separately: m = 0 can have more components than the
    Harnack count for the affine cubic allows."""
    geometry = 0
    done = 0
    while done < 1000:
        eq = random_eq(rng)
        if abs(eq.a.c0) < 1e-3:
            continue
        v = _audit_random(eq)
        if v is None:
            continue
        done += 1
        assert not v.cycle_violations, (eq, [c.to_dict() for c in v.cycle_violations])
        geometry += bool(v.geometry_violations)
    print(f"geometry flags on {geometry} of {done} equations")

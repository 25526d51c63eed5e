"""Explicit bounds on the number of limit cycles and a per-equation audit."""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Optional, Sequence

# the degree 3 and degree 9 curves of the tangency system
M_DEGREE, G_DEGREE = 3, 9
# isolated tangency points for generic parameters (Groebner count)
GENERIC_TANGENCY = 15
# components of m = 0 in the square
MAX_COMPONENTS = 3
# constant-sign cycles, and the extra cycles allowed by the h = m = 0 count
CONSTANT_SIGN = 2
CHAIN_EXTRA = 2


def khovanskii_bound(n: int, degrees: Sequence[int], k: int, rho: int) -> int:
    """m_1...m_n (sum m_i + rho + 1)^(rho + k) 2^(rho + (rho + k)(rho + k - 1)/2)."""
    degrees = [int(d) for d in degrees]
    if len(degrees) != n:
        raise ValueError("need one degree per variable")
    if n < 0 or k < 0 or rho < 0 or any(d < 0 for d in degrees):
        raise ValueError("inputs must be nonnegative")
    e = rho + k
    return prod(degrees) * (sum(degrees) + rho + 1) ** e * 2 ** (rho + e * (e - 1) // 2)


@dataclass(frozen=True)
class BoundReport:
    khovanskii_region: int
    khovanskii_total: int
    coarse_total: int
    bezout_tangency: int
    assembled_bezout: int
    assembled_groebner: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def paper_bounds() -> BoundReport:
    region = khovanskii_bound(2, (1, 1), 0, 4)
    # four translated copies of the region cover the square
    total = 4 * region
    bezout = M_DEGREE * G_DEGREE
    return BoundReport(
        khovanskii_region=region,
        khovanskii_total=total,
        coarse_total=total + CONSTANT_SIGN + 2,
        bezout_tangency=bezout,
        assembled_bezout=bezout + MAX_COMPONENTS + CHAIN_EXTRA + CONSTANT_SIGN,
        assembled_groebner=GENERIC_TANGENCY + MAX_COMPONENTS + CHAIN_EXTRA + CONSTANT_SIGN,
    )


# checks on the curve geometry rather than on the number of cycles
GEOMETRY_CHECKS = frozenset({"components <= 3", "tangency <= 27", "tangency <= 15"})


@dataclass(frozen=True)
class Check:
    name: str
    lhs: int
    rhs: int

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs

    @property
    def margin(self) -> int:
        return self.rhs - self.lhs

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "ok": self.ok, "margin": self.margin}


@dataclass(frozen=True)
class AuditVerdict:
    checks: tuple = ()
    vacuous: bool = False
    notes: tuple = ()

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def violations(self) -> list[Check]:
        return [c for c in self.checks if not c.ok]

    @property
    def cycle_violations(self) -> list[Check]:
        """Failed inequalities that bound the number of cycles."""
        return [c for c in self.violations if c.name not in GEOMETRY_CHECKS]

    @property
    def geometry_violations(self) -> list[Check]:
        return [c for c in self.violations if c.name in GEOMETRY_CHECKS]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "cycles_passed": not self.cycle_violations,
                "vacuous": self.vacuous,
                "checks": [c.to_dict() for c in self.checks], "notes": list(self.notes)}


def audit(report, tangency_count: Optional[int], component_count: Optional[int],
          hm_count: Optional[int] = None, generic: bool = True) -> AuditVerdict:
    """Check one equation's observed counts against every inequality of the
    counting chain.  ``tangency_count`` is the number of tangency points in
    the whole square, ``hm_count`` the number of h = m = 0 points in the
    counting region.  A center is not a limit cycle, so a center report
    passes vacuously."""
    if report.kind == "center" and report.center_class is not None and report.center_class.kind == "global":
        return AuditVerdict((), True, ("global center: no limit cycles",))
    b = paper_bounds()
    sc = report.n_sign_changing
    cs = report.n_constant_sign
    total = sc + cs
    checks = [Check("constant_sign <= 2", cs, CONSTANT_SIGN),
              Check("total <= 34", total, b.assembled_bezout)]
    if generic:
        checks.append(Check("sign_changing <= 20", sc, GENERIC_TANGENCY + MAX_COMPONENTS + CHAIN_EXTRA))
        checks.append(Check("total <= 22", total, b.assembled_groebner))
    notes = []
    if component_count is not None:
        checks.append(Check("components <= 3", component_count, MAX_COMPONENTS))
    if tangency_count is not None:
        checks.append(Check("tangency <= 27", tangency_count, b.bezout_tangency))
        if generic:
            checks.append(Check("tangency <= 15", tangency_count, GENERIC_TANGENCY))
    if hm_count is not None:
        checks.append(Check("sign_changing <= hm + 2", sc, hm_count + CHAIN_EXTRA))
        if tangency_count is not None and component_count is not None:
            checks.append(Check("hm <= tangency + components", hm_count,
                                tangency_count + component_count))
    if tangency_count is not None and component_count is not None:
        checks.append(Check("sign_changing <= tangency + components + 2", sc,
                            tangency_count + component_count + CHAIN_EXTRA))
    else:
        notes.append("tangency or component count unavailable; chain checks skipped")
    return AuditVerdict(tuple(checks), False, tuple(notes))

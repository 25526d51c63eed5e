"""Linear trigonometric polynomials c0 + c1 cos t + c2 sin t.

Everything downstream (the coefficients a(t), b(t) and the auxiliary
function n(t)) lives in this three-dimensional class, so integrals, zeros
and time shifts are all available in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import IdenticallyZero, NoSignChange

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TrigPoly:
    c0: float = 0.0
    c1: float = 0.0
    c2: float = 0.0

    @classmethod
    def from_seq(cls, seq) -> "TrigPoly":
        c0, c1, c2 = (float(v) for v in seq)
        return cls(c0, c1, c2)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.c0, self.c1, self.c2)

    @property
    def amplitude(self) -> float:
        return math.hypot(self.c1, self.c2)

    def is_zero(self) -> bool:
        return self.c0 == 0.0 and self.c1 == 0.0 and self.c2 == 0.0

    def __call__(self, t):
        return eval_tp(self, t)

    def derivative(self) -> "TrigPoly":
        return TrigPoly(0.0, self.c2, -self.c1)

    def antiderivative(self, t):
        """Periodic part plus secular term, with value -c2 at t = 0."""
        return self.c0 * t + self.c1 * np.sin(t) - self.c2 * np.cos(t)

    def shift(self, t0: float) -> "TrigPoly":
        """Return q with q(s) = p(s + t0)."""
        c, s = math.cos(t0), math.sin(t0)
        return TrigPoly(self.c0, self.c1 * c + self.c2 * s, self.c2 * c - self.c1 * s)

    def reflect(self) -> "TrigPoly":
        """Return q with q(s) = p(-s)."""
        return TrigPoly(self.c0, self.c1, -self.c2)

    def __mul__(self, k: float) -> "TrigPoly":
        return TrigPoly(k * self.c0, k * self.c1, k * self.c2)

    __rmul__ = __mul__

    def __neg__(self) -> "TrigPoly":
        return self * -1.0

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        return TrigPoly(self.c0 + other.c0, self.c1 + other.c1, self.c2 + other.c2)

    def __sub__(self, other: "TrigPoly") -> "TrigPoly":
        return self + (-other)


class Zero(NamedTuple):
    t: float
    double: bool


def eval_tp(p: TrigPoly, t):
    """Value of ``p`` at ``t`` (scalar or array, radians)."""
    if np.ndim(t) == 0:
        t = float(t)
        return p.c0 + p.c1 * math.cos(t) + p.c2 * math.sin(t)
    t = np.asarray(t, dtype=float)
    return p.c0 + p.c1 * np.cos(t) + p.c2 * np.sin(t)


def integrate(p: TrigPoly, t0: float, t1: float) -> float:
    """Exact value of the integral of ``p`` over [t0, t1]."""
    # sum-to-product forms avoid cancellation on short intervals
    half = 0.5 * (t1 - t0)
    mid = 0.5 * (t1 + t0)
    s = 2.0 * math.sin(half)
    return p.c0 * (t1 - t0) + s * (p.c1 * math.cos(mid) + p.c2 * math.sin(mid))


def _double_tol(p: TrigPoly) -> float:
    return 1e-9 * (1.0 + p.amplitude)


def _polish(p: TrigPoly, t: float) -> float:
    # bracketed Newton; the bracket guards the region near t = pi where
    # the half-angle substitution loses accuracy
    dp = p.derivative()
    lo, hi = t - 1e-3, t + 1e-3
    flo, fhi = eval_tp(p, lo), eval_tp(p, hi)
    bracketed = flo * fhi < 0.0
    for _ in range(60):
        f = eval_tp(p, t)
        if f == 0.0:
            break
        d = eval_tp(dp, t)
        step = f / d if d != 0.0 else 0.0
        tn = t - step
        if bracketed:
            if (f < 0.0) == (flo < 0.0):
                lo, flo = t, f
            else:
                hi = t
            if not (lo < tn < hi) or d == 0.0:
                tn = 0.5 * (lo + hi)
        if abs(tn - t) <= 4e-16 * max(1.0, abs(t)):
            t = tn
            break
        t = tn
    return t


def zeros_in_period(p: TrigPoly) -> list[Zero]:
    """Zeros of ``p`` in [0, 2 pi), sorted, with a double-zero flag.

    Uses the half-angle substitution w = tan(t/2), which turns p = 0 into
    (c0 - c1) w^2 + 2 c2 w + (c0 + c1) = 0; the root at t = pi corresponds
    to w = infinity and is recovered through ``atan2``.
    """
    if p.is_zero():
        raise IdenticallyZero("trigonometric polynomial is identically zero")
    R = p.amplitude
    if R == 0.0:
        return []
    disc4 = (R - p.c0) * (R + p.c0)  # = c2^2 - (c0 - c1)(c0 + c1)
    tol = _double_tol(p)
    if math.sqrt(abs(disc4)) < tol:
        phi = math.atan2(p.c2, p.c1)
        t = phi + math.pi if p.c0 > 0 else phi
        return [Zero(t % TWO_PI, True)]
    if disc4 < 0.0:
        return []
    A, C = p.c0 - p.c1, p.c0 + p.c1
    sq = math.sqrt(disc4)
    q = -(p.c2 + math.copysign(sq, p.c2))
    cands = [2.0 * math.atan2(q, A), 2.0 * math.atan2(C, q)]
    out = []
    for t in cands:
        t = _polish(p, t % TWO_PI) % TWO_PI
        if t >= TWO_PI - 1e-15:
            t = 0.0
        out.append(Zero(t, False))
    out.sort(key=lambda z: z.t)
    return out


@dataclass(frozen=True)
class NormalizedForm:
    """Equation data after shifting time and scaling x.

    Original and normalized quantities are related by
    ``t = s + time_shift`` and ``x(t) = x_scale * xn(s)``.
    """

    a: TrigPoly
    b0: float
    time_shift: float
    x_scale: float
    tbar: float

    @property
    def b(self) -> TrigPoly:
        return TrigPoly(self.b0, -self.b0, 1.0)

    def original_time(self, s):
        return (np.asarray(s) + self.time_shift) % TWO_PI

    def normalized_time(self, t):
        return (np.asarray(t) - self.time_shift) % TWO_PI

    def original_b(self, t):
        return self.x_scale * eval_tp(self.b, np.asarray(t) - self.time_shift)


def second_zero(b0: float) -> float:
    """The zero in (0, 2 pi) of sin t + b0 (1 - cos t)."""
    return 2.0 * math.atan2(1.0, -b0)


def normalize(a: TrigPoly, b: TrigPoly) -> NormalizedForm:
    """Shift time so that b(0) = 0, b'(0) > 0, then scale b'(0) to one."""
    zs = [z for z in zeros_in_period(b) if not z.double] if not b.is_zero() else []
    db = b.derivative()
    ups = [z.t for z in zs if eval_tp(db, z.t) > 0.0]
    if len(zs) != 2 or not ups:
        raise NoSignChange("b(t) does not change sign")
    t_star = ups[0]
    scale = math.sqrt((b.amplitude - b.c0) * (b.amplitude + b.c0))
    b0 = b.c0 / scale
    return NormalizedForm(a=a.shift(t_star), b0=b0, time_shift=t_star,
                          x_scale=scale, tbar=second_zero(b0))


def changes_sign(b: TrigPoly) -> bool:
    if b.is_zero():
        return False
    return sum(1 for z in zeros_in_period(b) if not z.double) == 2

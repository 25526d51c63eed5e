"""Dense polynomials, resultants and certified real-root isolation.

Coefficients are exact rationals (a float converts to a Fraction without
loss), so resultants and Sturm sequences are exact for the rounded input.
Signs of Sturm sequence members are evaluated in extended-precision
floating point with a rigorous Horner error bound; an evaluation whose
magnitude does not clear the bound raises AmbiguousSign and the caller
escalates the precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Optional, Sequence

import mpmath
import numpy as np

from .errors import AmbiguousSign, IllConditioned

DEFAULT_PREC = 128
ESCALATION = (128, 256, 512)


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, mpmath.mpf):
        m, e = mpmath.mpf(v).man_exp
        return Fraction(int(m) * 2 ** e) if e >= 0 else Fraction(int(m), 2 ** -e)
    return Fraction(float(v))


def _trim(cs: list) -> list:
    while len(cs) > 1 and cs[-1] == 0:
        cs.pop()
    return cs


# --------------------------------------------------------------------------
# univariate


@dataclass(frozen=True)
class UniPoly:
    """Dense univariate polynomial, ascending coefficients."""

    coeffs: tuple

    def __init__(self, coeffs: Iterable):
        cs = _trim([_frac(c) for c in coeffs] or [Fraction(0)])
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def from_roots(cls, roots: Sequence, lead=1) -> "UniPoly":
        p = cls([lead])
        for r in roots:
            p = p * cls([-_frac(r), 1])
        return p

    @property
    def degree(self) -> int:
        return -1 if self.is_zero() else len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and self.coeffs[0] == 0

    @property
    def lead(self) -> Fraction:
        return self.coeffs[-1]

    def __call__(self, x):
        if isinstance(x, (Fraction, int)):
            acc = Fraction(0)
            for c in reversed(self.coeffs):
                acc = acc * x + c
            return acc
        return np.polyval(self.as_float()[::-1], x)

    def as_float(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs])

    def __add__(self, o: "UniPoly") -> "UniPoly":
        n = max(len(self.coeffs), len(o.coeffs))
        a = list(self.coeffs) + [Fraction(0)] * (n - len(self.coeffs))
        b = list(o.coeffs) + [Fraction(0)] * (n - len(o.coeffs))
        return UniPoly([x + y for x, y in zip(a, b)])

    def __neg__(self) -> "UniPoly":
        return UniPoly([-c for c in self.coeffs])

    def __sub__(self, o: "UniPoly") -> "UniPoly":
        return self + (-o)

    def __mul__(self, o) -> "UniPoly":
        if not isinstance(o, UniPoly):
            k = _frac(o)
            return UniPoly([c * k for c in self.coeffs])
        out = [Fraction(0)] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, x in enumerate(self.coeffs):
            if x:
                for j, y in enumerate(o.coeffs):
                    out[i + j] += x * y
        return UniPoly(out)

    __rmul__ = __mul__

    def derivative(self) -> "UniPoly":
        return UniPoly([i * c for i, c in enumerate(self.coeffs)][1:] or [0])

    def divmod(self, d: "UniPoly") -> tuple["UniPoly", "UniPoly"]:
        if d.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        r = list(self.coeffs)
        dn = d.degree
        if self.degree < dn:
            return UniPoly([0]), self
        q = [Fraction(0)] * (len(r) - dn)
        inv = 1 / d.lead
        for k in range(len(r) - 1, dn - 1, -1):
            c = r[k] * inv
            q[k - dn] = c
            if c:
                for j in range(dn + 1):
                    r[k - dn + j] -= c * d.coeffs[j]
        return UniPoly(q), UniPoly(r[:dn] or [0])

    def monic(self) -> "UniPoly":
        return self * (1 / self.lead)

    def primitive(self) -> "UniPoly":
        """Positive rational multiple with coprime integer coefficients."""
        if self.is_zero():
            return self
        den = math.lcm(*(c.denominator for c in self.coeffs))
        ints = [int(c * den) for c in self.coeffs]
        g = math.gcd(*ints)
        return UniPoly([Fraction(v // g) for v in ints])

    def to_mpf(self, prec: int = DEFAULT_PREC) -> list:
        with mpmath.workprec(prec):
            return [mpmath.mpf(c.numerator) / c.denominator for c in self.coeffs]


def poly_gcd(p: UniPoly, q: UniPoly) -> UniPoly:
    while not q.is_zero():
        p, q = q, p.divmod(q)[1].primitive()
    return p.monic() if not p.is_zero() else p


def squarefree_decomposition(p: UniPoly) -> list[tuple[UniPoly, int]]:
    """Yun's algorithm: [(q_k, k)] with p = lead * prod q_k^k."""
    if p.degree <= 0:
        return []
    dp = p.derivative()
    a = poly_gcd(p, dp)
    b = p.divmod(a)[0]
    c = dp.divmod(a)[0]
    d = c - b.derivative()
    out, k = [], 1
    while b.degree > 0:
        a = poly_gcd(b, d)
        if a.degree > 0:
            out.append((a.monic(), k))
        b = b.divmod(a)[0]
        c = d.divmod(a)[0]
        d = c - b.derivative()
        k += 1
    return out


def is_squarefree(p: UniPoly) -> bool:
    return poly_gcd(p, p.derivative()).degree <= 0


# --------------------------------------------------------------------------
# Sturm sequences


class SturmSequence:
    """Exact Sturm sequence of a squarefree polynomial."""

    def __init__(self, p: UniPoly):
        if p.is_zero():
            raise ValueError("zero polynomial")
        seq = [p.primitive() if p.lead > 0 else -(-p).primitive(), p.derivative().primitive()]
        while True:
            r = seq[-2].divmod(seq[-1])[1]
            if r.is_zero():
                break
            seq.append(-r.primitive())
        self.seq = seq
        self._mpf = {}

    @property
    def squarefree(self) -> bool:
        return self.seq[-1].degree == 0

    def _coeffs(self, prec: int):
        if prec not in self._mpf:
            self._mpf[prec] = [q.to_mpf(prec) for q in self.seq]
        return self._mpf[prec]

    def signs_at(self, x, prec: int = DEFAULT_PREC, exact_fallback: bool = False) -> list[int]:
        if x == math.inf or x == -math.inf:
            s = 1 if x > 0 else -1
            return [int(np.sign(q.lead)) * (s ** q.degree) for q in self.seq]
        xf = _frac(x)
        out = []
        with mpmath.workprec(prec):
            xm = mpmath.mpf(xf.numerator) / xf.denominator
            u = mpmath.ldexp(1, -prec)
            ax = abs(xm)
            for q, cm in zip(self.seq, self._coeffs(prec)):
                acc = mpmath.mpf(0)
                mag = mpmath.mpf(0)
                for c in reversed(cm):
                    acc = acc * xm + c
                    mag = mag * ax + abs(c)
                n = len(cm)
                # rounding of x, of each coefficient, and of Horner itself
                gamma = (2 * n + 2) * u / (1 - (2 * n + 2) * u)
                bound = gamma * mag
                if abs(acc) > bound:
                    out.append(1 if acc > 0 else -1)
                elif exact_fallback:
                    out.append(int(np.sign(q(xf))))
                else:
                    raise AmbiguousSign(f"sign of Sturm member undetermined at x={float(xf)!r}")
        return out

    def variations(self, x, prec: int = DEFAULT_PREC, exact_fallback: bool = False) -> int:
        s = [v for v in self.signs_at(x, prec, exact_fallback) if v != 0]
        return sum(1 for u, v in zip(s, s[1:]) if u != v)

    def count(self, lo, hi, prec: int = DEFAULT_PREC, exact_fallback: bool = False) -> int:
        """Number of distinct real roots in (lo, hi]."""
        return self.variations(lo, prec, exact_fallback) - self.variations(hi, prec, exact_fallback)




def _escalated(fn, exact_fallback: bool = True):
    """Try each working precision in turn; optionally finish exactly."""
    for prec in ESCALATION:
        try:
            return fn(prec, False)
        except AmbiguousSign:
            if prec == ESCALATION[-1] and not exact_fallback:
                raise
    return fn(ESCALATION[-1], True)


def sturm_count(p: UniPoly, lo, hi, exact_fallback: bool = True) -> int:
    """Exact number of real roots of squarefree ``p`` in (lo, hi].

    Signs are certified at 128 bits, escalating to 256 and 512; an endpoint
    that is itself a root is only decided exactly, so without
    ``exact_fallback`` it raises AmbiguousSign.
    """
    sq = SturmSequence(p)
    return _escalated(lambda prec, exact: sq.count(lo, hi, prec, exact), exact_fallback)


@dataclass(frozen=True)
class Root:
    value: float
    multiplicity: int
    lo: float
    hi: float


def _isolate_squarefree(sq: SturmSequence, p: UniPoly, lo, hi, tol: float,
                        exact_fallback: bool) -> list[tuple[float, float, float]]:
    count = lambda a, b: _escalated(lambda prec, ex: sq.count(a, b, prec, ex), exact_fallback)
    total = count(lo, hi)
    if total == 0:
        return []
    out = []
    # candidates from a floating-point eigenvalue solve, certified by Sturm
    cands = []
    cf = p.as_float()
    if np.all(np.isfinite(cf)) and cf[-1] != 0.0:
        with np.errstate(all="ignore"):
            rts = np.roots(cf[::-1])
        for r in rts:
            if abs(r.imag) <= 1e-6 * (1.0 + abs(r.real)):
                x = float(r.real)
                if lo < x < hi:
                    cands.append(x)
    cands.sort()
    ok = len(cands) == total
    if ok:
        for i, x in enumerate(cands):
            w = max(tol, 1e-13 * (1.0 + abs(x)))
            gap = min([abs(x - y) for y in cands if y != x] + [math.inf])
            w = min(w, 0.25 * gap)
            for _ in range(20):
                a, b = max(lo, x - w), min(hi, x + w)
                if count(a, b) == 1:
                    out.append((a, b))
                    break
                w *= 4.0
                if w > 0.25 * gap:
                    ok = False
                    break
            else:
                ok = False
            if not ok:
                break
        ok = ok and len(out) == total
    if not ok:
        out = []
        stack = [(lo, hi, total)]
        while stack:
            a, b, n = stack.pop()
            if n == 0:
                continue
            fa, fb = a, b
            if math.isinf(fa) or math.isinf(fb):
                bound = 1.0 + max(abs(float(c / p.lead)) for c in p.coeffs[:-1]) if p.degree > 0 else 1.0
                fa = max(a, -bound - 1.0)
                fb = min(b, bound + 1.0)
            if n == 1:
                out.append((fa, fb))
                continue
            m = 0.5 * (fa + fb)
            nl = count(fa, m)
            stack.append((fa, m, nl))
            stack.append((m, fb, n - nl))
    res = []
    for a, b in out:
        res.append(_refine(sq, a, b, tol, exact_fallback))
    res.sort()
    return res


def _refine(sq: SturmSequence, a: float, b: float, tol: float,
            exact_fallback: bool) -> tuple[float, float, float]:
    """Bisect an isolating interval (a, b] down to width tol."""
    sign = lambda x: _escalated(lambda prec, ex: sq.signs_at(x, prec, ex), exact_fallback)[0]
    sb = sign(b)
    if sb == 0:
        return (b, b, b)
    for _ in range(200):
        if b - a <= tol * max(1.0, abs(a) + abs(b)) * 0.5:
            break
        m = 0.5 * (a + b)
        if m == a or m == b:
            break
        sm = sign(m)
        if sm == 0:
            return (m, m, m)
        if sm == sb:
            b = m
        else:
            a = m
    return (0.5 * (a + b), a, b)


def isolate_and_refine(p: UniPoly, lo=-math.inf, hi=math.inf, tol: float = 1e-12,
                       exact_fallback: bool = True) -> list[Root]:
    """Real roots of ``p`` in (lo, hi] with multiplicities, refined to ``tol``.

    Non-squarefree input is split by a squarefree decomposition first.
    Sign evaluations escalate through 128, 256 and 512 bits; with
    ``exact_fallback`` a still-ambiguous sign is settled in exact rational
    arithmetic, otherwise AmbiguousSign propagates.
    """
    if p.is_zero():
        raise ValueError("zero polynomial")
    if p.degree <= 0:
        return []
    sq = SturmSequence(p)
    parts = [(p, 1)] if sq.squarefree else squarefree_decomposition(p)
    roots = []
    for q, k in parts:
        s = sq if q is p else SturmSequence(q)
        for v, a, b in _isolate_squarefree(s, q, lo, hi, tol, exact_fallback):
            roots.append(Root(v, k, a, b))
    roots.sort(key=lambda r: r.value)
    return roots


# --------------------------------------------------------------------------
# bivariate


@dataclass(frozen=True)
class BiPoly:
    """Dense bivariate polynomial: coeffs[i][j] multiplies z1^i z2^j."""

    coeffs: tuple

    def __init__(self, coeffs):
        rows = [[_frac(c) for c in row] for row in coeffs] or [[Fraction(0)]]
        w = max(len(r) for r in rows)
        rows = [r + [Fraction(0)] * (w - len(r)) for r in rows]
        while len(rows) > 1 and all(c == 0 for c in rows[-1]):
            rows.pop()
        while w > 1 and all(r[-1] == 0 for r in rows):
            rows = [r[:-1] for r in rows]
            w -= 1
        object.__setattr__(self, "coeffs", tuple(tuple(r) for r in rows))

    @classmethod
    def from_dict(cls, terms: dict) -> "BiPoly":
        if not terms:
            return cls([[0]])
        n1 = max(i for i, _ in terms) + 1
        n2 = max(j for _, j in terms) + 1
        rows = [[Fraction(0)] * n2 for _ in range(n1)]
        for (i, j), c in terms.items():
            rows[i][j] += _frac(c)
        return cls(rows)

    @classmethod
    def z1(cls, p: UniPoly) -> "BiPoly":
        return cls([[c] for c in p.coeffs])

    @classmethod
    def z2(cls, p: UniPoly) -> "BiPoly":
        return cls([list(p.coeffs)])

    def terms(self) -> dict:
        return {(i, j): c for i, row in enumerate(self.coeffs) for j, c in enumerate(row) if c != 0}

    def is_zero(self) -> bool:
        return not self.terms()

    @property
    def total_degree(self) -> int:
        t = self.terms()
        return max((i + j for i, j in t), default=-1)

    def degree_in(self, var: str) -> int:
        t = self.terms()
        k = 0 if var == "z1" else 1
        return max((ij[k] for ij in t), default=-1)

    def __add__(self, o: "BiPoly") -> "BiPoly":
        t = dict(self.terms())
        for k, c in o.terms().items():
            t[k] = t.get(k, 0) + c
        return BiPoly.from_dict(t)

    def __neg__(self) -> "BiPoly":
        return BiPoly.from_dict({k: -c for k, c in self.terms().items()})

    def __sub__(self, o: "BiPoly") -> "BiPoly":
        return self + (-o)

    def __mul__(self, o) -> "BiPoly":
        if not isinstance(o, BiPoly):
            k = _frac(o)
            return BiPoly.from_dict({key: c * k for key, c in self.terms().items()})
        out = {}
        for (i, j), c in self.terms().items():
            for (k, l), d in o.terms().items():
                out[(i + k, j + l)] = out.get((i + k, j + l), 0) + c * d
        return BiPoly.from_dict(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "BiPoly":
        out = BiPoly([[1]])
        for _ in range(n):
            out = out * self
        return out

    @cached_property
    def _float(self) -> np.ndarray:
        return np.array([[float(c) for c in row] for row in self.coeffs])

    def __call__(self, z1, z2):
        """Horner in z2 for each z1 power, then Horner in z1 (float)."""
        C = self._float
        z1 = np.asarray(z1, dtype=float)
        z2 = np.asarray(z2, dtype=float)
        acc = np.zeros(np.broadcast(z1, z2).shape)
        for row in C[::-1]:
            inner = np.zeros_like(acc)
            for c in row[::-1]:
                inner = inner * z2 + c
            acc = acc * z1 + inner
        return acc if acc.ndim else float(acc)

    def eval_exact(self, z1, z2) -> Fraction:
        z1, z2 = _frac(z1), _frac(z2)
        acc = Fraction(0)
        for row in reversed(self.coeffs):
            inner = Fraction(0)
            for c in reversed(row):
                inner = inner * z2 + c
            acc = acc * z1 + inner
        return acc

    def abs_eval(self, z1, z2):
        """Sum of |terms|, the natural scale for a residual."""
        C = np.abs(self._float)
        a1 = np.abs(np.asarray(z1, dtype=float))
        a2 = np.abs(np.asarray(z2, dtype=float))
        acc = np.zeros(np.broadcast(a1, a2).shape)
        for row in C[::-1]:
            inner = np.zeros_like(acc)
            for c in row[::-1]:
                inner = inner * a2 + c
            acc = acc * a1 + inner
        return acc if acc.ndim else float(acc)

    def in_z2_at(self, z1) -> UniPoly:
        """Univariate polynomial in z2 after fixing z1 (exact)."""
        z1 = _frac(z1)
        n2 = len(self.coeffs[0])
        out = [Fraction(0)] * n2
        p = Fraction(1)
        for row in self.coeffs:
            for j, c in enumerate(row):
                out[j] += c * p
            p *= z1
        return UniPoly(out)

    def in_z1_at(self, z2) -> UniPoly:
        return self.swap().in_z2_at(z2)

    def swap(self) -> "BiPoly":
        return BiPoly.from_dict({(j, i): c for (i, j), c in self.terms().items()})


def _int_det(M: list[list[int]]) -> int:
    """Bareiss fraction-free determinant of an integer matrix."""
    M = [row[:] for row in M]
    n = len(M)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if M[k][k] == 0:
            for i in range(k + 1, n):
                if M[i][k] != 0:
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return 0
        pk = M[k][k]
        rk = M[k]
        for i in range(k + 1, n):
            ri = M[i]
            mik = ri[k]
            for j in range(k + 1, n):
                ri[j] = (pk * ri[j] - mik * rk[j]) // prev
            ri[k] = 0
        prev = pk
    return sign * M[n - 1][n - 1]


def sylvester_matrix(p: Sequence, q: Sequence) -> list[list]:
    """Sylvester matrix of two univariate coefficient lists (ascending)."""
    m, n = len(p) - 1, len(q) - 1
    size = m + n
    rows = []
    for i in range(n):
        row = [0] * size
        for k, c in enumerate(reversed(p)):
            row[i + k] = c
        rows.append(row)
    for i in range(m):
        row = [0] * size
        for k, c in enumerate(reversed(q)):
            row[i + k] = c
        rows.append(row)
    return rows


def univariate_resultant(p: UniPoly, q: UniPoly) -> Fraction:
    if p.degree <= 0 or q.degree <= 0:
        if p.is_zero() or q.is_zero():
            return Fraction(0)
        return (p.lead ** max(q.degree, 0)) * (q.lead ** max(p.degree, 0))
    dp = math.lcm(*(c.denominator for c in p.coeffs))
    dq = math.lcm(*(c.denominator for c in q.coeffs))
    pi = [int(c * dp) for c in p.coeffs]
    qi = [int(c * dq) for c in q.coeffs]
    det = _int_det(sylvester_matrix(pi, qi))
    return Fraction(det) / (Fraction(dp) ** q.degree * Fraction(dq) ** p.degree)


def _interpolate(xs: list[int], ys: list[Fraction]) -> UniPoly:
    """Newton divided differences, exact."""
    n = len(xs)
    coef = list(ys)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            coef[i] = (coef[i] - coef[i - 1]) / (xs[i] - xs[i - j])
    p = UniPoly([coef[-1]])
    for i in range(n - 2, -1, -1):
        p = p * UniPoly([-xs[i], 1]) + UniPoly([coef[i]])
    return p


def resultant(f: BiPoly, g: BiPoly, eliminate: str = "z2") -> UniPoly:
    """Res(f, g) with respect to ``eliminate``, as a polynomial in the other
    variable.  Computed exactly by evaluation at integer points and
    interpolation; the Sylvester structure is kept generic by using the
    formal leading coefficients (points where they vanish are skipped)."""
    if f.is_zero() or g.is_zero():
        raise ValueError("resultant of a zero polynomial")
    if eliminate == "z1":
        f, g = f.swap(), g.swap()
    m, n = f.degree_in("z2"), g.degree_in("z2")
    lf = UniPoly([row[m] for row in f.coeffs])
    lg = UniPoly([row[n] for row in g.coeffs])
    if m == 0 and n == 0:
        return UniPoly([1])
    bound = f.total_degree * g.total_degree if m and n else (
        f.degree_in("z1") * n + g.degree_in("z1") * m)
    xs, ys = [], []
    k = 0
    while len(xs) < bound + 1:
        x = (k + 1) // 2 * (1 if k % 2 else -1)
        k += 1
        if lf(Fraction(x)) == 0 or lg(Fraction(x)) == 0:
            continue
        xs.append(x)
        ys.append(univariate_resultant(f.in_z2_at(x), g.in_z2_at(x)))
    return _interpolate(xs, ys)


def deflate_root(p: UniPoly, r) -> tuple[UniPoly, int]:
    """Remove the exact factor (z - r)^k; returns (quotient, k)."""
    lin = UniPoly([-_frac(r), 1])
    k = 0
    while p.degree > 0:
        q, rem = p.divmod(lin)
        if not rem.is_zero():
            break
        p, k = q, k + 1
    return p, k


def real_roots_checked(p: UniPoly, lo=-math.inf, hi=math.inf, tol: float = 1e-12,
                       exact_fallback: bool = True) -> list[Root]:
    """isolate_and_refine that reports failure as IllConditioned."""
    try:
        return isolate_and_refine(p, lo, hi, tol, exact_fallback)
    except AmbiguousSign as exc:
        raise IllConditioned(str(exc), partial=[]) from exc

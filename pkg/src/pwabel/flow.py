"""Integration of x' = a(t)|x| + b(t) with located sign crossings.

On each stretch of constant sign s the equation is the linear ODE
x' = s a(t) x + b(t).  We advance it with an adaptive DOP853 step, watch
every accepted step for a sign change (endpoint test plus a Hermite
interpolant for dips inside the step) and pin the crossing time by an
Illinois iteration on the step map itself.  At a crossing the state is
reset to exactly 0 and the branch is chosen from the sign of b there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _dop

from .errors import StepFailure
from .trigpoly import TWO_PI, TrigPoly, changes_sign, eval_tp, integrate, zeros_in_period

_NS = _dop.N_STAGES
_A = np.ascontiguousarray(_dop.A[:_NS, :_NS])
_B = np.ascontiguousarray(_dop.B)
_C = np.ascontiguousarray(_dop.C[:_NS])
_E3 = np.ascontiguousarray(_dop.E3)
_E5 = np.ascontiguousarray(_dop.E5)

OK, STOPPED, FAILED = 0, 1, 2


@dataclass(frozen=True)
class Tolerances:
    rtol: float = 1e-10
    atol: float = 1e-12
    event_tol: float = 1e-12
    max_steps: int = 200_000

    def halved(self) -> "Tolerances":
        return Tolerances(self.rtol / 2, self.atol / 2, self.event_tol / 2, self.max_steps)


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class AbelEq:
    """x' = a(t)|x| + b(t) with linear trigonometric a and b."""

    a: TrigPoly
    b: TrigPoly

    @classmethod
    def from_coeffs(cls, a, b) -> "AbelEq":
        return cls(TrigPoly.from_seq(a), TrigPoly.from_seq(b))

    @property
    def a0(self) -> float:
        return self.a.c0

    @property
    def r1(self) -> Optional[float]:
        return self.a.c1 / self.a.c0 if self.a.c0 != 0.0 else None

    @property
    def r2(self) -> Optional[float]:
        return self.a.c2 / self.a.c0 if self.a.c0 != 0.0 else None

    @property
    def c(self) -> float:
        return math.exp(math.pi * self.a.c0)

    @property
    def tbar(self) -> Optional[float]:
        """Zero of b in (0, 2 pi) when b(0) = 0, b'(0) > 0; else None."""
        if not changes_sign(self.b):
            return None
        zs = [z.t for z in zeros_in_period(self.b) if z.t > 1e-12]
        return zs[0] if zs else None

    def field(self, t, x):
        return eval_tp(self.a, t) * np.abs(x) + eval_tp(self.b, t)

    def reversed(self) -> "AbelEq":
        """Equation for v(s) = u(-s)."""
        return AbelEq(-self.a.reflect(), -self.b.reflect())

    def coeff_arrays(self):
        return (np.array(self.a.as_tuple(), dtype=np.float64),
                np.array(self.b.as_tuple(), dtype=np.float64))


# --------------------------------------------------------------------------
# compiled kernels


GROW_MAX = 2.0
H_MAX = 0.5


@njit(cache=True)
def _field(t, x, s, a, b):
    ct = math.cos(t)
    st = math.sin(t)
    return s * (a[0] + a[1] * ct + a[2] * st) * x + b[0] + b[1] * ct + b[2] * st


@njit(cache=True)
def _step(t, x, f0, h, s, a, b, K):
    K[0] = f0
    for i in range(1, _NS):
        dx = 0.0
        for j in range(i):
            dx += _A[i, j] * K[j]
        K[i] = _field(t + _C[i] * h, x + h * dx, s, a, b)
    acc = 0.0
    for j in range(_NS):
        acc += _B[j] * K[j]
    xn = x + h * acc
    K[_NS] = _field(t + h, xn, s, a, b)
    return xn


@njit(cache=True)
def _err_norm(x, xn, h, rtol, atol, K):
    scale = atol + rtol * max(abs(x), abs(xn))
    e5 = 0.0
    e3 = 0.0
    for j in range(_NS + 1):
        e5 += _E5[j] * K[j]
        e3 += _E3[j] * K[j]
    e5 /= scale
    e3 /= scale
    e5 *= e5
    e3 *= e3
    if e5 == 0.0 and e3 == 0.0:
        return 0.0
    return abs(h) * e5 / math.sqrt(e5 + 0.01 * e3)


@njit(cache=True)
def _branch_sign(t, s_prev, a, b):
    # direction a solution leaves x = 0 at time t
    bv = b[0] + b[1] * math.cos(t) + b[2] * math.sin(t)
    amp = abs(b[0]) + abs(b[1]) + abs(b[2])
    if abs(bv) > 1e-13 * (1.0 + amp):
        return 1.0 if bv > 0.0 else -1.0
    db = -b[1] * math.sin(t) + b[2] * math.cos(t)
    if db != 0.0:
        return 1.0 if db > 0.0 else -1.0
    return s_prev


@njit(cache=True)
def _hermite(theta, x0, x1, d0, d1):
    # d0, d1 are h * slope
    t2 = theta * theta
    t3 = t2 * theta
    return ((2 * t3 - 3 * t2 + 1) * x0 + (t3 - 2 * t2 + theta) * d0
            + (-2 * t3 + 3 * t2) * x1 + (t3 - t2) * d1)


@njit(cache=True)
def _hermite_extremum(x0, x1, d0, d1, s):
    """theta in (0,1) minimising s * interpolant, or -1 if at an endpoint."""
    # derivative: c2 th^2 + c1 th + c0
    c2 = 6 * x0 + 3 * d0 - 6 * x1 + 3 * d1
    c1 = -6 * x0 - 4 * d0 + 6 * x1 - 2 * d1
    c0 = d0
    best = -1.0
    bestv = 1e300
    roots = np.empty(2)
    nr = 0
    if abs(c2) < 1e-300:
        if c1 != 0.0:
            roots[0] = -c0 / c1
            nr = 1
    else:
        disc = c1 * c1 - 4 * c2 * c0
        if disc >= 0.0:
            sq = math.sqrt(disc)
            q = -0.5 * (c1 + math.copysign(sq, c1))
            roots[0] = q / c2
            nr = 1
            if q != 0.0:
                roots[1] = c0 / q
                nr = 2
    for k in range(nr):
        th = roots[k]
        if 0.0 < th < 1.0:
            v = s * _hermite(th, x0, x1, d0, d1)
            if v < bestv:
                bestv = v
                best = th
    return best


@njit(cache=True)
def _locate(t, x, f0, h, s, a, b, K, lo, hi, glo, ghi, etol):
    """Illinois iteration for the zero of theta -> s * step(theta h)."""
    side = 0
    th = lo
    for it in range(200):
        if (hi - lo) * abs(h) < etol:
            break
        if it % 8 == 7:
            th = 0.5 * (lo + hi)
        else:
            th = (lo * ghi - hi * glo) / (ghi - glo)
            if not (lo < th < hi):
                th = 0.5 * (lo + hi)
        g = s * _step(t, x, f0, th * h, s, a, b, K)
        if g > 0.0:
            lo = th
            glo = g
            if side == 1:
                ghi *= 0.5
            side = 1
        elif g < 0.0:
            hi = th
            ghi = g
            if side == -1:
                glo *= 0.5
            side = -1
        else:
            return th
    # the left end keeps the current sign, so report it
    return lo if glo < -ghi else hi


@njit(cache=True)
def _flow(a, b, tau, x0, t_end, rtol, atol, etol, h0, max_steps, max_cross,
          rec_t, rec_x, rec_f, cross_t, cross_d):
    K = np.empty(_NS + 1)
    cap = rec_t.shape[0]
    t = tau
    x = x0
    if x > 0.0:
        s = 1.0
    elif x < 0.0:
        s = -1.0
    else:
        s = _branch_sign(t, 1.0, a, b)
    s_init = s
    f = _field(t, x, s, a, b)
    h = h0 if h0 > 0.0 else 0.05
    n_rec = 0
    if cap > 0:
        rec_t[0] = t
        rec_x[0] = x
        rec_f[0] = f
        n_rec = 1
    n_cross = 0
    n_steps = 0
    status = OK
    while t < t_end:
        if n_steps >= max_steps:
            status = FAILED
            break
        rem = t_end - t
        last = h >= rem
        hh = rem if last else h
        xn = _step(t, x, f, hh, s, a, b, K)
        err = _err_norm(x, xn, hh, rtol, atol, K)
        if not err <= 1.0:
            if err != err:
                h = hh * 0.1
            else:
                h = hh * max(0.2, 0.9 * err ** (-0.125))
            if h < 1e-15 * (1.0 + abs(t)):
                status = FAILED
                break
            continue
        n_steps += 1
        fn = K[_NS]
        theta = -1.0
        lo = 0.0
        glo = s * x
        sxn = s * xn
        if sxn < 0.0:
            if glo > 0.0:
                theta = 1.0
            else:
                # started on x = 0: need an interior point on the s side
                th = _hermite_extremum(x, xn, hh * f, hh * fn, -s)
                g = -1.0
                if th > 0.0:
                    g = s * _step(t, x, f, th * hh, s, a, b, K)
                if g > 0.0:
                    lo = th
                    glo = g
                    theta = 1.0
                elif hh > 1e-9:
                    h = hh * 0.25
                    continue
                else:
                    # the excursion is below resolution: treat as immediate switch
                    theta = 0.0
        elif glo > 0.0 and s * f < 0.0 and s * fn > 0.0:
            th = _hermite_extremum(x, xn, hh * f, hh * fn, s)
            if th > 0.0 and s * _hermite(th, x, xn, hh * f, hh * fn) < 0.0:
                g = s * _step(t, x, f, th * hh, s, a, b, K)
                if g < 0.0:
                    theta = th
                elif hh > 1e-6:
                    h = hh * 0.5
                    continue
        if theta >= 0.0:
            if theta > 0.0:
                ghi = s * _step(t, x, f, theta * hh, s, a, b, K)
                th = _locate(t, x, f, hh, s, a, b, K, lo, theta, glo, ghi, etol)
            else:
                th = 0.0
            tc = t + th * hh
            if theta == 0.0:
                s_new = -s
            else:
                s_new = _branch_sign(tc, -s, a, b)
            t = tc
            x = 0.0
            if s_new != s:
                if n_cross < cross_t.shape[0]:
                    cross_t[n_cross] = tc
                    cross_d[n_cross] = s_new
                n_cross += 1
                s = s_new
            f = _field(t, x, s, a, b)
            if n_rec < cap:
                rec_t[n_rec] = t
                rec_x[n_rec] = x
                rec_f[n_rec] = f
                n_rec += 1
            if max_cross >= 0 and n_cross >= max_cross:
                status = STOPPED
                break
            continue
        t = t_end if last else t + hh
        x = xn
        f = fn
        if n_rec < cap:
            rec_t[n_rec] = t
            rec_x[n_rec] = x
            rec_f[n_rec] = f
            n_rec += 1
        if not last:
            # the embedded estimate can cancel by chance, so growth is capped
            # and no step spans more than H_MAX of the 2 pi period
            h = hh * min(GROW_MAX, max(0.2, 0.9 * err ** (-0.125))) if err > 0 else hh * GROW_MAX
            h = min(h, H_MAX)
    return n_rec, n_cross, t, x, s, s_init, status


@njit(cache=True)
def _first_crossing_batch(a, b, t0s, x0s, t_end, rtol, atol, etol, max_steps):
    n = t0s.shape[0]
    out = np.empty(n)
    dummy = np.empty(0)
    ct = np.empty(1)
    cd = np.empty(1)
    for i in range(n):
        _, nc, tf, _, _, _, st = _flow(a, b, t0s[i], x0s[i], t_end, rtol, atol, etol,
                                       0.05, max_steps, 1, dummy, dummy, dummy, ct, cd)
        if st == FAILED:
            out[i] = -1.0
        elif nc >= 1:
            out[i] = ct[0]
        else:
            out[i] = np.nan
    return out


@njit(cache=True)
def _final_values(a, b, t0, x0s, t_end, rtol, atol, etol, max_steps):
    n = x0s.shape[0]
    out = np.empty(n)
    dummy = np.empty(0)
    ct = np.empty(0)
    cd = np.empty(0)
    for i in range(n):
        _, _, _, xf, _, _, st = _flow(a, b, t0, x0s[i], t_end, rtol, atol, etol,
                                      0.05, max_steps, -1, dummy, dummy, dummy, ct, cd)
        out[i] = xf if st != FAILED else np.nan
    return out


# --------------------------------------------------------------------------
# python surface


@dataclass(frozen=True)
class Trajectory:
    tau: float
    x0: float
    t_end: float
    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    slopes: np.ndarray = field(repr=False)
    crossings: tuple  # ((time, new_sign), ...)
    initial_sign: float
    final_sign: float

    @property
    def final(self) -> float:
        return float(self.values[-1])

    @property
    def crossing_times(self) -> list[float]:
        return [c[0] for c in self.crossings]

    def sample(self, t):
        """Cubic Hermite dense output."""
        t = np.asarray(t, dtype=float)
        ts = self.times
        i = np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(ts) - 2)
        h = ts[i + 1] - ts[i]
        safe = np.where(h > 0, h, 1.0)
        th = np.where(h > 0, (t - ts[i]) / safe, 0.0)
        return _hermite_vec(th, self.values[i], self.values[i + 1],
                            h * self.slopes[i], h * self.slopes[i + 1])

    def pieces(self):
        """(start, end, sign) for each constant-sign stretch."""
        bounds = [self.tau] + self.crossing_times + [self.t_end]
        s = self.initial_sign
        out = []
        for k in range(len(bounds) - 1):
            out.append((bounds[k], bounds[k + 1], s))
            if k < len(self.crossings):
                s = self.crossings[k][1]
        return out


def _hermite_vec(th, x0, x1, d0, d1):
    t2 = th * th
    t3 = t2 * th
    return ((2 * t3 - 3 * t2 + 1) * x0 + (t3 - 2 * t2 + th) * d0
            + (-2 * t3 + 3 * t2) * x1 + (t3 - t2) * d1)


def integrate_flow(eq: AbelEq, tau: float, x0: float, t_end: float,
                   tol: Tolerances = DEFAULT_TOL, *, max_crossings: int = -1,
                   first_step: float = 0.05) -> Trajectory:
    """Solve u(tau) = x0 forward to ``t_end`` (stops early after ``max_crossings``)."""
    if not t_end > tau:
        raise ValueError("t_end must exceed tau")
    a, b = eq.coeff_arrays()
    cap = tol.max_steps + 64
    rt, rx, rf = np.empty(cap), np.empty(cap), np.empty(cap)
    ncap = 64 if max_crossings < 0 else max(max_crossings, 1)
    ct, cd = np.empty(ncap), np.empty(ncap)
    n_rec, n_cross, tf, xf, s, s0, status = _flow(
        a, b, float(tau), float(x0), float(t_end), tol.rtol, tol.atol, tol.event_tol,
        float(first_step), tol.max_steps, max_crossings, rt, rx, rf, ct, cd)
    if status == FAILED:
        raise StepFailure(f"step control failed near t={tf:.6g}")
    crossings = tuple((float(ct[k]), float(cd[k])) for k in range(min(n_cross, ncap)))
    return Trajectory(float(tau), float(x0), float(tf), rt[:n_rec].copy(), rx[:n_rec].copy(),
                      rf[:n_rec].copy(), crossings, float(s0), float(s))


def multiplier(eq: AbelEq, traj: Trajectory) -> float:
    """exp of the integral of sign(u) a(s) along ``traj``, piecewise in closed form."""
    total = sum(s * integrate(eq.a, t0, t1) for t0, t1, s in traj.pieces())
    return math.exp(total)


def period_map(eq: AbelEq, x0s, tol: Tolerances = DEFAULT_TOL, tau: float = 0.0) -> np.ndarray:
    """u(tau + 2 pi, tau, x0) for an array of x0."""
    a, b = eq.coeff_arrays()
    x0s = np.atleast_1d(np.asarray(x0s, dtype=float))
    out = _final_values(a, b, float(tau), x0s, float(tau) + TWO_PI, tol.rtol, tol.atol,
                        tol.event_tol, tol.max_steps)
    if np.isnan(out).any():
        raise StepFailure("step control failed in period map")
    return out


def first_crossings(eq: AbelEq, t0s, x0s, t_end: float,
                    tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """First sign-change time after each (t0, x0), NaN if none before ``t_end``."""
    a, b = eq.coeff_arrays()
    t0s = np.ascontiguousarray(np.atleast_1d(t0s), dtype=float)
    x0s = np.ascontiguousarray(np.broadcast_to(x0s, t0s.shape), dtype=float)
    out = _first_crossing_batch(a, b, t0s, x0s, float(t_end), tol.rtol, tol.atol,
                                tol.event_tol, tol.max_steps)
    if (out == -1.0).any():
        raise StepFailure("step control failed while locating crossings")
    return out

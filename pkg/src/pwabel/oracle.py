"""Brute-force periodic solution counter, independent of the ODE integrator.

On an interval where the solution keeps the sign s it is explicit:

    u(t) = exp(s (P(t) - P(tau))) * W(t),
    W(t) = u(tau) + exp(s P(tau)) * (K_s(t) - K_s(tau)),

with P' = a and K_s(t) = int_0^t b exp(-s P).  A sign change happens where
W vanishes.  P and K_s are tabulated by composite Gauss-Legendre panels
(nested Gauss for P), so the only numerics here are fixed-order
quadrature and bracketing, not adaptive time stepping.  Coefficients may be
any smooth 2 pi periodic vectorized callables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import WindowTooSmall

TWO_PI = 2.0 * math.pi
_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def _trig(c) -> Callable:
    c0, c1, c2 = (float(v) for v in c)
    return lambda t: c0 + c1 * np.cos(t) + c2 * np.sin(t)


@dataclass
class Coefficients:
    """a(t), b(t) as vectorized callables plus magnitude bounds."""

    a: Callable
    b: Callable
    amax: float
    bmax: float

    @classmethod
    def from_eq(cls, eq) -> "Coefficients":
        a, b = eq.a.as_tuple(), eq.b.as_tuple()
        return cls(_trig(a), _trig(b), abs(a[0]) + math.hypot(a[1], a[2]),
                   abs(b[0]) + math.hypot(b[1], b[2]))

    @classmethod
    def from_callables(cls, a: Callable, b: Callable, samples: int = 4096) -> "Coefficients":
        ts = np.linspace(0.0, TWO_PI, samples, endpoint=False)
        return cls(a, b, float(np.max(np.abs(a(ts)))) * 1.01, float(np.max(np.abs(b(ts)))) * 1.01)


def _gauss(fn, lo, hi):
    """Order-10 Gauss-Legendre over [lo, hi] (arrays broadcast)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[..., None] + half[..., None] * _GL_X
    return half * (fn(nodes) @ _GL_W)


class Tables:
    """P, K_+ and K_- at panel edges on [0, span]."""

    def __init__(self, co: Coefficients, span: float = TWO_PI, panels: int = 1024):
        self.co = co
        self.edges = np.linspace(0.0, span, panels + 1)
        self.h = self.edges[1] - self.edges[0]
        e = self.edges
        self.P = np.concatenate([[0.0], np.cumsum(_gauss(co.a, e[:-1], e[1:]))])
        self.K = {}
        for s in (1.0, -1.0):
            inc = _gauss(lambda r, s=s: co.b(r) * np.exp(-s * self.Pat(r)), e[:-1], e[1:])
            self.K[s] = np.concatenate([[0.0], np.cumsum(inc)])

    def _panel(self, t):
        k = np.floor(np.asarray(t, dtype=float) / self.h).astype(int)
        return np.clip(k, 0, len(self.edges) - 2)

    def Pat(self, t):
        """P(t) = int_0^t a, by a nested Gauss rule inside the panel."""
        t = np.asarray(t, dtype=float)
        k = self._panel(t)
        return self.P[k] + _gauss(self.co.a, self.edges[k], t)

    def Kat(self, s: float, t):
        t = np.asarray(t, dtype=float)
        k = self._panel(t)
        return self.K[s][k] + _gauss(lambda r: self.co.b(r) * np.exp(-s * self.Pat(r)),
                                     self.edges[k], t)


def _sign_of_b(co: Coefficients, t, fallback):
    bv = co.b(t)
    d = co.b(t + 1e-7) - co.b(t - 1e-7)
    return np.where(np.abs(bv) > 1e-13, np.sign(bv), np.where(d != 0, np.sign(d), fallback))


def period_values(tab: Tables, x0s, t_end: float = TWO_PI, max_pieces: int = 64) -> np.ndarray:
    """u(t_end) for u(0) = x0, all x0 at once."""
    x0s = np.asarray(x0s, dtype=float)
    n = x0s.size
    co = tab.co
    tau = np.zeros(n)
    xt = x0s.copy()
    s = np.where(xt > 0, 1.0, np.where(xt < 0, -1.0, _sign_of_b(co, np.zeros(n), 1.0)))
    done = np.zeros(n, bool)
    out = np.empty(n)
    edges = tab.edges
    kend = int(np.searchsorted(edges, t_end - 1e-15))
    for _ in range(max_pieces):
        act = np.nonzero(~done)[0]
        if act.size == 0:
            break
        for sv in (1.0, -1.0):
            idx = act[s[act] == sv]
            if idx.size == 0:
                continue
            Ptau = tab.Pat(tau[idx])
            Ktau = tab.Kat(sv, tau[idx])
            scale = np.exp(sv * Ptau)
            # W at every later panel edge (first edge strictly after tau)
            W = xt[idx, None] + scale[:, None] * (tab.K[sv][None, : kend + 1] - Ktau[:, None])
            after = edges[None, : kend + 1] > tau[idx, None] + 1e-14
            crossing = (sv * W <= 0.0) & after
            has = crossing.any(axis=1)
            first = np.where(has, crossing.argmax(axis=1), -1)
            # finish: no sign change before t_end
            fin = idx[~has]
            if fin.size:
                Wend = xt[fin] + np.exp(sv * tab.Pat(tau[fin])) * (tab.Kat(sv, np.full(fin.size, t_end))
                                                                     - tab.Kat(sv, tau[fin]))
                Pend = tab.Pat(np.full(fin.size, t_end))
                out[fin] = np.exp(sv * (Pend - tab.Pat(tau[fin]))) * Wend
                done[fin] = True
            cr = np.nonzero(has)[0]
            if cr.size == 0:
                continue
            j = idx[cr]
            k = first[cr]
            lo = np.maximum(edges[np.maximum(k - 1, 0)], tau[j])
            hi = edges[k]
            sc, kt, x_ = scale[cr], Ktau[cr], xt[j]

            def Wf(t):
                return x_ + sc * (tab.Kat(sv, t) - kt)

            for _ in range(64):
                mid = 0.5 * (lo + hi)
                pos = sv * Wf(mid) > 0.0
                lo = np.where(pos, mid, lo)
                hi = np.where(pos, hi, mid)
            tc = hi
            tau[j] = tc
            xt[j] = 0.0
            s[j] = -sv
            past = tc >= t_end
            out[j[past]] = 0.0
            done[j[past]] = True
    if not done.all():
        out[~done] = np.nan
    return out


@dataclass(frozen=True)
class BruteResult:
    count: int
    x0s: tuple
    continuum: bool
    continuum_ranges: tuple = ()
    window: tuple = ()

    def to_dict(self) -> dict:
        return {"count": self.count, "x0": list(self.x0s), "continuum": self.continuum,
                "continuum_ranges": [list(r) for r in self.continuum_ranges],
                "window": list(self.window)}


def gronwall_window(co: Coefficients) -> float:
    return TWO_PI * co.bmax * math.exp(TWO_PI * co.amax)


def _thresholds(tab: Tables) -> tuple[float, float, float, float, float, float]:
    """Sign thresholds and affine constants from the tables alone."""
    e = tab.edges
    k2 = int(np.searchsorted(e, TWO_PI - 1e-12))
    P2 = tab.P[k2]
    A = math.exp(P2)
    B = A * tab.K[1.0][k2]
    Bbar = math.exp(-P2) * tab.K[-1.0][k2]
    # solution positive for all t iff x0 + K_+(t) >= 0 (since P(0) = 0)
    xp = max(0.0, -float(tab.K[1.0][: k2 + 1].min()))
    xm = min(0.0, -float(tab.K[-1.0][: k2 + 1].max()))
    return xm, xp, A, B, 1.0 / A, Bbar


def brute_count(eq=None, x_window: Optional[tuple] = None, grid: int = 4096, tol: float = 1e-9,
                a: Optional[Callable] = None, b: Optional[Callable] = None,
                panels: int = 1024) -> BruteResult:
    """Count zeros of x -> u(2 pi, 0, x) - x on a dense grid over x_window.

    Pass either a degree-1 equation ``eq`` or vectorized callables ``a``, ``b``.
    Zeros are bracketed by sign changes and bisected; runs where |d| stays
    at rounding level are reported as a suspected continuum instead.
    """
    co = Coefficients.from_eq(eq) if eq is not None else Coefficients.from_callables(a, b)
    tab = Tables(co, TWO_PI, panels)
    xm, xp, A, B, Abar, Bbar = _thresholds(tab)
    W = gronwall_window(co)
    if x_window is None:
        # W is not an a priori bound when int a is near zero: the affine
        # branches then have fixed points of size |B / (1 - A)|, so the
        # default window is widened to contain them
        lo, hi = -W, W
        for Ak, Bk, sgn in ((A, B, 1.0), (Abar, Bbar, -1.0)):
            if abs(Ak - 1.0) > 1e-12:
                xs = Bk / (1.0 - Ak)
                if sgn * xs > 0:
                    lo, hi = min(lo, 1.5 * xs), max(hi, 1.5 * xs)
    else:
        lo, hi = x_window
    if lo > xm or hi < xp:
        raise WindowTooSmall(f"window must contain the sign thresholds [{xm:.6g}, {xp:.6g}]")
    for Ak, Bk, sgn in ((A, B, 1.0), (Abar, Bbar, -1.0)):
        if abs(Ak - 1.0) > 1e-12:
            xs = Bk / (1.0 - Ak)
            if sgn * xs > 0 and not (lo <= xs <= hi):
                raise WindowTooSmall(f"affine fixed point {xs:.6g} outside the window")
    # sinh spacing (fine near zero, geometric far out) merged with a uniform
    # grid across the thresholds, where the displacement is not affine
    ulo, uhi = math.asinh(lo), math.asinh(hi)
    core = np.linspace(max(lo, xm - 1.0), min(hi, xp + 1.0), grid)
    xs = np.unique(np.concatenate([np.sinh(np.linspace(ulo, uhi, grid)), core]))
    grid = xs.size
    d = period_values(tab, xs) - xs
    # rounding level of d = u - x; a continuum needs A = 1, so no slope factor
    tiny = tol * (1.0 + np.abs(xs) + np.abs(d + xs))
    flat = np.abs(d) <= tiny
    # continuum: three or more consecutive flat samples
    runs = []
    i = 0
    while i < grid:
        if flat[i]:
            j = i
            while j + 1 < grid and flat[j + 1]:
                j += 1
            if j - i + 1 >= 3:
                runs.append((i, j))
            i = j + 1
        else:
            i += 1
    in_run = np.zeros(grid, bool)
    for i, j in runs:
        in_run[i : j + 1] = True

    def dfun(x):
        return float(period_values(tab, np.array([x]))[0] - x)

    roots = []
    for i in range(grid - 1):
        if in_run[i] or in_run[i + 1]:
            continue
        if d[i] == 0.0:
            roots.append(float(xs[i]))
            continue
        if d[i] * d[i + 1] < 0.0:
            a_, b_, fa = xs[i], xs[i + 1], d[i]
            for _ in range(200):
                m = 0.5 * (a_ + b_)
                if m == a_ or m == b_ or b_ - a_ <= tol * (1.0 + abs(m)) * 1e-3:
                    break
                fm = dfun(m)
                if fm == 0.0:
                    a_ = b_ = m
                    break
                if (fm > 0) == (fa > 0):
                    a_, fa = m, fm
                else:
                    b_ = m
            roots.append(0.5 * (a_ + b_))
    ranges = tuple((float(xs[i]), float(xs[j])) for i, j in runs)
    return BruteResult(len(roots), tuple(roots), bool(runs), ranges, (lo, hi))


def _local_primitive(tab: Tables, s: float, t0: float, end: float):
    """G(t) = int_{t0}^t b exp(-s (P(r) - P(t0))) dr for t between t0 and end.

    Anchoring at t0 (rather than differencing K_s) avoids cancelling large
    accumulated values when exp(-s P) varies by many orders of magnitude.
    Returns a pointwise evaluator.
    """
    co = tab.co
    p0 = float(tab.Pat(np.array([t0]))[0])
    f = lambda r: co.b(r) * np.exp(-s * (tab.Pat(r) - p0))
    h = tab.h
    n = max(1, int(math.ceil(abs(end - t0) / h)))
    knots = np.linspace(t0, end, n + 1)
    step = (end - t0) / n
    G = np.concatenate([[0.0], np.cumsum(_gauss(f, knots[:-1], knots[1:]))])

    def at(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k = np.clip(np.floor((t - t0) / step).astype(int), 0, n - 1)
        return G[k] + _gauss(f, knots[k], t)

    return at


def _bisect(g, a_, b_, iters: int = 80) -> float:
    """Root of g between a_ (where sign(g) = sign(g(a_))) and b_."""
    sa = g(a_)[0] > 0.0
    for _ in range(iters):
        m = 0.5 * (a_ + b_)
        if m == a_ or m == b_:
            break
        if (g(m)[0] > 0.0) == sa:
            a_ = m
        else:
            b_ = m
    return 0.5 * (a_ + b_)


def brute_half_map(eq, t1: float, side: str = "plus", panels: int = 2048) -> Optional[float]:
    """T+ (T-) by solving int_{t1}^{t2} b exp(int_t^{t2} a) dt = 0 for t2.

    ``eq`` must be normalized (b vanishes at 0 and at tbar, positive between).
    """
    co = Coefficients.from_eq(eq)
    tab = Tables(co, 2.0 * TWO_PI, panels)
    b0 = eq.b.c0
    tbar = 2.0 * math.atan2(1.0, -b0)
    grid_t = np.linspace(tbar, TWO_PI, max(2, int(math.ceil((TWO_PI - tbar) / tab.h)) + 1))
    if side == "plus":
        # u(t) = exp(P(t) - P(t1)) G(t): first zero after t1, inside (tbar, 2 pi)
        at = _local_primitive(tab, 1.0, t1, TWO_PI)
        gv = at(grid_t)
        idx = np.nonzero(gv[1:] <= 0.0)[0]
        if idx.size == 0:
            return None
        i = idx[0]
        return _bisect(at, grid_t[i], grid_t[i + 1])
    # minus: negative excursion ending at tau = t1 + 2 pi.  With G anchored at
    # tau, u(t) = exp(P(tau) - P(t)) G(t), so u < 0 exactly where G < 0;
    # scan backwards from 2 pi for the first t with G >= 0
    tau = t1 + TWO_PI
    at = _local_primitive(tab, -1.0, tau, tbar)
    grid_t = grid_t[::-1]
    gv = at(grid_t)
    idx = np.nonzero(gv[1:] >= 0.0)[0]
    if idx.size == 0:
        return None
    i = idx[0]
    return _bisect(at, grid_t[i], grid_t[i + 1])

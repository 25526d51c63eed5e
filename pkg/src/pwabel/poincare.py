"""Displacement map, Poincare half-maps and the limit-cycle finder.

Constant-sign periodic solutions come from the two affine displacement
maps (A - 1) x + B and (Abar - 1) x + Bbar.  Sign-changing ones are the
zeros of Delta(t) = T+(t) - T-(t) on (0, tbar) for the normalized
equation, where T+ (T-) is the first (last) return to x = 0 of the
solution vanishing at t (at t + 2 pi).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import integrate as sint
from scipy import optimize

from .errors import UnresolvedRoot
from .flow import (DEFAULT_TOL, AbelEq, Tolerances, first_crossings, integrate_flow,
                   multiplier, period_map)
from .trigpoly import TWO_PI, NormalizedForm, changes_sign, eval_tp, integrate, normalize

POSITIVE, NEGATIVE, SIGN_CHANGING, ZERO = "positive", "negative", "sign_changing", "zero"
FINITE, CENTER = "finite", "center"

TIGHT_TOL = Tolerances(rtol=1e-12, atol=1e-14, event_tol=1e-13)


@dataclass(frozen=True)
class LinearConstants:
    A: float
    B: float
    Abar: float
    Bbar: float


@dataclass(frozen=True)
class Cycle:
    x0: float
    sign_class: str
    crossings: Optional[tuple] = None  # (t1, t2) in normalized time
    multiplier: float = float("nan")
    hyperbolic: bool = True
    residual: float = float("nan")

    def to_dict(self) -> dict:
        return {"x0": self.x0, "sign_class": self.sign_class,
                "crossings": list(self.crossings) if self.crossings else None,
                "multiplier": self.multiplier, "hyperbolic": self.hyperbolic,
                "residual": self.residual}


@dataclass(frozen=True)
class SearchConfig:
    grid: int = 512
    edge: float = 1e-4
    root_tol: float = 1e-10
    tangent_tol: float = 1e-7
    probe_points: int = 32
    center_tol: float = 1e-9
    validate_tol: float = 1e-8
    mult_tol: float = 1e-6
    tol: Tolerances = DEFAULT_TOL


@dataclass(frozen=True)
class CycleReport:
    kind: str
    cycles: tuple = ()
    center_class: object = None
    normalization: Optional[NormalizedForm] = None
    unresolved: tuple = ()
    suspected_center: bool = False
    diagnostics: dict = field(default_factory=dict)

    def count(self, sign_class: Optional[str] = None) -> int:
        if sign_class is None:
            return len(self.cycles)
        return sum(1 for c in self.cycles if c.sign_class == sign_class)

    @property
    def n_sign_changing(self) -> int:
        return self.count(SIGN_CHANGING)

    @property
    def n_constant_sign(self) -> int:
        return len(self.cycles) - self.n_sign_changing


# --------------------------------------------------------------------------
# linear pieces


def linear_constants(eq: AbelEq) -> LinearConstants:
    """Coefficients of the affine displacement maps for x >> 0 and x << 0."""
    a0 = eq.a.c0
    A = math.exp(TWO_PI * a0)
    if eq.b.is_zero():
        return LinearConstants(A, 0.0, 1.0 / A, 0.0)
    P2 = integrate(eq.a, 0.0, TWO_PI)

    def weight(s, sign):
        return eval_tp(eq.b, s) * math.exp(sign * (P2 - eq.a.antiderivative(s) + eq.a.antiderivative(0.0)))

    pts = [z for z in np.linspace(0, TWO_PI, 9)[1:-1]]
    with warnings.catch_warnings():
        # cancellation in B for near-center data only affects the
        # attainable absolute accuracy, which quad still delivers
        warnings.simplefilter("ignore", sint.IntegrationWarning)
        B = sint.quad(weight, 0.0, TWO_PI, args=(1.0,), epsabs=1e-300, epsrel=1e-12,
                      limit=200, points=pts)[0]
        Bbar = sint.quad(weight, 0.0, TWO_PI, args=(-1.0,), epsabs=1e-300, epsrel=1e-12,
                         limit=200, points=pts)[0]
    return LinearConstants(A, B, 1.0 / A, Bbar)


def gronwall_bound(eq: AbelEq) -> float:
    amax = abs(eq.a.c0) + eq.a.amplitude
    bmax = abs(eq.b.c0) + eq.b.amplitude
    return TWO_PI * bmax * math.exp(TWO_PI * amax)


def sign_thresholds(eq: AbelEq, n: int = 4096) -> tuple[float, float]:
    """(x_minus, x_plus): solutions from x0 >= x_plus stay >= 0 over one
    period, those from x0 <= x_minus stay <= 0."""
    if eq.b.is_zero():
        return 0.0, 0.0
    nodes, weights = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(0.0, TWO_PI, n + 1)
    h = edges[1] - edges[0]
    r = edges[:-1, None] + 0.5 * h * (nodes[None, :] + 1.0)
    P = eq.a.antiderivative(r) - eq.a.antiderivative(0.0)
    br = eval_tp(eq.b, r)
    Jp = np.concatenate([[0.0], np.cumsum((br * np.exp(-P)) @ weights * 0.5 * h)])
    Jm = np.concatenate([[0.0], np.cumsum((br * np.exp(P)) @ weights * 0.5 * h)])
    return min(0.0, -float(Jm.max())), max(0.0, -float(Jp.min()))


def displacement(eq: AbelEq, x, tol: Tolerances = DEFAULT_TOL):
    """d(x) = u(2 pi, 0, x) - x (vectorized)."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if eq.b.is_zero():
        # u = x exp(+-int a): no sign change, closed form
        P2 = integrate(eq.a, 0.0, TWO_PI)
        out = xs * np.expm1(np.sign(xs) * P2)
    else:
        out = period_map(eq, xs, tol) - xs
    return float(out[0]) if np.ndim(x) == 0 else out


# --------------------------------------------------------------------------
# half maps (normalized equations: b(0) = 0, b'(0) > 0, tbar second zero)


def _tbar(eq: AbelEq) -> float:
    tb = eq.tbar
    if tb is None:
        raise ValueError("half maps need a normalized equation with sign-changing b")
    return tb


def half_map_plus(eq: AbelEq, t1s, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    tb = _tbar(eq)
    t1s = np.atleast_1d(np.asarray(t1s, dtype=float))
    out = first_crossings(eq, t1s, 0.0, TWO_PI, tol)
    out[~((out > tb) & (out < TWO_PI))] = np.nan
    return out


def half_map_minus(eq: AbelEq, t1s, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    tb = _tbar(eq)
    t1s = np.atleast_1d(np.asarray(t1s, dtype=float))
    # integrate backwards from t1 + 2 pi as v(s) = u(-s)
    s_hit = first_crossings(eq.reversed(), -(t1s + TWO_PI), 0.0, -tb, tol)
    out = -s_hit
    out[~((out > tb) & (out < TWO_PI))] = np.nan
    return out


def half_map(eq: AbelEq, t1: float, side: str = "plus",
             tol: Tolerances = DEFAULT_TOL) -> Optional[float]:
    fn = half_map_plus if side == "plus" else half_map_minus
    v = float(fn(eq, [t1], tol)[0])
    return None if math.isnan(v) else v


def delta(eq: AbelEq, t1s, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    return half_map_plus(eq, t1s, tol) - half_map_minus(eq, t1s, tol)


def _derivative(fn, t, h):
    """Five-point central difference with one Richardson step (error O(h^6))."""
    k = np.array([-2.0, -1.0, 1.0, 2.0])
    vals = fn(t + np.concatenate([k * h, k * (0.5 * h)]))
    w = np.array([1.0, -8.0, 8.0, -1.0])
    d1 = float(w @ vals[:4]) / (12 * h)
    d2 = float(w @ vals[4:]) / (6 * h)
    return (16.0 * d2 - d1) / 15.0


def half_map_derivative_residual(eq: AbelEq, t1: float, side: str = "plus",
                                 h: float = 1e-4, tol: Tolerances = TIGHT_TOL) -> float:
    """b(T) T' - b(t1) exp(+-int a) for T = T+ (side plus) or T- (minus).

    T' is a Richardson-extrapolated central difference, so this is a probe of the
    differential equations the half maps satisfy, not an exact identity.
    """
    if side == "plus":
        fn = lambda ts: half_map_plus(eq, ts, tol)
    else:
        fn = lambda ts: half_map_minus(eq, ts, tol)
    T = float(fn(np.array([t1]))[0])
    if math.isnan(T):
        raise ValueError("half map undefined at t1")
    dT = _derivative(fn, t1, h)
    if side == "plus":
        ex = math.exp(integrate(eq.a, t1, T))
    else:
        ex = math.exp(-integrate(eq.a, t1 + TWO_PI, T))
    return eval_tp(eq.b, T) * dT - eval_tp(eq.b, t1) * ex


# --------------------------------------------------------------------------
# classification


def classify_cycle(eq: AbelEq, cyc: Cycle, tol: Tolerances = DEFAULT_TOL,
                   mult_tol: float = 1e-6) -> Cycle:
    traj = integrate_flow(eq, 0.0, cyc.x0, TWO_PI, tol)
    mu = multiplier(eq, traj)
    # a repelling cycle amplifies the error in x0 by the multiplier
    scale = (1.0 + float(np.max(np.abs(traj.values)))) * max(1.0, mu)
    return replace(cyc, multiplier=mu, hyperbolic=abs(mu - 1.0) >= mult_tol,
                   residual=abs(traj.final - cyc.x0) / scale)


def polish_cycle(eq: AbelEq, x0: float, tol: Tolerances = DEFAULT_TOL, steps: int = 4) -> float:
    """Newton steps on d(x) = u(2 pi, 0, x) - x with d' = multiplier - 1.

    Recovering x0 by transporting a crossing time forward loses accuracy in
    proportion to the multiplier; a repelling cycle is well conditioned for
    Newton on d, so a few steps restore it. A step is kept only if it
    reduces |d|.
    """
    traj = integrate_flow(eq, 0.0, x0, TWO_PI, tol)
    d = traj.final - x0
    for _ in range(steps):
        slope = multiplier(eq, traj) - 1.0
        if d == 0.0 or abs(slope) < 1e-8:
            break
        x1 = x0 - d / slope
        t1 = integrate_flow(eq, 0.0, x1, TWO_PI, tol)
        d1 = t1.final - x1
        if not abs(d1) < abs(d):
            break
        x0, d, traj = x1, d1, t1
    return x0


def _constant_sign_cycles(eq: AbelEq, lc: LinearConstants, cfg: SearchConfig):
    out = []
    for A, B, sign, label in ((lc.A, lc.B, 1.0, POSITIVE), (lc.Abar, lc.Bbar, -1.0, NEGATIVE)):
        if abs(A - 1.0) < 1e-14:
            continue
        xs = B / (1.0 - A)
        # no amplitude cap: B / (1 - A) is unbounded as int a -> 0
        if xs * sign <= 0.0:
            continue
        traj = integrate_flow(eq, 0.0, xs, TWO_PI, cfg.tol)
        if traj.crossings or traj.initial_sign != sign:
            continue
        out.append(classify_cycle(eq, Cycle(xs, label), cfg.tol, cfg.mult_tol))
    return out


def _refine_roots(fn, ts, vals, cfg: SearchConfig):
    """Simple roots from sign changes plus tangential ones from |Delta| minima."""
    roots, tangential, unresolved = [], [], []
    ok = ~np.isnan(vals)

    def scalar(t):
        v = float(fn(np.array([t]))[0])
        if math.isnan(v):
            raise UnresolvedRoot(f"Delta undefined at t={t:.12g}")
        return v

    def bracket(lo, hi):
        try:
            roots.append(optimize.brentq(scalar, lo, hi, xtol=cfg.root_tol, rtol=1e-15, maxiter=200))
        except (UnresolvedRoot, ValueError) as exc:
            unresolved.append((lo, hi, str(exc)))

    n = len(ts)
    for i in range(n - 1):
        if ok[i] and ok[i + 1]:
            if vals[i] == 0.0:
                roots.append(float(ts[i]))
            elif vals[i] * vals[i + 1] < 0.0:
                bracket(ts[i], ts[i + 1])
    for i in range(1, n - 1):
        if not (ok[i - 1] and ok[i] and ok[i + 1]):
            continue
        v = vals[i]
        if v * vals[i - 1] <= 0.0 or v * vals[i + 1] <= 0.0:
            continue
        if not (abs(v) <= abs(vals[i - 1]) and abs(v) <= abs(vals[i + 1])):
            continue
        s = 1.0 if v > 0 else -1.0
        try:
            res = optimize.minimize_scalar(lambda t: s * scalar(t), bounds=(ts[i - 1], ts[i + 1]),
                                           method="bounded", options={"xatol": 1e-12})
        except UnresolvedRoot:
            continue
        tm, vm = float(res.x), s * float(res.fun)
        if vm * v < 0.0:
            bracket(ts[i - 1], tm)
            bracket(tm, ts[i + 1])
        elif abs(vm) < cfg.tangent_tol:
            tangential.append(tm)
    return sorted(roots), tangential, unresolved


def _add_domain_edges(fn, ts, vals, iters: int = 60):
    """Append the last defined point at each end of a gap in Delta's domain.

    Near such an edge a half map typically behaves like a square root, so a
    root can hide between the last defined grid point and the edge.
    """
    ok = ~np.isnan(vals)
    extra_t, extra_v = [], []
    for i in np.nonzero(ok[:-1] != ok[1:])[0]:
        good, bad = (ts[i], ts[i + 1]) if ok[i] else (ts[i + 1], ts[i])
        vgood = vals[i] if ok[i] else vals[i + 1]
        for _ in range(iters):
            mid = 0.5 * (good + bad)
            if mid == good or mid == bad:
                break
            v = float(fn(np.array([mid]))[0])
            if math.isnan(v):
                bad = mid
            else:
                good, vgood = mid, v
        extra_t.append(good)
        extra_v.append(vgood)
    if not extra_t:
        return ts, vals
    t_all = np.concatenate([ts, extra_t])
    v_all = np.concatenate([vals, extra_v])
    order = np.argsort(t_all, kind="stable")
    t_all, v_all = t_all[order], v_all[order]
    keep = np.concatenate([[True], np.diff(t_all) > 0])
    return t_all[keep], v_all[keep]


def _sign_changing_cycles(eq: AbelEq, nf: NormalizedForm, cfg: SearchConfig):
    eqn = AbelEq(nf.a, nf.b)
    tb = nf.tbar
    ts = np.linspace(cfg.edge, tb - cfg.edge, cfg.grid)
    vals = delta(eqn, ts, cfg.tol)
    fn = lambda t: delta(eqn, t, cfg.tol)
    ts, vals = _add_domain_edges(fn, ts, vals)
    roots, tangential, unresolved = _refine_roots(fn, ts, vals, cfg)
    cycles = []
    s_target = (-nf.time_shift) % TWO_PI
    for t1, tangent in [(r, False) for r in roots] + [(r, True) for r in tangential]:
        t2 = float(half_map_plus(eqn, [t1], cfg.tol)[0])
        end = s_target if s_target > t1 else s_target + TWO_PI
        if end - t1 < 1e-14:
            x0n = 0.0
        else:
            x0n = integrate_flow(eqn, t1, 0.0, end, cfg.tol).final
        x0 = polish_cycle(eq, nf.x_scale * x0n, cfg.tol)
        cyc = Cycle(x0, SIGN_CHANGING, (t1, t2))
        cyc = classify_cycle(eq, cyc, cfg.tol, cfg.mult_tol)
        if tangent:
            cyc = replace(cyc, hyperbolic=False)
        cycles.append(cyc)
    diag = {"delta_grid_defined": int(np.count_nonzero(~np.isnan(vals))),
            "delta_grid": int(cfg.grid)}
    return cycles, unresolved, diag


def probe_window(eq: AbelEq) -> tuple[float, float]:
    xm, xp = sign_thresholds(eq)
    bmax = abs(eq.b.c0) + eq.b.amplitude
    w = 1.0 + bmax
    return xm - w, xp + w


def find_cycles(eq: AbelEq, search: SearchConfig = SearchConfig()) -> CycleReport:
    """All limit cycles of ``eq``, or a center classification."""
    from .centers import CenterClass, detect_center, GLOBAL, NONE

    cc = detect_center(eq)
    diag = {"gronwall_bound": gronwall_bound(eq)}
    if cc.kind == GLOBAL:
        return CycleReport(CENTER, (), cc, diagnostics=diag)
    lc = linear_constants(eq)
    diag.update(A=lc.A, B=lc.B, Abar=lc.Abar, Bbar=lc.Bbar)
    if eq.b.is_zero():
        zero = Cycle(0.0, ZERO, None, lc.A, abs(lc.A - 1.0) >= search.mult_tol, 0.0)
        return CycleReport(FINITE, (zero,), cc, diagnostics=diag)

    cycles = _constant_sign_cycles(eq, lc, search)
    nf = None
    unresolved = []
    if changes_sign(eq.b):
        nf = normalize(eq.a, eq.b)
        sc, unresolved, d2 = _sign_changing_cycles(eq, nf, search)
        diag.update(d2)
        cycles.extend(sc)

    bad = [c for c in cycles if not c.residual < search.validate_tol]
    if bad:
        diag["rejected"] = [c.to_dict() for c in bad]
        cycles = [c for c in cycles if c.residual < search.validate_tol]
    cycles.sort(key=lambda c: c.x0)

    lo, hi = probe_window(eq)
    xs = np.linspace(lo, hi, search.probe_points)
    dv = displacement(eq, xs, TIGHT_TOL)
    scale = 1.0 + np.abs(xs)
    suspected = bool(np.all(np.abs(dv) < search.center_tol * scale)) and cc.kind == NONE
    diag["probe_max_abs_d"] = float(np.max(np.abs(dv)))
    kind = CENTER if cc.kind != NONE else FINITE
    return CycleReport(kind, tuple(cycles), cc, nf, tuple(unresolved), suspected, diag)

"""The curves h = 0 and m = 0 in the (t, x) square and their tangency system.

All functions take a normalized equation, b(t) = sin t + b0 (1 - cos t),
and require a0 != 0 where the ratios r1 = a1/a0, r2 = a2/a0 appear.
The substitution t = 2 atan(z) + pi maps (0, 2 pi) onto the real line and
turns every linear trigonometric polynomial into a quadratic over 1 + z^2,
which makes m = 0 a cubic and the tangency condition a degree 9 curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import optimize
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DegenerateCurve, DivisionNearZero, IllConditioned, OutOfRange
from .flow import AbelEq
from .realroots import BiPoly, UniPoly, deflate_root, real_roots_checked, resultant
from .trigpoly import TWO_PI, TrigPoly, eval_tp, normalize, second_zero

REGION_MARGIN = 1e-9


def normalized_eq(eq: AbelEq) -> AbelEq:
    nf = normalize(eq.a, eq.b)
    return AbelEq(nf.a, nf.b)


def _check_normalized(eq: AbelEq) -> float:
    b = eq.b
    if abs(b.c2 - 1.0) > 1e-12 or abs(b.c1 + b.c0) > 1e-12 * (1.0 + abs(b.c0)):
        raise ValueError("expected a normalized equation, b = sin t + b0 (1 - cos t)")
    return b.c0


def _ratios(eq: AbelEq) -> tuple[float, float]:
    if eq.a.c0 == 0.0:
        raise ValueError("a0 must be nonzero")
    return eq.a.c1 / eq.a.c0, eq.a.c2 / eq.a.c0


def abar(eq: AbelEq) -> TrigPoly:
    """a(t) / a0 = 1 + r1 cos t + r2 sin t."""
    r1, r2 = _ratios(eq)
    return TrigPoly(1.0, r1, r2)


# --------------------------------------------------------------------------
# closed forms


def h_eval(eq: AbelEq, t, x):
    """2 int_t^x a - 2 pi a0."""
    a0, a1, a2 = eq.a.as_tuple()
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    v = 2.0 * (a0 * (x - t) + a1 * (np.sin(x) - np.sin(t)) - a2 * (np.cos(x) - np.cos(t))) - TWO_PI * a0
    return float(v) if v.ndim == 0 else v


def m_eval(eq: AbelEq, t, x):
    """a(t) b(x) - a(x) b(t) e^{pi a0}."""
    c = eq.c
    v = eval_tp(eq.a, t) * eval_tp(eq.b, x) - eval_tp(eq.a, x) * eval_tp(eq.b, t) * c
    return float(v) if np.ndim(v) == 0 else v


def mbar_eval(eq: AbelEq, t, x):
    """m / a0, the same curve with the a0 factor removed."""
    ab = abar(eq)
    v = eval_tp(ab, t) * eval_tp(eq.b, x) - eval_tp(ab, x) * eval_tp(eq.b, t) * eq.c
    return float(v) if np.ndim(v) == 0 else v


def m_expansion(eq: AbelEq, t, x):
    """2 m / a0 written in the harmonics of t, x, x + t and x - t."""
    b0 = _check_normalized(eq)
    r1, r2 = _ratios(eq)
    c = eq.c
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    v = ((c - 1) * (r2 + b0 * r1) * np.cos(x + t)
         + (c - 1) * (b0 * r2 - r1) * np.sin(x + t)
         + (c - 1) * (b0 * r1 - r2) * np.cos(x - t)
         + (c + 1) * (b0 * r2 + r1) * np.sin(x - t)
         + 2 * (b0 * r2 - c) * np.sin(t) + 2 * b0 * (r1 + c) * np.cos(t)
         - 2 * (c * b0 * r2 - 1) * np.sin(x) - 2 * b0 * (c * r1 + 1) * np.cos(x)
         - 2 * (c - 1) * b0)
    return float(v) if v.ndim == 0 else v


def n_poly(eq: AbelEq) -> TrigPoly:
    """n with k' = -n / b^2 for k = abar / b."""
    b0 = _check_normalized(eq)
    r1, r2 = _ratios(eq)
    return TrigPoly(b0 * r2 + r1, 1.0 - b0 * r2, b0 * r1 + b0)


def n_eval(eq: AbelEq, t):
    return eval_tp(n_poly(eq), t)


def k_eval(eq: AbelEq, t):
    bt = eval_tp(eq.b, t)
    if np.any(np.abs(bt) < 1e-12):
        raise DivisionNearZero("b(t) vanishes")
    return eval_tp(abar(eq), t) / bt


def tangency_eval(eq: AbelEq, t, x):
    """n(t) b(x)^3 - n(x) b(t)^3 c^2."""
    n = n_poly(eq)
    c = eq.c
    v = eval_tp(n, t) * eval_tp(eq.b, x) ** 3 - eval_tp(n, x) * eval_tp(eq.b, t) ** 3 * c * c
    return float(v) if np.ndim(v) == 0 else v


def h_zero_branch(eq: AbelEq, z1: float) -> float:
    """z2 = x - t on h = 0 for given z1 = t + x.

    h = 0 reads (pi - z2) / sin(z2/2) = 2 (r1 cos(z1/2) + r2 sin(z1/2)); the
    left side decreases strictly from +inf to -inf on (0, 2 pi).
    """
    r1, r2 = _ratios(eq)
    rhs = 2.0 * (r1 * math.cos(0.5 * z1) + r2 * math.sin(0.5 * z1))
    if not math.isfinite(rhs):
        raise OutOfRange("right-hand side is not finite")
    g = lambda z2: (math.pi - z2) - rhs * math.sin(0.5 * z2)
    lo, hi = 0.0, TWO_PI
    # g(z2) = sin(z2/2) (LHS - rhs) has the sign of LHS - rhs inside
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def h_zero_point(eq: AbelEq, z1: float) -> tuple[float, float]:
    z2 = h_zero_branch(eq, z1)
    return 0.5 * (z1 - z2), 0.5 * (z1 + z2)


# --------------------------------------------------------------------------
# rational model


def _t_of_z(z):
    return 2.0 * np.arctan(z) + math.pi


def _z_of_t(t):
    return np.tan(0.5 * (np.asarray(t, dtype=float) - math.pi))


def _quad_num(p0, p1, p2) -> UniPoly:
    """Numerator of p0 + p1 cos t + p2 sin t under t = 2 atan z + pi."""
    return UniPoly([p0 - p1, -2 * p2, p0 + p1])


@dataclass(frozen=True)
class RationalModel:
    """f = 0 is m = 0 and g = 0 is the tangency condition in z coordinates:
    m / a0 = 2 f / ((1+z1^2)(1+z2^2)) and
    n(t) b(x)^3 - n(x) b(t)^3 c^2 = g / ((1+z1^2)^3 (1+z2^2)^3),
    with t = 2 atan(z1) + pi, x = 2 atan(z2) + pi."""

    f: BiPoly
    g: BiPoly
    b0: float
    r1: float
    r2: float
    c: float

    def t_of(self, z):
        return _t_of_z(z)

    def z_of(self, t):
        return _z_of_t(t)


def rational_model(eq: AbelEq) -> RationalModel:
    b0 = _check_normalized(eq)
    r1, r2 = _ratios(eq)
    B0, R1, R2, C = (Fraction(v) for v in (b0, r1, r2, eq.c))
    f = BiPoly.from_dict({
        (2, 0): (1 + R1) * B0, (2, 1): -(1 + R1),
        (1, 0): -2 * R2 * B0 + C * (1 - R1), (1, 1): 2 * R2 - 2 * C * R2,
        (1, 2): C * (1 + R1), (0, 2): -C * (1 + R1) * B0,
        (0, 1): -(1 - R1) + 2 * C * R2 * B0, (0, 0): (1 - R1) * B0 - C * (1 - R1) * B0,
    })
    nn = _quad_num(B0 * R2 + R1, 1 - B0 * R2, B0 * R1 + B0)
    one_z2 = UniPoly([1, 0, 1])
    bz = UniPoly([B0, -1])
    g1 = BiPoly.z1(nn * one_z2 * one_z2) * BiPoly.z2(bz * bz * bz)
    g2 = BiPoly.z2(nn * one_z2 * one_z2) * BiPoly.z1(bz * bz * bz)
    g = (g1 - g2 * (C * C)) * 8
    return RationalModel(f, g, b0, r1, r2, eq.c)


def common_zero_discriminant(r1: float, r2: float, b0: float) -> float:
    """Vanishes exactly when abar and b share a zero (f reducible)."""
    return (r1 + 1.0) * ((r1 + 1.0) * b0 * b0 - 2.0 * b0 * r2 - r1 + 1.0)


def common_zero_gap(r1: float, r2: float, b0: float, n: int = 4096) -> float:
    """min over t of abar(t)^2 + b(t)^2 (grid plus local refinement)."""
    ab = TrigPoly(1.0, r1, r2)
    b = TrigPoly(b0, -b0, 1.0)
    fn = lambda t: eval_tp(ab, t) ** 2 + eval_tp(b, t) ** 2
    ts = np.linspace(0.0, TWO_PI, n, endpoint=False)
    v = fn(ts)
    best = float(v.min())
    h = TWO_PI / n
    for i in np.argsort(v)[:4]:
        res = optimize.minimize_scalar(fn, bounds=(ts[i] - h, ts[i] + h), method="bounded",
                                       options={"xatol": 1e-14})
        best = min(best, float(res.fun))
    return best


# --------------------------------------------------------------------------
# components of m = 0


def _grid_values(eq: AbelEq, n: int):
    s = np.linspace(0.0, TWO_PI, n + 1)
    T, X = np.meshgrid(s, s, indexing="ij")
    return s, mbar_eval(eq, T, X)


def count_components_m(eq: AbelEq, grid: int = 512) -> int:
    """Connected components of m = 0 in the open square (0, 2 pi)^2.

    Marching squares on a (grid+1)^2 lattice: every lattice edge with a
    sign change carries one contour point, each cell links its contour
    points, and ambiguous saddle cells are resolved by the value at the
    cell center.  Components are the connected components of that graph.
    """
    _ratios(eq)
    s, M = _grid_values(eq, grid)
    scale = max(1.0, float(np.max(np.abs(M))))
    tiny = np.abs(M) < 1e-13 * scale
    flat = tiny[:-1, :-1] & tiny[1:, :-1] & tiny[:-1, 1:] & tiny[1:, 1:]
    if np.any(flat):
        raise DegenerateCurve("m vanishes on a whole grid cell")
    P = M >= 0.0
    n = grid
    # edge ids: horizontal (i, j)-(i+1, j) and vertical (i, j)-(i, j+1)
    eh = P[:-1, :] != P[1:, :]  # shape (n, n+1)
    ev = P[:, :-1] != P[:, 1:]  # shape (n+1, n)
    hid = np.arange(n * (n + 1)).reshape(n, n + 1)
    vid = n * (n + 1) + np.arange((n + 1) * n).reshape(n + 1, n)
    # cell (i, j) edges: bottom = eh[i, j], top = eh[i, j+1], left = ev[i, j], right = ev[i+1, j]
    bot, top, left, right = eh[:, :-1], eh[:, 1:], ev[:-1, :], ev[1:, :]
    ib, it, il, ir = hid[:, :-1], hid[:, 1:], vid[:-1, :], vid[1:, :]
    cnt = bot.astype(int) + top + left + right
    rows, cols = [], []
    two = cnt == 2
    edges = [(bot, ib), (top, it), (left, il), (right, ir)]
    for a in range(4):
        for b in range(a + 1, 4):
            mask = two & edges[a][0] & edges[b][0]
            rows.append(edges[a][1][mask])
            cols.append(edges[b][1][mask])
    sad = np.nonzero(cnt == 4)
    if sad[0].size:
        i, j = sad
        tc = 0.5 * (s[i] + s[i + 1])
        xc = 0.5 * (s[j] + s[j + 1])
        center = mbar_eval(eq, tc, xc) >= 0.0
        # corner (i, j) sign decides which pairs of edges join
        same = center == P[i, j]
        # if the center agrees with corner (i, j), that corner's region is
        # connected through the middle, so the contour cuts off the other
        # two corners: bottom-right and left-top
        rows += [ib[i, j], np.where(same, il[i, j], it[i, j])]
        cols += [np.where(same, ir[i, j], il[i, j]), np.where(same, it[i, j], ir[i, j])]
    r = np.concatenate(rows) if rows else np.zeros(0, int)
    c = np.concatenate(cols) if cols else np.zeros(0, int)
    active = np.zeros(2 * n * (n + 1), bool)
    active[hid[eh]] = True
    active[vid[ev]] = True
    if not active.any():
        return 0
    N = active.size
    G = coo_matrix((np.ones(r.size), (r, c)), shape=(N, N))
    ncomp, labels = connected_components(G, directed=False)
    return int(np.unique(labels[active]).size)


def m_zero_polylines(eq: AbelEq, grid: int = 256, refine_tol: float = 1e-7) -> list[np.ndarray]:
    """Ordered (t, x) polylines, one per component of m = 0."""
    _ratios(eq)
    s, M = _grid_values(eq, grid)
    P = M >= 0.0
    n = grid
    pts, ids = {}, {}

    def edge_point(kind, i, j):
        if kind == "h":
            (t0, x0), (t1, x1), v0, v1 = (s[i], s[j]), (s[i + 1], s[j]), M[i, j], M[i + 1, j]
        else:
            (t0, x0), (t1, x1), v0, v1 = (s[i], s[j]), (s[i], s[j + 1]), M[i, j], M[i, j + 1]
        lo, hi = 0.0, 1.0
        f0 = v0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            fm = mbar_eval(eq, t0 + mid * (t1 - t0), x0 + mid * (x1 - x0))
            if (fm >= 0.0) == (f0 >= 0.0):
                lo = mid
            else:
                hi = mid
            if (hi - lo) * max(abs(t1 - t0), abs(x1 - x0)) < refine_tol * 1e-3:
                break
        th = 0.5 * (lo + hi)
        return (t0 + th * (t1 - t0), x0 + th * (x1 - x0))

    adj = {}

    def link(a, b):
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)

    for i in range(n):
        for j in range(n):
            es = []
            if P[i, j] != P[i + 1, j]:
                es.append(("h", i, j))
            if P[i, j + 1] != P[i + 1, j + 1]:
                es.append(("h", i, j + 1))
            if P[i, j] != P[i, j + 1]:
                es.append(("v", i, j))
            if P[i + 1, j] != P[i + 1, j + 1]:
                es.append(("v", i + 1, j))
            if len(es) == 2:
                link(es[0], es[1])
            elif len(es) == 4:
                bot, top, left, right = es
                tc, xc = 0.5 * (s[i] + s[i + 1]), 0.5 * (s[j] + s[j + 1])
                if (mbar_eval(eq, tc, xc) >= 0.0) == P[i, j]:
                    link(bot, right)
                    link(left, top)
                else:
                    link(bot, left)
                    link(top, right)
    seen = set()
    lines = []
    for start in sorted(adj, key=lambda e: len(adj[e])):
        if start in seen:
            continue
        chain = [start]
        seen.add(start)
        cur = start
        while True:
            nxt = [e for e in adj[cur] if e not in seen]
            if not nxt:
                break
            cur = nxt[0]
            seen.add(cur)
            chain.append(cur)
        if len(adj[start]) == 2 and start in adj[chain[-1]] and len(chain) > 2:
            chain.append(start)
        lines.append(_densify(eq, np.array([edge_point(*e) for e in chain]), refine_tol))
    return lines


def _project_m(eq: AbelEq, pts: np.ndarray, steps: int = 3) -> np.ndarray:
    """Newton projection of points onto m = 0 along the gradient."""
    ab, b, c = abar(eq), eq.b, eq.c
    dab, db = ab.derivative(), b.derivative()
    t, x = pts[:, 0].copy(), pts[:, 1].copy()
    for _ in range(steps):
        abt, abx, bt, bx = eval_tp(ab, t), eval_tp(ab, x), eval_tp(b, t), eval_tp(b, x)
        m = abt * bx - abx * bt * c
        gt = eval_tp(dab, t) * bx - abx * eval_tp(db, t) * c
        gx = abt * eval_tp(db, x) - eval_tp(dab, x) * bt * c
        g2 = gt * gt + gx * gx
        k = np.where(g2 > 0.0, m / np.where(g2 > 0.0, g2, 1.0), 0.0)
        t, x = t - k * gt, x - k * gx
    return np.column_stack([t, x])


def _densify(eq: AbelEq, line: np.ndarray, tol: float, rounds: int = 12) -> np.ndarray:
    """Insert curve points between vertices until every chord midpoint
    is within tol of m = 0."""
    for _ in range(rounds):
        if len(line) < 2:
            break
        mid = 0.5 * (line[:-1] + line[1:])
        proj = _project_m(eq, mid)
        seg = np.hypot(*(line[1:] - line[:-1]).T)
        dev = np.hypot(*(proj - mid).T)
        # a projection that jumps further than the chord has left the arc
        split = (dev > tol) & (dev < seg) & np.all(np.isfinite(proj), axis=1)
        if not split.any():
            break
        out = np.empty((len(line) + int(split.sum()), 2))
        pos = np.arange(len(line)) + np.concatenate([[0], np.cumsum(split)])
        out[pos] = line
        out[pos[:-1][split] + 1] = proj[split]
        line = out
    return line


# --------------------------------------------------------------------------
# tangency system


@dataclass(frozen=True)
class CurvePoint:
    t: float
    x: float
    m_residual: float
    g_residual: float
    h_value: float
    region: str  # "interior", "boundary" or "outside"

    def to_dict(self) -> dict:
        return {"t": self.t, "x": self.x, "m_residual": self.m_residual,
                "g_residual": self.g_residual, "h_value": self.h_value, "region": self.region}


@dataclass(frozen=True)
class TangencyResult:
    points: tuple  # interior points of the counting region
    all_points: tuple  # every real solution in the open square
    boundary: tuple
    resultant_degree: int
    spurious_multiplicity: int
    generic: bool
    partial: bool = False
    notes: tuple = ()

    @property
    def count(self) -> int:
        return len(self.points)

    @property
    def count_square(self) -> int:
        return len(self.all_points)


def region_of(t: float, x: float, tbar: float, margin: float = REGION_MARGIN) -> str:
    """Classify (t, x) against 0 < x - t < 2 pi, tbar < t + x < tbar + 2 pi."""
    d, s = x - t, t + x
    if margin < d < TWO_PI - margin and tbar + margin < s < tbar + TWO_PI - margin:
        return "interior"
    if -margin <= d <= TWO_PI + margin and tbar - margin <= s <= tbar + TWO_PI + margin:
        return "boundary"
    return "outside"


def _residuals(eq: AbelEq, t: float, x: float) -> tuple[float, float]:
    ab, b, n = abar(eq), eq.b, n_poly(eq)
    c = eq.c
    mscale = abs(eval_tp(ab, t) * eval_tp(b, x)) + abs(eval_tp(ab, x) * eval_tp(b, t) * c)
    gscale = (abs(eval_tp(n, t) * eval_tp(b, x) ** 3)
              + abs(eval_tp(n, x) * eval_tp(b, t) ** 3 * c * c))
    m = mbar_eval(eq, t, x)
    g = tangency_eval(eq, t, x)
    return abs(m) / max(mscale, 1e-300), abs(g) / max(gscale, 1e-300)


def _system(eq: AbelEq):
    ab, b, n = abar(eq), eq.b, n_poly(eq)
    dab, db, dn = ab.derivative(), b.derivative(), n.derivative()
    c = eq.c

    def F(v):
        t, x = v
        return np.array([mbar_eval(eq, t, x), tangency_eval(eq, t, x)])

    def J(v):
        t, x = v
        abt, abx, bt, bx = eval_tp(ab, t), eval_tp(ab, x), eval_tp(b, t), eval_tp(b, x)
        nt, nx = eval_tp(n, t), eval_tp(n, x)
        return np.array([
            [eval_tp(dab, t) * bx - abx * eval_tp(db, t) * c,
             abt * eval_tp(db, x) - eval_tp(dab, x) * bt * c],
            [eval_tp(dn, t) * bx ** 3 - 3 * nx * bt ** 2 * eval_tp(db, t) * c * c,
             3 * nt * bx ** 2 * eval_tp(db, x) - eval_tp(dn, x) * bt ** 3 * c * c],
        ])

    return F, J


def _newton(F, J, v, iters: int = 30, tol: float = 1e-14):
    v = np.array(v, dtype=float)
    for _ in range(iters):
        f = F(v)
        try:
            step = np.linalg.solve(J(v), f)
        except np.linalg.LinAlgError:
            return None
        v = v - step
        if not np.all(np.isfinite(v)):
            return None
        if np.max(np.abs(step)) < tol * (1.0 + np.max(np.abs(v))):
            return v
    return v if np.max(np.abs(F(v))) < 1e-10 else None


def solve_tangency(eq: AbelEq, root_tol: float = 1e-13, accept: float = 1e-6) -> TangencyResult:
    """Real solutions of m = 0 and n(t) b(x)^3 = n(x) b(t)^3 c^2.

    Eliminates z2 from the rational model with an exact resultant, removes
    the factor (z1 - b0)^k that belongs to the point t = x = tbar, isolates
    the real roots in z1 by Sturm sequences and recovers z2 from the
    quadratic f(z1, .) = 0, keeping candidates on which g vanishes.
    """
    b0 = _check_normalized(eq)
    model = rational_model(eq)
    tbar = second_zero(b0)
    notes = []
    R = resultant_in_z1(model)
    if R.is_zero():
        raise DegenerateCurve("f and g share a factor")
    R, k = deflate_root(R, Fraction(b0))
    partial = False
    try:
        roots = real_roots_checked(R, tol=root_tol)
    except IllConditioned as exc:
        roots, partial = [], True
        notes.append(str(exc))
    generic = all(r.multiplicity == 1 for r in roots)
    vals = sorted(r.value for r in roots)
    if any(b - a < 1e-8 * (1 + abs(a)) for a, b in zip(vals, vals[1:])):
        generic = False
    F, J = _system(eq)
    pts = []
    for r in roots:
        z1 = r.value
        q = model.f.in_z2_at(Fraction(z1)).as_float()
        if q.size < 2:
            continue
        with np.errstate(all="ignore"):
            zs = np.roots(q[::-1])
        for z2 in zs:
            if abs(z2.imag) > 1e-7 * (1.0 + abs(z2)):
                continue
            z2 = float(z2.real)
            gs = model.g.abs_eval(z1, z2)
            if abs(model.g(z1, z2)) > accept * max(gs, 1e-300):
                continue
            t, x = float(_t_of_z(z1)), float(_t_of_z(z2))
            v = _newton(F, J, (t, x), iters=4)
            if v is not None and np.max(np.abs(v - (t, x))) < 1e-6:
                t, x = float(v[0]), float(v[1])
            pts.append((t, x))
    out = []
    for t, x in sorted(pts):
        if any(abs(t - p.t) < 1e-9 and abs(x - p.x) < 1e-9 for p in out):
            continue
        mr, gr = _residuals(eq, t, x)
        # the z-plane test is weak where |g| has large cancelling terms
        if gr > accept:
            continue
        out.append(CurvePoint(t, x, mr, gr, h_eval(eq, t, x), region_of(t, x, tbar)))
    inside = tuple(p for p in out if p.region == "interior")
    boundary = tuple(p for p in out if p.region == "boundary")
    return TangencyResult(inside, tuple(out), boundary, R.degree + k, k, generic, partial, tuple(notes))


def resultant_in_z1(model: RationalModel) -> UniPoly:
    return resultant(model.f, model.g, eliminate="z2")


def _near_b_zeros(t: float, x: float, tbar: float, tol: float = 1e-3) -> bool:
    zs = (0.0, tbar, TWO_PI)
    return min(abs(t - z) for z in zs) < tol and min(abs(x - z) for z in zs) < tol


def tangency_newton_oracle(eq: AbelEq, grid: int = 48) -> list[tuple[float, float]]:
    """Solutions of the tangency system found by Newton from a grid.

    Points with b(t) = b(x) = 0 solve both equations trivially and with
    high multiplicity; Newton creeps towards them, so their neighbourhoods
    are excluded (they are not tangency points of the curves).
    """
    F, J = _system(eq)
    tbar = second_zero(_check_normalized(eq))
    s = (np.arange(grid) + 0.5) * TWO_PI / grid
    found = []
    for t0 in s:
        for x0 in s:
            v = _newton(F, J, (t0, x0))
            if v is None:
                continue
            t, x = float(v[0]), float(v[1])
            if not (0.0 < t < TWO_PI and 0.0 < x < TWO_PI):
                continue
            if np.max(np.abs(F(v))) > 1e-10 or _near_b_zeros(t, x, tbar):
                continue
            if max(_residuals(eq, t, x)) > 1e-8:
                continue
            if any(abs(t - a) < 1e-7 and abs(x - b) < 1e-7 for a, b in found):
                continue
            found.append((t, x))
    return sorted(found)


def h_zero_branch_vec(eq: AbelEq, z1) -> np.ndarray:
    """Vectorized h_zero_branch."""
    r1, r2 = _ratios(eq)
    z1 = np.asarray(z1, dtype=float)
    rhs = 2.0 * (r1 * np.cos(0.5 * z1) + r2 * np.sin(0.5 * z1))
    lo = np.zeros_like(z1)
    hi = np.full_like(z1, TWO_PI)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        pos = (math.pi - mid) - rhs * np.sin(0.5 * mid) > 0.0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    return 0.5 * (lo + hi)


def h_m_intersections(eq: AbelEq, samples: int = 2048) -> list[tuple[float, float]]:
    """Points of h = m = 0 in the counting region.

    Inside the region h = 0 is the graph z2(z1) over z1 = t + x in
    (tbar, tbar + 2 pi), so the intersections are the sign changes of m
    along that graph.
    """
    tbar = second_zero(_check_normalized(eq))
    eps = 1e-9
    z1 = np.linspace(tbar + eps, tbar + TWO_PI - eps, samples)
    z2 = h_zero_branch_vec(eq, z1)
    mv = mbar_eval(eq, 0.5 * (z1 - z2), 0.5 * (z1 + z2))

    def along(u):
        v = h_zero_branch(eq, u)
        return mbar_eval(eq, 0.5 * (u - v), 0.5 * (u + v))

    out = []
    for i in np.nonzero(np.sign(mv[:-1]) * np.sign(mv[1:]) <= 0)[0]:
        if mv[i] == 0.0:
            u = z1[i]
        elif mv[i + 1] == 0.0:
            continue
        else:
            u = optimize.brentq(along, z1[i], z1[i + 1], xtol=1e-14)
        v = h_zero_branch(eq, u)
        out.append((0.5 * (u - v), 0.5 * (u + v)))
    return out

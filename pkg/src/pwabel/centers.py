"""Center detection: global centers and linear (sign-definite) centers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .flow import AbelEq, Tolerances
from .poincare import (displacement, half_map_plus, linear_constants,
                       probe_window, sign_thresholds)
from .trigpoly import TWO_PI, changes_sign, normalize

# the probe certifies |d| well below 1e-9, which needs more than TIGHT_TOL
PROBE_TOL = Tolerances(rtol=1e-13, atol=1e-16, event_tol=1e-14)

NONE, LINEAR_POSITIVE, LINEAR_NEGATIVE, GLOBAL = "none", "linear_positive", "linear_negative", "global"


@dataclass(frozen=True)
class CenterClass:
    kind: str
    witness: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "witness": dict(self.witness)}


def _symmetry_residual(eq: AbelEq) -> float:
    """max |T+(t) + t - 2 pi| on a few interior points of the normalized
    equation; zero for the symmetric (global center) configuration."""
    nf = normalize(eq.a, eq.b)
    eqn = AbelEq(nf.a, nf.b)
    ts = nf.tbar * np.array([0.2, 0.4, 0.6, 0.8])
    T = half_map_plus(eqn, ts)
    r = np.abs(T + ts - TWO_PI)
    r = r[~np.isnan(r)]
    return float(r.max()) if r.size else float("nan")


def detect_center(eq: AbelEq, tol: float = 1e-12, linear_tol: float = 1e-10) -> CenterClass:
    a, b = eq.a, eq.b
    amag = max(abs(a.c0), a.amplitude)
    bmag = max(abs(b.c0), b.amplitude)
    a0_zero = abs(a.c0) <= tol * max(1.0, amag)
    cross = a.c1 * b.c2 - a.c2 * b.c1
    b_zero = b.is_zero()
    proportional = b_zero or (abs(cross) <= tol * max(1.0, a.amplitude * b.amplitude)
                              and abs(b.c0) <= tol * max(1.0, bmag))
    lc = linear_constants(eq)
    # scale for B: integral of |b| weighted like B itself
    bscale = TWO_PI * bmag * math.exp(TWO_PI * (abs(a.c0) + a.amplitude))
    A_one = abs(lc.A - 1.0) <= linear_tol
    B_zero = abs(lc.B) <= linear_tol * max(1.0, bscale)
    Bbar_zero = abs(lc.Bbar) <= linear_tol * max(1.0, bscale)
    witness = {"a0_zero": a0_zero, "proportional": proportional, "cross": cross,
               "A": lc.A, "B": lc.B, "Abar": lc.Abar, "Bbar": lc.Bbar,
               "A_one": A_one, "B_zero": B_zero, "Abar_one": A_one, "Bbar_zero": Bbar_zero}
    if a0_zero and proportional:
        if changes_sign(b):
            witness["symmetry_residual"] = _symmetry_residual(eq)
        return CenterClass(GLOBAL, witness)
    pos = A_one and B_zero and not b_zero
    neg = A_one and Bbar_zero and not b_zero
    witness["linear_positive"] = pos
    witness["linear_negative"] = neg
    if pos:
        return CenterClass(LINEAR_POSITIVE, witness)
    if neg:
        return CenterClass(LINEAR_NEGATIVE, witness)
    return CenterClass(NONE, witness)


def center_probe(eq: AbelEq, n_samples: int = 32, window=None) -> np.ndarray:
    lo, hi = probe_window(eq) if window is None else window
    xs = np.linspace(lo, hi, n_samples)
    return np.abs(displacement(eq, xs, PROBE_TOL))


def verify_center_numeric(eq: AbelEq, n_samples: int = 32, window=None) -> float:
    """max |d(x)| over ``n_samples`` points spanning the probe window."""
    return float(center_probe(eq, n_samples, window).max())


def linear_center_window(eq: AbelEq, kind: str) -> tuple[float, float]:
    """Range of initial values filled by a linear center's continuum."""
    xm, xp = sign_thresholds(eq)
    if kind == LINEAR_POSITIVE:
        return xp, math.inf
    if kind == LINEAR_NEGATIVE:
        return -math.inf, xm
    raise ValueError(kind)

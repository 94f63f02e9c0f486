"""Hopf conditions at interior equilibria, with E2 treated as an independent
input and alpha as the bifurcation parameter.

With E2 fixed, P, K = kappa2*M, k1 and k2 do not depend on alpha, so

    A2 = alpha + B,  A1 = alpha*C1 + D,  A0 = alpha*C0

and H(alpha) = A0 - A1*A2 = h2 alpha^2 + h1 alpha + h0 exactly.  These direct
coefficients are authoritative.  The closed-form expressions published for
h0, h1, h2, kappa2_hat and the transversality derivative are evaluated as a
secondary path; see :func:`printed_coefficients` and
:func:`printed_transversality`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .equilibria import coexistence_equilibria
from .model import ModelParams
from .stability import (CharCoeffs, HOPF_RTOL, Label, _nullcline_terms, char_coeffs_at,
                        classify, hopf_ratio)

DELTA_H_RTOL = 1e-10


class PoleError(ZeroDivisionError):
    """A closed-form threshold was evaluated on its pole."""


@dataclass(frozen=True)
class HopfQuadratic:
    h0: float
    h1: float
    h2: float
    e2: float
    printed: tuple = (math.nan, math.nan, math.nan)

    @property
    def delta_h(self) -> float:
        return self.h1 * self.h1 - 4.0 * self.h0 * self.h2

    def __call__(self, alpha):
        return (self.h2 * alpha + self.h1) * alpha + self.h0

    def derivative(self, alpha):
        return 2.0 * self.h2 * alpha + self.h1

    def printed_value(self, alpha):
        h0, h1, h2 = self.printed
        return (h2 * alpha + h1) * alpha + h0


@dataclass(frozen=True)
class HopfRoots:
    alpha_minus: Optional[float] = None
    alpha_plus: Optional[float] = None
    alpha_star: Optional[float] = None
    linear: bool = False
    rejected: tuple = ()

    @property
    def admissible(self) -> list[float]:
        return [v for v in (self.alpha_minus, self.alpha_plus, self.alpha_star) if v is not None]


def _direct_terms(p: ModelParams, e2: float):
    P, K, k1, k2 = _nullcline_terms(p, e2)
    B = K - P * k1
    C1 = B - p.r1
    D = P * K * (k2 - k1)
    C0 = K * (P * (k2 - k1) - p.r1)
    return B, C1, D, C0


def printed_coefficients(p: ModelParams, e2: float) -> tuple[float, float, float]:
    """(h0, h1, h2) from the published closed forms (delta read as delta1)."""
    a, c, m = p.a, p.c, p.m
    r1, r2, k1, k2 = p.r1, p.r2, p.kappa1, p.kappa2
    d1 = r2 + c * m
    E = e2
    h0 = (-(d1 * E + a * r2) / (k2 * (a + E) ** 5)
          * (2 * k1 * E ** 2 + (a * k1 + d1 - r1) * E + a * r2)
          * (2 * k1 * k2 * E ** 4 + (5 * a * k1 * k2 - r1 * k2) * E ** 3
             + 2 * a * k2 * (2 * a * k1 - r1) * E ** 2
             + a * (c * m * m - a * r1 + a * a * k1 * k2) * E))
    h1 = (1.0 / (a + E) ** 2) * (
        -4 * k1 ** 2 * E ** 4
        + ((6 * r1 - 4 * d1) * k1 - 4 * a * k1 ** 2) * E ** 3
        - (a * a * k1 ** 2 + a * k1 * (2 * c * m - 5 * r1 + 6 * r2)
           + 2 * r1 * (r1 - d1) + d1 ** 2) * E ** 2
        + ((r1 - 2 * r2) * a * a * k1 - a * (2 * r2 * d1 - 2 * r1 * r2 + r1 ** 2)) * E
        - a * a * r2 ** 2)
    h2 = (-2 * k1 * E ** 2 + (-a * k1 - d1 + 2 * r1) * E + a * (r1 - r2)) / (a + E)
    return h0, h1, h2


def hopf_quadratic(p: ModelParams, e2: float) -> HopfQuadratic:
    """Coefficients of H(alpha) = A0 - A1 A2 at prey level ``e2``.

    ``p.alpha`` is ignored.
    """
    if not e2 > 0:
        raise ValueError(f"E2 must be positive, got {e2}")
    B, C1, D, C0 = _direct_terms(p, e2)
    h2 = -C1
    h1 = C0 - C1 * B - D
    h0 = -D * B
    return HopfQuadratic(h0, h1, h2, e2, printed_coefficients(p, e2))


def hopf_alphas(q: HopfQuadratic, tol: float = DELTA_H_RTOL) -> HopfRoots:
    """Real roots of H.  Only positive roots are admissible; others are kept
    in ``rejected``."""
    h0, h1, h2 = q.h0, q.h1, q.h2
    if h2 == 0.0:
        if h1 == 0.0:
            return HopfRoots(linear=True)
        r = -h0 / h1
        return HopfRoots(alpha_star=r if r > 0 else None, linear=True,
                         rejected=() if r > 0 else (r,))
    dh = q.delta_h
    if abs(dh) <= tol * (1.0 + h1 * h1):
        r = -h1 / (2.0 * h2)
        return HopfRoots(alpha_star=r if r > 0 else None, rejected=() if r > 0 else (r,))
    if dh < 0:
        return HopfRoots()
    s = math.sqrt(dh)
    # stable evaluation, then relabel to the (-h1 -/+ sqrt)/(2 h2) convention
    qv = -0.5 * (h1 + math.copysign(s, h1))
    ra, rb = qv / h2, h0 / qv
    am = (-h1 - s) / (2.0 * h2)
    if abs(ra - am) <= abs(rb - am):
        am, ap = ra, rb
    else:
        am, ap = rb, ra
    keep = lambda r: r if r > 0 else None
    rej = tuple(r for r in (am, ap) if r <= 0)
    return HopfRoots(alpha_minus=keep(am), alpha_plus=keep(ap), rejected=rej)


def kappa2_hat(p: ModelParams, e2: float) -> float:
    """Published positivity threshold for A1 (uses ``p.alpha``)."""
    a, c, m = p.a, p.c, p.m
    r1, r2, k1, al = p.r1, p.r2, p.kappa1, p.alpha
    d1 = r2 + c * m
    E = e2
    q3 = 2 * k1 * (d1 + al)
    q2 = a * k1 * (c * m + 3 * al + 3 * r2) - 2 * al * r1 + d1 * (al - r1)
    q1 = a * (a * k1 * (r2 + al) + (c * m - 3 * r1 + 2 * r2) * al - r1 * r2)
    q0 = a * a * al * (r2 - r1)
    den = (a + E) ** 2 * (((q3 * E + q2) * E + q1) * E + q0)
    if den == 0.0:
        raise PoleError("kappa2_hat denominator vanishes")
    return -a * c * m * m * E * (d1 * E + a * r2) / den


def a1_kappa2_threshold(p: ModelParams, e2: float) -> Optional[float]:
    """kappa2 at which A1 changes sign with E2 and alpha held fixed.

    A1 = X + Y/kappa2 with Y > 0, so A1 > 0 for kappa2 below the returned
    value (when X < 0) and for every kappa2 when X >= 0 (returns None).
    """
    P, K, k1, k2 = _nullcline_terms(p, e2)
    X = p.alpha * (K - P * k1 - p.r1) - P * K * k1
    Y = P * K * k2 * p.kappa2
    if X >= 0:
        return None
    return -Y / X


def nilpotent_kappa2(p: ModelParams, e2: float) -> tuple[float, float]:
    """(kappa2_tilde, kappa2_s123) from the two published factors.

    The second value is the exact kappa2 at which det J vanishes with E2 held
    fixed.  The first zeroes the determinant only under the total-slope
    convention of :func:`bifurcat.stability.char_coeffs_total_slope`.
    """
    a, c, m = p.a, p.c, p.m
    E = e2
    den_t = (a + E) ** 2 * (a + 2 * E) * (p.r1 - p.kappa1 * E)
    den_s = (a + E) ** 2 * (p.r1 - a * p.kappa1 - 2 * p.kappa1 * E)
    if den_t == 0.0:
        raise PoleError("kappa2_tilde pole: r1 = kappa1*E2")
    if den_s == 0.0:
        raise PoleError("kappa2(S123) pole: r1 = (a + 2 E2) kappa1")
    return a * c * m * m * E / den_t, a * c * m * m / den_s


def _qbar(p: ModelParams, e2: float, alpha: float) -> float:
    a, c, m = p.a, p.c, p.m
    r1, r2, k1 = p.r1, p.r2, p.kappa1
    d1 = r2 + c * m
    q3 = 2 * (alpha + d1) * k1
    q2 = (3 * a * k1 + d1) * alpha + a * k1 * (3 * r2 + c * m) - r1 * d1
    q1 = a * (c * m + r1 + 2 * r2 + a * k1) * alpha + a * r2 * (-r1 + a * k1)
    q0 = a * a * (r2 + r1) * alpha
    return ((q3 * e2 + q2) * e2 + q1) * e2 + q0


def transversality_factors(p: ModelParams, e2: float) -> tuple[float, float]:
    """The two factors whose zeros the published derivative inherits."""
    a, c, m, k2 = p.a, p.c, p.m, p.kappa2
    E = e2
    f1 = a * c * m * m * E + (a + E) ** 2 * (a + 2 * E) * (-p.r1 + p.kappa1 * E) * k2
    f2 = a * c * m * m + (a + E) ** 2 * (-p.r1 + (a + 2 * E) * p.kappa1) * k2
    return f1, f2


def printed_transversality(p: ModelParams, e2: float, alpha_at: float) -> float:
    """Published closed form of d(Re lambda)/d alpha, with its first bracket
    read in the factored form that the zero analysis uses."""
    a, c, m = p.a, p.c, p.m
    d1 = p.r2 + c * m
    E = e2
    f1, f2 = transversality_factors(p, e2)
    num = E * (d1 * E + p.r2 * a) ** 2 * f2 * f1
    den = (_qbar(p, e2, alpha_at) * (a + E) ** 2 * p.kappa2
           + a * c * m * m * (d1 * E + p.r2 * a) * E) ** 2
    if den == 0.0:
        raise PoleError("transversality denominator vanishes")
    return num / den


def exact_transversality(p: ModelParams, e2: float, alpha_at: float) -> float:
    """d(Re lambda)/d alpha of the critical pair at a root of H.

    From the implicit function theorem on the characteristic polynomial,
    Re dlambda/dalpha = H'(alpha)/(2 (A1 + A2^2)) whenever A0 = A1 A2 and
    A1 > 0.  It vanishes only at a double root of H (delta_h = 0).
    """
    q = hopf_quadratic(p, e2)
    cc = char_coeffs_at(p.with_(alpha=alpha_at), e2)
    return q.derivative(alpha_at) / (2.0 * (cc.A1 + cc.A2 ** 2))


class NotAHopfRoot(ValueError):
    pass


def transversality(p: ModelParams, e2: float, alpha_at: float, rtol: float = 1e-6) -> float:
    """Exact transversality at ``alpha_at``, which must be a root of H."""
    q = hopf_quadratic(p, e2)
    roots = [r for r in hopf_alphas(q).admissible] + list(hopf_alphas(q).rejected)
    if not roots or min(abs(r - alpha_at) for r in roots) > rtol * max(1.0, abs(alpha_at)):
        raise NotAHopfRoot(f"alpha = {alpha_at} is not a root of H at E2 = {e2}")
    return exact_transversality(p, e2, alpha_at)


@dataclass
class HopfReport:
    label: str
    e2: float
    kappa2_hat: float
    hypothesis: bool
    roots: HopfRoots
    nearest_alpha: Optional[float]
    coeffs: CharCoeffs
    ratio: float
    transversality: float
    certificate: bool
    degenerate: bool
    notes: list = field(default_factory=list)


def check_hopf_theorem(p: ModelParams) -> list[HopfReport]:
    """Test the Hopf hypotheses at every non-saddle interior equilibrium."""
    out = []
    for eq in coexistence_equilibria(p):
        cc = char_coeffs_at(p, eq.E2)
        if classify(cc).label is Label.HYPERBOLIC_SADDLE:
            continue
        notes = []
        try:
            kh = kappa2_hat(p, eq.E2)
        except PoleError:
            kh = math.nan
            notes.append("kappa2_hat on its pole")
        hyp = bool(kh < p.kappa2) if math.isfinite(kh) else False
        if not hyp:
            notes.append("kappa2 does not exceed kappa2_hat")
        q = hopf_quadratic(p, eq.E2)
        roots = hopf_alphas(q)
        cand = roots.admissible
        nearest = min(cand, key=lambda r: abs(r - p.alpha)) if cand else None
        ratio = hopf_ratio(cc)
        on_axis = cc.A1 > 0 and cc.A2 > 0 and ratio < HOPF_RTOL
        tr = exact_transversality(p, eq.E2, p.alpha) if cc.A1 > 0 else math.nan
        degenerate = roots.alpha_star is not None and nearest == roots.alpha_star
        if degenerate:
            notes.append("double root of H: transversality fails")
        cert = hyp and on_axis and math.isfinite(tr) and tr != 0.0 and not degenerate
        out.append(HopfReport(eq.label, eq.E2, kh, hyp, roots, nearest, cc, ratio, tr,
                              cert, degenerate, notes))
    return out

"""Equilibria of the model: boundary points, the coexistence cubic and its
discriminant cascade, threshold curves and the region map in (kappa1, kappa2).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import ModelParams, vector_field, jacobian

MERGE_RTOL = 1e-7
TRIPLE_RTOL = 1e-10
POSITIVE_E2 = 1e-12


class Kind(str, enum.Enum):
    ORIGIN = "Origin"
    PREDATOR_EXTINCTION = "PredatorExtinction"
    PEST_FREE = "PestFree"
    COEXISTENCE = "Coexistence"


class Region(str, enum.Enum):
    V0 = "V0"
    V1 = "V1"
    V2 = "V2"
    V3 = "V3"
    C0 = "C0"
    C_DELTA_MINUS = "C_delta-"
    C_DELTA_PLUS = "C_delta+"
    C_STAR = "C_star"
    C_BAR = "C_bar"

    @property
    def count(self) -> Optional[int]:
        """Coexistence count implied by an open region, None on boundaries."""
        return {"V0": 0, "V1": 1, "V2": 2, "V3": 3}.get(self.value)


@dataclass(frozen=True)
class Equilibrium:
    state: tuple
    kind: Kind
    multiplicity: int = 1
    label: str = ""

    @property
    def x(self) -> np.ndarray:
        return np.array(self.state, dtype=float)

    @property
    def E2(self) -> float:
        return self.state[1]


# ---------------------------------------------------------------------------
# cubic solving


def solve_cubic(c3: float, c2: float, c1: float, c0: float, polish: bool = True) -> np.ndarray:
    """All three roots of c3 x^3 + c2 x^2 + c1 x + c0 by the trigonometric /
    Cardano formulas, each polished by Newton steps.

    Returned as complex numbers: real roots ascending first, then a complex
    pair ordered by increasing imaginary part.
    """
    if c3 == 0:
        raise ValueError("leading coefficient is zero")
    b, c, d = c2 / c3, c1 / c3, c0 / c3
    shift = b / 3.0
    pp = c - b * b / 3.0
    qq = 2.0 * b ** 3 / 27.0 - b * c / 3.0 + d
    disc = -(4.0 * pp ** 3 + 27.0 * qq ** 2)

    if disc > 0 and pp < 0:
        rad = 2.0 * math.sqrt(-pp / 3.0)
        arg = 3.0 * qq / (pp * rad)
        theta = math.acos(max(-1.0, min(1.0, arg))) / 3.0
        ts = [rad * math.cos(theta - 2.0 * math.pi * k / 3.0) for k in range(3)]
        roots = [complex(t - shift) for t in ts]
    else:
        sq = math.sqrt(max(qq * qq / 4.0 + pp ** 3 / 27.0, 0.0))
        u = np.cbrt(-qq / 2.0 + sq)
        v = np.cbrt(-qq / 2.0 - sq)
        r = u + v - shift
        # deflate with Vieta for the other two
        if polish:
            r = _newton_real(b, c, d, r)
        s = -b - r
        if r != 0.0:
            prod = -d / r
        else:
            prod = c
        half = s / 2.0
        rad = half * half - prod
        if rad >= 0:
            w = math.sqrt(rad)
            roots = [complex(r), complex(half - w), complex(half + w)]
        else:
            w = math.sqrt(-rad)
            roots = [complex(r), complex(half, -w), complex(half, w)]

    if polish:
        roots = [_newton_complex(b, c, d, z) for z in roots]
    return _sort_roots(np.array(roots))


def _newton_real(b, c, d, x, steps=3):
    for _ in range(steps):
        f = ((x + b) * x + c) * x + d
        df = (3.0 * x + 2.0 * b) * x + c
        if df == 0.0:
            break
        nx = x - f / df
        if not math.isfinite(nx):
            break
        if abs(((nx + b) * nx + c) * nx + d) > abs(f):
            break
        x = nx
    return x


def _newton_complex(b, c, d, z, steps=3):
    for _ in range(steps):
        f = ((z + b) * z + c) * z + d
        df = (3.0 * z + 2.0 * b) * z + c
        if df == 0:
            break
        nz = z - f / df
        if abs(((nz + b) * nz + c) * nz + d) >= abs(f):
            break
        z = nz
    if abs(z.imag) < 1e-300:
        z = complex(z.real, 0.0)
    return z


def _sort_roots(z: np.ndarray) -> np.ndarray:
    reals = sorted((w for w in z if w.imag == 0.0), key=lambda w: w.real)
    cplx = sorted((w for w in z if w.imag != 0.0), key=lambda w: w.imag)
    return np.array(reals + cplx, dtype=complex)


# ---------------------------------------------------------------------------
# boundary points and the cubic


def boundary_equilibria(p: ModelParams) -> list[Equilibrium]:
    k1 = p.r1 / p.kappa1
    p1 = p.r1 / p.alpha
    k2 = p.r2 / p.kappa2
    return [
        Equilibrium((0.0, 0.0, 0.0), Kind.ORIGIN, 1, "S0"),
        Equilibrium((p1 * k1, k1, 0.0), Kind.PREDATOR_EXTINCTION, 1, "S10"),
        Equilibrium((0.0, 0.0, k2), Kind.PEST_FREE, 1, "S01"),
    ]


def coexistence_cubic(p: ModelParams) -> tuple[float, float, float, float]:
    """Monic coefficients (1, c2, c1, c0) of the cubic whose roots are the
    E2-coordinates where the two nullcline surfaces meet."""
    a, c, m = p.a, p.c, p.m
    r1, r2, k1, k2 = p.r1, p.r2, p.kappa1, p.kappa2
    c2 = -(r1 / k1 - 2.0 * a)
    c1 = a * a - 2.0 * a * r1 / k1 + m * (c * m + r2) / (k1 * k2)
    c0 = (a * a * r1 / (k1 * k2)) * (m * r2 / (a * r1) - k2)
    return 1.0, c2, c1, c0


def mite_level(p: ModelParams, e2: float) -> float:
    """M on the mite nullcline at prey level e2."""
    return (p.r2 + p.c * p.m * e2 / (p.a + e2)) / p.kappa2


def lift(p: ModelParams, e2: float) -> np.ndarray:
    """Full state of the interior equilibrium with prey coordinate e2."""
    return np.array([p.r1 * e2 / p.alpha, e2, mite_level(p, e2)])


def newton_polish(p: ModelParams, x, steps: int = 2) -> np.ndarray:
    x = np.asarray(x, dtype=float).copy()
    for _ in range(steps):
        f = vector_field(p, x)
        try:
            dx = np.linalg.solve(jacobian(p, x), -f)
        except np.linalg.LinAlgError:
            break
        xn = x + dx
        if np.max(np.abs(vector_field(p, xn))) <= np.max(np.abs(f)):
            x = xn
        else:
            break
    return x


def _cluster(roots, tol=MERGE_RTOL):
    """Merge nearly equal real roots; returns list of (value, multiplicity)."""
    roots = sorted(roots)
    groups: list[list[float]] = []
    for r in roots:
        if groups and abs(r - groups[-1][-1]) < tol * max(1.0, abs(r)):
            groups[-1].append(r)
        else:
            groups.append([r])
    return [(float(np.mean(g)), len(g)) for g in groups]


def real_cubic_roots(p: ModelParams) -> list[tuple[float, int]]:
    """Real roots of the coexistence cubic with multiplicities.

    A complex pair whose imaginary part is below the merge tolerance is a
    perturbed double root and is folded back to the real axis.
    """
    c3, c2, c1, c0 = coexistence_cubic(p)
    # a triple root splits by ~eps**(1/3) in floating point; detect it from
    # the depressed cubic instead of by clustering
    b, sh = c2 / c3, -c2 / (3.0 * c3)
    pp = c1 / c3 - b * b / 3.0
    qq = 2.0 * b ** 3 / 27.0 - b * c1 / (3.0 * c3) + c0 / c3
    if abs(pp) <= TRIPLE_RTOL * sh * sh and abs(qq) <= TRIPLE_RTOL * abs(sh) ** 3:
        return [(float(sh), 3)]
    z = solve_cubic(c3, c2, c1, c0)
    vals = []
    for w in z:
        if abs(w.imag) < MERGE_RTOL * max(1.0, abs(w.real)):
            vals.append(w.real)
    return _cluster(vals)


def _rank_labels(roots: list[tuple[float, int]]) -> dict[float, str]:
    """Label every real root by its rank among all real roots of the cubic.

    With three real roots (counted with multiplicity) the ranks are 1, 2, 3
    and merged roots take the joined label (S12, S23, S123).  A lone real
    root is S1.
    """
    labels = {}
    rank = 1
    for r, mu in roots:
        labels[r] = "S" + "".join(str(rank + i) for i in range(mu))
        rank += mu
    return labels


def coexistence_equilibria(p: ModelParams, polish: bool = True) -> list[Equilibrium]:
    """Interior equilibria sorted by increasing E2.

    Labels are the rank of each root among all real roots of the cubic, so
    the middle (saddle) root of three is always S2 even when the lowest root
    is not positive.
    """
    roots = real_cubic_roots(p)
    labels = _rank_labels(roots)
    out = []
    for e2, mult in roots:
        if e2 <= POSITIVE_E2:
            continue
        x = lift(p, e2)
        if not (x[2] > 0 and x[0] > 0):
            continue
        if polish and mult == 1:
            x = newton_polish(p, x)
        out.append(Equilibrium(tuple(float(v) for v in x), Kind.COEXISTENCE, mult, labels[e2]))
    return out


def all_equilibria(p: ModelParams) -> list[Equilibrium]:
    return boundary_equilibria(p) + coexistence_equilibria(p)


# ---------------------------------------------------------------------------
# thresholds


def _delta0_quadratic(p: ModelParams, kappa1: Optional[float] = None):
    a, c, m, r1, r2 = p.a, p.c, p.m, p.r1, p.r2
    k1 = p.kappa1 if kappa1 is None else kappa1
    d1 = r2 + c * m
    a2 = 4.0 * a * c * (a * k1 + r1) ** 3
    a1 = (a * a * (8.0 * c * c * m * m - 20.0 * c * m * r2 - r2 * r2) * k1 * k1
          - 2.0 * a * r1 * d1 * (10.0 * c * m + r2) * k1 - r1 * r1 * d1 * d1)
    a0 = 4.0 * m * d1 ** 3 * k1
    return a2, a1, a0


def delta0(p: ModelParams) -> float:
    """Discriminant-type quantity of the cubic; negative means three distinct
    real roots, positive means one real root and a complex pair."""
    a2, a1, a0 = _delta0_quadratic(p)
    k2 = p.kappa2
    return (p.m ** 2 / (p.kappa1 ** 4 * k2 ** 3)) * (a2 * k2 * k2 + a1 * k2 + a0)


def delta1(p: ModelParams, kappa1: Optional[float] = None) -> float:
    a, c, m, r1, r2 = p.a, p.c, p.m, p.r1, p.r2
    k1 = p.kappa1 if kappa1 is None else kappa1
    d1, d2 = r2 + c * m, 8.0 * c * m - r2
    return (a * k1 * r2 + r1 * d1) * (r1 * d1 - a * k1 * d2) ** 3


def kappa2_pm(p: ModelParams, kappa1: Optional[float] = None) -> Optional[tuple[float, float]]:
    """Roots (kappa2_minus, kappa2_plus) of the Delta0 quadratic in kappa2,
    or None when they are not real."""
    a2, a1, a0 = _delta0_quadratic(p, kappa1)
    disc = a1 * a1 - 4.0 * a2 * a0
    if disc < 0:
        return None
    s = math.sqrt(disc)
    # numerically stable pair
    qv = -0.5 * (a1 + math.copysign(s, a1))
    r_a, r_b = qv / a2, a0 / qv
    lo, hi = sorted((r_a, r_b))
    return lo, hi


@dataclass(frozen=True)
class ThresholdSet:
    delta1: float
    delta2: float
    kappa2_bar: float
    kappa1_bar: Optional[float]
    kappa1_star: Optional[float]
    kappa2_star: Optional[float]
    kappa2_minus: Optional[float]
    kappa2_plus: Optional[float]


def thresholds(p: ModelParams) -> ThresholdSet:
    a, c, m, r1, r2 = p.a, p.c, p.m, p.r1, p.r2
    d1, d2 = r2 + c * m, 8.0 * c * m - r2
    k2bar = r2 * m / (r1 * a)
    k1bar = r1 * (r2 - c * m) / (r2 * a) if r2 > c * m else None
    if d2 > 0:
        k1s = r1 * d1 / (a * d2)
        k2s = d1 * d1 * d2 / (27.0 * r1 * a * c * c * m)
    else:
        k1s = k2s = None
    pm = kappa2_pm(p)
    km, kp = pm if pm is not None else (None, None)
    return ThresholdSet(d1, d2, k2bar, k1bar, k1s, k2s, km, kp)


def s123_point(p: ModelParams) -> Optional[tuple[float, float, float]]:
    """(E2*, kappa1*, kappa2*) of the triple coexistence root, or None when
    r2 >= 2cm (the triple root is then not in the positive quadrant)."""
    a, c, m, r1, r2 = p.a, p.c, p.m, p.r1, p.r2
    if not (0.0 < r2 < 2.0 * c * m):
        return None
    d1, d2 = r2 + c * m, 8.0 * c * m - r2
    e2s = a * (-1.0 + 3.0 * c * m / d1)
    if e2s <= 0:
        return None
    return e2s, r1 * d1 / (a * d2), d1 * d1 * d2 / (27.0 * a * c * c * m * r1)


# ---------------------------------------------------------------------------
# region map


def predicted_count(p: ModelParams) -> int:
    """Number of positive coexistence roots (with multiplicity) predicted from
    the sign of Delta0, the constant coefficient and Descartes' rule."""
    _, c2, c1, c0 = coexistence_cubic(p)
    d0 = delta0(p)
    if d0 < 0:
        # all roots real and distinct: Descartes' rule is exact
        signs = [s for s in (1.0, c2, c1, c0) if s != 0.0]
        return sum(1 for u, v in zip(signs, signs[1:]) if u * v < 0)
    # one real root; the complex pair has positive product
    return 1 if c0 < 0 else 0


def classify_region(p: ModelParams, rtol: float = 1e-9) -> Region:
    """Region label of (kappa1, kappa2), or a boundary-curve label when the
    point lies within `rtol` of one of the curves."""
    th = thresholds(p)
    k1, k2 = p.kappa1, p.kappa2

    near = lambda x, y: y is not None and abs(x - y) <= rtol * max(abs(y), 1e-300)
    if near(k1, th.kappa1_star) and near(k2, th.kappa2_star):
        return Region.C_STAR
    if near(k2, th.kappa2_bar) and near(k1, th.kappa1_bar):
        return Region.C_BAR
    if near(k2, th.kappa2_bar):
        return Region.C0
    if near(k2, th.kappa2_minus):
        return Region.C_DELTA_MINUS
    if near(k2, th.kappa2_plus):
        return Region.C_DELTA_PLUS
    return Region("V%d" % predicted_count(p))

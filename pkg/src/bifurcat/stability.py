"""Characteristic polynomial, eigenvalues and stability labels of interior
equilibria.

At an interior equilibrium with prey level E the Jacobian has the structured
form

    [[-alpha,   r1,        0     ],
     [ alpha,   P*k1,     -P     ],
     [ 0,       K*k2,     -K     ]]

with P = m E/(a+E), K = kappa2*M = r2 + c m E/(a+E), k2 the slope of the mite
nullcline and k1 the slope of the hatchling nullcline taken at fixed E1.
Its characteristic polynomial is lambda^3 + A2 lambda^2 + A1 lambda + A0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .equilibria import Equilibrium, Kind, solve_cubic
from .model import ModelParams, jacobian

ZERO_RTOL = 1e-8
# |Re lambda|/omega of the critical pair accepted as "on the imaginary axis"
HOPF_RTOL = 1e-6


@dataclass(frozen=True)
class CharCoeffs:
    A0: float
    A1: float
    A2: float
    P_bar: float = math.nan
    k1: float = math.nan
    k2: float = math.nan

    @property
    def trace(self) -> float:
        return -self.A2

    @property
    def determinant(self) -> float:
        return -self.A0

    @property
    def k_bar(self) -> float:
        return self.k2 - self.k1

    @property
    def hopf_function(self) -> float:
        """A0 - A1*A2; vanishes when a pair of roots is purely imaginary."""
        return self.A0 - self.A1 * self.A2

    def scale(self) -> float:
        return 1.0 + abs(self.A0) + abs(self.A1 * self.A2)

    def as_tuple(self):
        return self.A0, self.A1, self.A2


def _nullcline_terms(p: ModelParams, e2: float):
    a, c, m = p.a, p.c, p.m
    d = a + e2
    P = m * e2 / d
    K = p.r2 + c * m * e2 / d
    k1 = -(a * p.r1 / e2 + a * p.kappa1 + 2.0 * p.kappa1 * e2) / m
    k2 = c * m * a / (p.kappa2 * d * d)
    return P, K, k1, k2


def char_coeffs_at(p: ModelParams, e2: float) -> CharCoeffs:
    """Coefficients at the interior equilibrium with prey level ``e2``.

    Only E2 enters; alpha enters linearly, which is what makes the Hopf
    function a quadratic in alpha.
    """
    if not e2 > 0:
        raise ValueError(f"interior equilibria need E2 > 0, got {e2}")
    P, K, k1, k2 = _nullcline_terms(p, e2)
    al = p.alpha
    A2 = al + K - P * k1
    A1 = al * (K - P * k1 - p.r1) + P * K * (k2 - k1)
    A0 = al * K * (P * (k2 - k1) - p.r1)
    return CharCoeffs(A0, A1, A2, P, k1, k2)


def char_coeffs(p: ModelParams, eq: Equilibrium) -> CharCoeffs:
    if eq.kind is not Kind.COEXISTENCE:
        raise ValueError(f"char_coeffs needs a coexistence equilibrium, got {eq.kind.value}")
    return char_coeffs_at(p, eq.E2)


def char_coeffs_total_slope(p: ModelParams, e2: float) -> CharCoeffs:
    """Variant that uses the total E2-derivative of the hatchling nullcline
    M = (r1 - kappa1 E2)(a + E2)/m (E1 eliminated first) and
    A0 = alpha K [P (k1 - k2) + r1].

    These coefficients are not those of the Jacobian; they are kept to
    reproduce threshold formulas derived under that convention.
    """
    P, K, _, k2 = _nullcline_terms(p, e2)
    k1 = (p.r1 - p.a * p.kappa1 - 2.0 * p.kappa1 * e2) / p.m
    al = p.alpha
    A2 = al + K - P * k1
    A1 = al * (K - P * k1 - p.r1) + P * K * (k2 - k1)
    A0 = al * K * (P * (k1 - k2) + p.r1)
    return CharCoeffs(A0, A1, A2, P, k1, k2)


def structured_jacobian(p: ModelParams, e2: float) -> np.ndarray:
    P, K, k1, k2 = _nullcline_terms(p, e2)
    return np.array([
        [-p.alpha, p.r1, 0.0],
        [p.alpha, P * k1, -P],
        [0.0, K * k2, -K],
    ])


def coeffs_from_matrix(J) -> CharCoeffs:
    J = np.asarray(J, dtype=float)
    A2 = -np.trace(J)
    A1 = (J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
          + J[0, 0] * J[2, 2] - J[0, 2] * J[2, 0]
          + J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
    A0 = -np.linalg.det(J)
    return CharCoeffs(float(A0), float(A1), float(A2))


def roots_of(cc: CharCoeffs) -> np.ndarray:
    """Eigenvalues from the coefficients: real roots ascending, then the
    complex pair by increasing imaginary part."""
    return solve_cubic(1.0, cc.A2, cc.A1, cc.A0)


def eigenvalues(p: ModelParams, eq: Equilibrium) -> np.ndarray:
    if eq.kind is Kind.COEXISTENCE:
        return roots_of(char_coeffs(p, eq))
    return roots_of(coeffs_from_matrix(jacobian(p, eq.x)))


# ---------------------------------------------------------------------------
# classification


class Label(str, enum.Enum):
    ANTI_SADDLE = "AntiSaddle"
    HYPERBOLIC_SADDLE = "HyperbolicSaddle"
    SADDLE_NODE = "SaddleNodeCandidate"
    HOPF = "HopfCandidate"
    BT = "BTCandidate"
    STABLE = "StableNode/Focus"
    UNSTABLE = "UnstableNode/Focus"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class StabilityVerdict:
    label: Label
    eigenvalues: tuple
    sub_label: Optional[Label] = None
    hopf_ratio: float = math.nan

    @property
    def stable(self) -> bool:
        return all(z.real < 0 for z in self.eigenvalues)


def hopf_ratio(cc: CharCoeffs) -> float:
    """Estimate of |Re lambda|/omega for the near-imaginary pair.

    Near a Hopf point Re lambda ~ H/(2(A1 + A2^2)) with H = A0 - A1*A2 and
    omega = sqrt(A1).  Returns inf when A1 <= 0.
    """
    if cc.A1 <= 0:
        return math.inf
    return abs(cc.hopf_function) / (2.0 * (cc.A1 + cc.A2 ** 2)) / math.sqrt(cc.A1)


def classify(cc: CharCoeffs, eigs=None, lead: float = 1.0) -> StabilityVerdict:
    """Label from the characteristic coefficients.

    ``lead`` is the leading coefficient when the polynomial is given in a
    non-monic form (for example multiplied by -1); it is divided out first.
    """
    if lead == 0:
        raise ValueError("leading coefficient is zero")
    cc = CharCoeffs(cc.A0 / lead, cc.A1 / lead, cc.A2 / lead, cc.P_bar, cc.k1, cc.k2)
    if not all(math.isfinite(v) for v in cc.as_tuple()):
        return StabilityVerdict(Label.DEGENERATE, (), None)
    if eigs is None:
        eigs = roots_of(cc)
    eigs = tuple(complex(z) for z in eigs)
    scale = cc.scale()
    a0_zero = abs(cc.A0) < ZERO_RTOL * scale
    a1_zero = abs(cc.A1) < ZERO_RTOL * (1.0 + abs(cc.A1) + cc.A2 ** 2)
    ratio = hopf_ratio(cc)

    if a0_zero and a1_zero:
        lab = Label.BT if cc.A2 > 0 else Label.DEGENERATE
        return StabilityVerdict(lab, eigs, None, ratio)
    if a0_zero:
        lab = Label.SADDLE_NODE if abs(cc.A2) > ZERO_RTOL else Label.DEGENERATE
        return StabilityVerdict(lab, eigs, None, ratio)
    if cc.A1 > 0 and cc.A2 > 0 and ratio < HOPF_RTOL:
        return StabilityVerdict(Label.HOPF, eigs, None, ratio)

    sub = Label.STABLE if all(z.real < 0 for z in eigs) else Label.UNSTABLE
    real = [z.real for z in eigs if z.imag == 0.0]
    split = any(r > 0 for r in real) and any(r < 0 for r in real)
    # det > 0 with some decaying direction: a positive real eigenvalue
    # against a stable pair
    if split or (cc.A0 < 0 and any(z.real < 0 for z in eigs)):
        return StabilityVerdict(Label.HYPERBOLIC_SADDLE, eigs, sub, ratio)
    return StabilityVerdict(Label.ANTI_SADDLE, eigs, sub, ratio)


def classify_equilibrium(p: ModelParams, eq: Equilibrium) -> StabilityVerdict:
    if eq.kind is Kind.COEXISTENCE:
        cc = char_coeffs(p, eq)
    else:
        cc = coeffs_from_matrix(jacobian(p, eq.x))
    return classify(cc)

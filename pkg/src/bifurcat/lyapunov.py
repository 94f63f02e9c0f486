"""First and second Lyapunov coefficients at a Hopf point.

The normal form is computed by the projection method: the centre-manifold
map W(z, zbar) = sum h_jk z^j zbar^k and the reduced flow
dz/dt = i omega z + sum G_jk z^j zbar^k are solved degree by degree from the
homological equation.  Resonant terms (j - k = 1) are projected with the
adjoint eigenvector and the remainder solved through a bordered system.

Normalisation: <q, q> = 1 and <p, q> = 1 with <u, v> = conj(u) . v.
Then c1 = G_21, c2 = G_32, l1 = Re c1 / omega and l2 = Re c2 / omega.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .equilibria import Equilibrium
from .model import ModelParams, jacobian, multilinear_derivative
from .stability import HOPF_RTOL, char_coeffs_at, hopf_ratio

L1_ZERO_RTOL = 1e-6


class NotAHopfPoint(ValueError):
    pass


class L1NotSmall(ValueError):
    pass


@dataclass(frozen=True)
class HopfNormalForm:
    omega: float
    q: np.ndarray
    p_adj: np.ndarray
    coefficients: dict
    l1: float
    l2: Optional[float] = None

    @property
    def c1(self) -> complex:
        return self.coefficients[(2, 1)]

    @property
    def c2(self) -> Optional[complex]:
        return self.coefficients.get((3, 2))

    @property
    def re_c1(self) -> float:
        """Re c1 = l1 * omega, the coefficient without division by omega."""
        return self.c1.real


def critical_eigenvectors(A: np.ndarray):
    """(omega, q, p) for the eigenvalue pair closest to the imaginary axis
    with positive imaginary part."""
    ev, V = np.linalg.eig(A)
    cand = [i for i in range(len(ev)) if ev[i].imag > 0]
    if not cand:
        raise NotAHopfPoint("no complex eigenvalue pair")
    i = min(cand, key=lambda k: abs(ev[k].real))
    lam = ev[i]
    omega = lam.imag
    q = V[:, i] / np.linalg.norm(V[:, i])
    evT, W = np.linalg.eig(A.T)
    j = int(np.argmin(np.abs(evT - np.conj(lam))))
    pv = W[:, j]
    pv = pv / np.conj(np.vdot(pv, q))
    # refine q and p against the purely imaginary eigenvalue
    for _ in range(2):
        q = _refine(A, 1j * omega, q)
        pv = _refine(A.T, -1j * omega, pv)
    q = q / np.linalg.norm(q)
    pv = pv / np.conj(np.vdot(pv, q))
    return omega, q, pv


def _refine(A, lam, v):
    n = A.shape[0]
    B = np.zeros((n + 1, n + 1), dtype=complex)
    B[:n, :n] = A - lam * np.eye(n)
    B[:n, n] = np.conj(v)
    B[n, :n] = np.conj(v)
    rhs = np.zeros(n + 1, dtype=complex)
    rhs[n] = np.vdot(v, v)
    try:
        sol = np.linalg.solve(B, rhs)
    except np.linalg.LinAlgError:
        return v
    return sol[:n]


def _multiplicities(tup):
    counts: dict = {}
    for t in tup:
        counts[t] = counts.get(t, 0) + 1
    return counts.values()


def normal_form(A: np.ndarray, D: Callable[[list], np.ndarray], order: int = 3,
                omega: Optional[float] = None, q=None, p_adj=None):
    """Normal-form coefficients G_jk (j - k = 1) up to the given odd order.

    ``D(vectors)`` must return the symmetric multilinear derivative of order
    ``len(vectors)`` at the equilibrium.
    """
    if order not in (3, 5):
        raise ValueError("order must be 3 or 5")
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if q is None:
        omega, q, p_adj = critical_eigenvectors(A)
    H = {(1, 0): q, (0, 1): np.conj(q)}
    G: dict = {}
    eye = np.eye(n)
    for d in range(2, order + 1):
        keys = [k for k in H if sum(k) < d]
        for jj in range(d, -1, -1):
            kk = d - jj
            if jj < kk:
                continue
            R = np.zeros(n, dtype=complex)
            for nn in range(2, d + 1):
                # D is symmetric: visit multisets once, weighted by their
                # number of orderings over nn!
                for tup in itertools.combinations_with_replacement(keys, nn):
                    if sum(t[0] for t in tup) == jj and sum(t[1] for t in tup) == kk:
                        w = 1.0
                        for cnt in _multiplicities(tup):
                            w /= math.factorial(cnt)
                        R += D([H[t] for t in tup]) * w
            L = np.zeros(n, dtype=complex)
            for (gj, gk), g in G.items():
                for (hj, hk), h in H.items():
                    if hj >= 1 and hj - 1 + gj == jj and hk + gk == kk:
                        L += hj * h * g
                    if hk >= 1 and hj + gk == jj and hk - 1 + gj == kk:
                        L += hk * h * np.conj(g)
            rhs = R - L
            lam = 1j * omega * (jj - kk)
            if jj - kk == 1:
                g = np.vdot(p_adj, rhs)
                G[(jj, kk)] = g
                B = np.zeros((n + 1, n + 1), dtype=complex)
                B[:n, :n] = lam * eye - A
                B[:n, n] = q
                B[n, :n] = np.conj(p_adj)
                sol = np.linalg.solve(B, np.concatenate([rhs, [0.0]]))
                H[(jj, kk)] = sol[:n]
            else:
                H[(jj, kk)] = np.linalg.solve(lam * eye - A, rhs)
            if jj != kk:
                H[(kk, jj)] = np.conj(H[(jj, kk)])
    return omega, q, p_adj, G


def first_lyapunov_formula(A, B: Callable, C: Callable, omega, q, p_adj) -> float:
    """Closed projection formula for l1 from the bilinear and trilinear forms."""
    n = A.shape[0]
    qb = np.conj(q)
    h11 = np.linalg.solve(A, B(q, qb))
    h20 = np.linalg.solve(2j * omega * np.eye(n) - A, B(q, q))
    val = (np.vdot(p_adj, C(q, q, qb)) - 2.0 * np.vdot(p_adj, B(q, h11))
           + np.vdot(p_adj, B(qb, h20)))
    return float(val.real / (2.0 * omega))


def _hopf_data(p: ModelParams, eq: Equilibrium, check: bool):
    x = eq.x
    if check:
        cc = char_coeffs_at(p, eq.E2)
        ratio = hopf_ratio(cc)
        if not ratio < HOPF_RTOL:
            raise NotAHopfPoint(
                f"no purely imaginary pair at E2 = {eq.E2}: |Re lambda|/omega ~ {ratio:.3g}")
    A = jacobian(p, x)
    D = lambda vs: multilinear_derivative(p, x, len(vs), vs)
    return A, D


def first_lyapunov(p: ModelParams, eq: Equilibrium, check: bool = True) -> tuple[float, HopfNormalForm]:
    A, D = _hopf_data(p, eq, check)
    omega, q, pv, G = normal_form(A, D, 3)
    l1 = float(G[(2, 1)].real / omega)
    return l1, HopfNormalForm(omega, q, pv, G, l1)


def hopf_normal_form(p: ModelParams, eq: Equilibrium, check: bool = True) -> HopfNormalForm:
    """Both coefficients without the smallness gate on l1."""
    A, D = _hopf_data(p, eq, check)
    omega, q, pv, G = normal_form(A, D, 5)
    return HopfNormalForm(omega, q, pv, G, float(G[(2, 1)].real / omega),
                          float(G[(3, 2)].real / omega))


def second_lyapunov(p: ModelParams, eq: Equilibrium, check: bool = True) -> float:
    nf = hopf_normal_form(p, eq, check)
    if abs(nf.l1) >= L1_ZERO_RTOL * (1.0 + abs(nf.l2)):
        raise L1NotSmall(f"l1 = {nf.l1:.3g} is not small enough for l2 to be meaningful")
    return nf.l2


class Criticality(str, enum.Enum):
    SUBCRITICAL = "Subcritical"
    SUPERCRITICAL = "Supercritical"
    BAUTIN = "BautinCandidate"
    HIGHER = "HigherDegenerate"


@dataclass(frozen=True)
class Verdict:
    kind: Criticality
    l2_sign: int = 0

    def __str__(self):
        if self.kind is Criticality.BAUTIN:
            return f"{self.kind.value}({'negative' if self.l2_sign < 0 else 'positive'} l2)"
        return self.kind.value


def criticality_verdict(l1: float, l2: Optional[float] = None, scale: float = 1.0) -> Verdict:
    tol = L1_ZERO_RTOL * scale
    if abs(l1) >= tol:
        return Verdict(Criticality.SUBCRITICAL if l1 > 0 else Criticality.SUPERCRITICAL)
    if l2 is None or not math.isfinite(l2) or abs(l2) < tol:
        return Verdict(Criticality.HIGHER)
    return Verdict(Criticality.BAUTIN, 1 if l2 > 0 else -1)

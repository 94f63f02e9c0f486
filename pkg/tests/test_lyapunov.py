import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bifurcat.equilibria import coexistence_equilibria
from bifurcat.lyapunov import (Criticality, L1NotSmall, NotAHopfPoint, critical_eigenvectors,
                               criticality_verdict, first_lyapunov, first_lyapunov_formula,
                               hopf_normal_form, normal_form, second_lyapunov)
from bifurcat.model import jacobian, multilinear_derivative

from conftest import P1, SCENARIOS, hopf_equilibrium

PAPER_L1 = {"P1": 0.02036690, "P2": 0.004838562}


def polarized(parts):
    """Multilinear derivative from homogeneous parts {k: f_k}."""
    def D(vs):
        k = len(vs)
        fk = parts.get(k)
        if fk is None:
            return np.zeros(3, dtype=complex)
        out = np.zeros(3, dtype=complex)
        for eps in itertools.product((1, -1), repeat=k):
            out += np.prod(eps) * fk(sum(e * v for e, v in zip(eps, vs)))
        return out / 2 ** k
    return D


@pytest.mark.parametrize("a1,a2,omega", [(-0.7, 0.3, 1.0), (0.25, -1.1, 2.5)])
def test_engine_on_planar_normal_form(a1, a2, omega):
    # x' = -w y + x (a1 r^2 + a2 r^4), y' = w x + y (...), z' = -z.
    # With |q| = 1 the complex coordinate is z/sqrt(2), so c1 = 2 a1 and c2 = 4 a2.
    A = np.array([[0.0, -omega, 0.0], [omega, 0.0, 0.0], [0.0, 0.0, -1.0]])
    r2 = lambda v: v[0] * v[0] + v[1] * v[1]
    parts = {3: lambda v: a1 * r2(v) * np.array([v[0], v[1], 0 * v[0]]),
             5: lambda v: a2 * r2(v) ** 2 * np.array([v[0], v[1], 0 * v[0]])}
    w, q, pv, G = normal_form(A, polarized(parts), 5)
    assert w == pytest.approx(omega)
    assert G[(2, 1)].real == pytest.approx(2 * a1, rel=1e-12)
    assert G[(3, 2)].real == pytest.approx(4 * a2, rel=1e-12)


def random_hopf_matrix(rng, omega):
    S = rng.normal(size=(3, 3)) + 3 * np.eye(3)
    blk = np.array([[0.0, -omega, 0.0], [omega, 0.0, 0.0], [0.0, 0.0, -abs(rng.normal()) - 0.5]])
    return S @ blk @ np.linalg.inv(S)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0.3, 3.0))
def test_engine_matches_closed_formula(seed, omega):
    rng = np.random.default_rng(seed)
    A = random_hopf_matrix(rng, omega)
    T2 = rng.normal(size=(3, 3, 3))
    T2 = (T2 + T2.transpose(0, 2, 1)) / 2
    T3 = rng.normal(size=(3, 3, 3, 3))
    T3 = sum(T3.transpose((0,) + tuple(1 + np.array(s))) for s in itertools.permutations(range(3))) / 6
    B = lambda u, v: np.einsum("ijk,j,k->i", T2, u, v)
    C = lambda u, v, w: np.einsum("ijkl,j,k,l->i", T3, u, v, w)
    D = lambda vs: B(*vs) if len(vs) == 2 else C(*vs) if len(vs) == 3 else np.zeros(3)
    w, q, pv, G = normal_form(A, D, 3)
    l1 = first_lyapunov_formula(A, B, C, w, q, pv)
    assert G[(2, 1)].real / w == pytest.approx(l1, rel=1e-9, abs=1e-12)


def test_eigenvector_normalisation():
    A = jacobian(P1, hopf_equilibrium(P1).x)
    w, q, pv = critical_eigenvectors(A)
    assert np.vdot(q, q).real == pytest.approx(1.0)
    assert np.vdot(pv, q) == pytest.approx(1.0)
    # P1 is a Hopf point only to |Re lambda| ~ 6e-8, which bounds the residual
    assert np.linalg.norm(A @ q - 1j * w * q) < 1e-7
    assert np.linalg.norm(A.T @ pv + 1j * w * pv) < 1e-7 * np.linalg.norm(pv)


@pytest.mark.parametrize("name", ["P1", "P2"])
def test_first_lyapunov_positive(name):
    p = SCENARIOS[name]
    l1, nf = first_lyapunov(p, hopf_equilibrium(p))
    assert l1 > 0
    assert nf.re_c1 == pytest.approx(l1 * nf.omega)
    # the published value is Re c1; agreement is a diagnostic of normalisation
    assert nf.re_c1 == pytest.approx(PAPER_L1[name], rel=2e-4)


def test_order5_engine_reproduces_l1():
    # same answer from the order-5 engine and the order-3 call
    eq = hopf_equilibrium(P1)
    l1, _ = first_lyapunov(P1, eq)
    assert hopf_normal_form(P1, eq).l1 == pytest.approx(l1, rel=1e-12)


def test_second_lyapunov_gate_and_p4_sign():
    with pytest.raises(L1NotSmall):
        second_lyapunov(P1, hopf_equilibrium(P1))
    p4 = SCENARIOS["P4"]
    nf = hopf_normal_form(p4, hopf_equilibrium(p4))
    assert abs(nf.l1) < 1e-6
    # the generalized Hopf point near P4 has l2 < 0
    assert nf.l2 == pytest.approx(-2.818e-3, rel=1e-3)
    assert second_lyapunov(p4, hopf_equilibrium(p4)) == nf.l2


def test_not_a_hopf_point():
    q = P1.with_(kappa1=24.0)
    with pytest.raises(NotAHopfPoint):
        first_lyapunov(q, coexistence_equilibria(q)[0])


def test_model_multilinear_feeds_engine():
    eq = hopf_equilibrium(P1)
    D = lambda vs: multilinear_derivative(P1, eq.x, len(vs), vs)
    A = jacobian(P1, eq.x)
    w, q, pv, G = normal_form(A, D, 3)
    B = lambda u, v: D([u, v])
    C = lambda u, v, z: D([u, v, z])
    assert G[(2, 1)].real / w == pytest.approx(first_lyapunov_formula(A, B, C, w, q, pv), rel=1e-10)


def test_criticality_verdicts():
    assert criticality_verdict(0.1).kind is Criticality.SUBCRITICAL
    assert criticality_verdict(-0.1).kind is Criticality.SUPERCRITICAL
    v = criticality_verdict(1e-9, -0.5)
    assert v.kind is Criticality.BAUTIN and v.l2_sign == -1
    assert str(v) == "BautinCandidate(negative l2)"
    assert criticality_verdict(1e-9, 1e-9).kind is Criticality.HIGHER
    assert criticality_verdict(1e-9, math.nan).kind is Criticality.HIGHER
    assert criticality_verdict(1e-9).kind is Criticality.HIGHER

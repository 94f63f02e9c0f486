import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bifurcat.model import (PARAM_NAMES, ModelParams, SingularStateError, ScaleMap, is_biological,
                            jacobian, multilinear_derivative, nondimensionalize, param_derivative,
                            vector_field)

from conftest import P1, P1_EQ

pos = st.floats(0.05, 80.0, allow_nan=False)
params = st.builds(ModelParams, pos, pos, pos, pos, st.floats(1e-3, 1.0), pos, pos, pos)
state = st.tuples(st.floats(0.0, 5.0), st.floats(0.0, 5.0), st.floats(0.0, 100.0)).map(np.array)


def fd_jacobian(p, x, h=1e-6):
    J = np.zeros((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h * max(1.0, abs(x[j]))
        J[:, j] = (vector_field(p, x + e) - vector_field(p, x - e)) / (2 * e[j])
    return J


def test_params_reject_nonpositive_and_nonfinite():
    for bad in (0.0, -1.0, float("nan"), float("inf")):
        with pytest.raises(ValueError):
            P1.with_(kappa1=bad)
    with pytest.raises(ValueError):
        ModelParams(1, 1, 1, 1, "x")


def test_params_accessors():
    assert P1.get("kappa2") == 0.026671
    assert list(P1.as_dict()) == list(PARAM_NAMES)
    with pytest.raises(KeyError):
        P1.get("beta")


def test_field_at_published_equilibrium_is_small():
    assert np.max(np.abs(vector_field(P1, P1_EQ))) < 1e-9 * 73


def test_pole_raises():
    with pytest.raises(SingularStateError):
        vector_field(P1, [0.1, -1.0, 1.0])
    with pytest.raises(SingularStateError):
        jacobian(P1, [0.1, -1.0, 1.0])


def test_boundary_planes_invariant():
    # E1 = E2 = 0 and M = 0 are invariant
    assert vector_field(P1, [0.0, 0.0, 5.0])[:2].tolist() == [0.0, 0.0]
    assert vector_field(P1, [0.3, 0.4, 0.0])[2] == 0.0
    assert is_biological([0, 1, 2]) and not is_biological([0, -1e-9, 2])


@settings(max_examples=60, deadline=None)
@given(params, state)
def test_jacobian_matches_finite_differences(p, x):
    J = jacobian(p, x)
    np.testing.assert_allclose(J, fd_jacobian(p, x), rtol=1e-5, atol=1e-5 * (1 + np.abs(J).max()))


@settings(max_examples=40, deadline=None)
@given(params, state, st.sampled_from(PARAM_NAMES))
def test_param_derivative_matches_finite_differences(p, x, name):
    v = p.get(name)
    h = 1e-6 * v
    fd = (vector_field(p.with_(**{name: v + h}), x) - vector_field(p.with_(**{name: v - h}), x)) / (2 * h)
    np.testing.assert_allclose(param_derivative(p, x, name), fd, rtol=1e-5, atol=1e-6)


def _line_derivative_oracle():
    """Symbolic k-th derivative of t -> f(x + t v) at t = 0."""
    sp = pytest.importorskip("sympy")
    t = sp.Symbol("t")
    syms = sp.symbols("r1 r2 alpha kappa1 kappa2 a c m x0 x1 x2 v0 v1 v2")
    r1, r2, al, k1, k2, a, c, m, x0, x1, x2, v0, v1, v2 = syms
    e1, e2, mm = x0 + t * v0, x1 + t * v1, x2 + t * v2
    hol = e2 * mm / (a + e2)
    f = [r1 * e2 - al * e1, al * e1 - k1 * e2 ** 2 - m * hol, r2 * mm - k2 * mm ** 2 + c * m * hol]
    return {k: sp.lambdify(syms, [sp.diff(fi, t, k).subs(t, 0) for fi in f]) for k in range(2, 6)}


ORACLE = {}


@settings(max_examples=30, deadline=None)
@given(params, state, st.integers(2, 5), st.integers(0, 2 ** 31))
def test_multilinear_matches_directional_derivative(p, x, k, seed):
    if not ORACLE:
        ORACLE.update(_line_derivative_oracle())
    v = np.random.default_rng(seed).normal(size=3)
    got = multilinear_derivative(p, x, k, [v] * k)
    ref = np.array(ORACLE[k](*[p.get(n) for n in PARAM_NAMES], *x, *v), dtype=float)
    np.testing.assert_allclose(got, ref, rtol=1e-9, atol=1e-9 * (1 + np.abs(ref).max()))


def test_multilinear_is_symmetric_and_complex_linear():
    rng = np.random.default_rng(3)
    u, v, w = (rng.normal(size=3) + 1j * rng.normal(size=3) for _ in range(3))
    a = multilinear_derivative(P1, P1_EQ, 3, [u, v, w])
    b = multilinear_derivative(P1, P1_EQ, 3, [w, u, v])
    np.testing.assert_allclose(a, b, rtol=1e-12)
    np.testing.assert_allclose(multilinear_derivative(P1, P1_EQ, 3, [2j * u, v, w]), 2j * a,
                               rtol=1e-12)
    with pytest.raises(ValueError):
        multilinear_derivative(P1, P1_EQ, 6, [u] * 6)


@settings(max_examples=40, deadline=None)
@given(params, state)
def test_nondimensionalization_conjugates_flows(p, x):
    # d/dtau (S^-1 x) = T * S^-1 f(x) must equal f_hat(S^-1 x)
    hat, sm = nondimensionalize(p)
    assert (hat.a, hat.c, hat.m) == (1.0, 1.0, 1.0)
    lhs = sm.time_scale * sm.to_rescaled(vector_field(p, x))
    rhs = vector_field(hat, sm.to_rescaled(x))
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-9 * (1 + np.abs(rhs).max()))


def test_nondimensionalization_kappa2_scaling():
    p = P1.with_(a=2.0, c=3.0, m=5.0)
    hat, sm = nondimensionalize(p)
    assert hat.kappa2 == pytest.approx(p.a * p.kappa2 / p.m)
    assert sm.from_rescaled_time(sm.to_rescaled_time(7.0)) == pytest.approx(7.0)
    assert ScaleMap((1.0, 1.0, 1.0), 1.0).is_identity
    assert nondimensionalize(P1)[1].is_identity

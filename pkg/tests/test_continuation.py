import math

import numpy as np
import pytest

from bifurcat.continuation import (BifurcationEvent, ContinuationError, CycleNotFound,
                                   StepControl, continue_equilibrium, continue_hopf,
                                   fd_transversality, find_limit_cycle, floquet_multipliers,
                                   hopf_point_in, shoot)
from bifurcat.equilibria import coexistence_equilibria
from bifurcat.model import vector_field

from conftest import P1, hopf_equilibrium

K1_HOPF = 23.2197961461739


@pytest.fixture(scope="module")
def p1_branch():
    eq = coexistence_equilibria(P1)[0]
    return continue_equilibrium(P1, eq, "kappa1", (22.6, 24.3), StepControl(h0=0.01, hmax=0.05))


def test_branch_points_are_equilibria(p1_branch):
    for pt in p1_branch.points:
        q = P1.with_(kappa1=pt.values[0])
        assert np.max(np.abs(vector_field(q, pt.x))) < 1e-8 * (1 + np.abs(pt.x).max())
    s = [pt.s for pt in p1_branch.points]
    assert s == sorted(s)


def test_branch_events(p1_branch):
    kinds = [e.kind for e in p1_branch.events]
    assert kinds.count("H") == 1
    assert kinds.count("LP") == 2
    for e in p1_branch.events:
        c = e.certificates
        if e.kind == "LP":
            assert abs(c["A0"]) < 1e-7 * (1 + abs(c["A1"] * c["A2"]))
        if e.kind == "H":
            assert c["A1"] > 0 and abs(c["A0_minus_A1A2"]) < 1e-7
            assert c["l1"] > 0 and c["transversality_fd"] != 0
    json_ = p1_branch.events[0].to_json()
    assert set(json_) == {"kind", "location", "certificates"}
    assert set(json_["location"]) == {"kappa1", "E1", "E2", "M"}


def test_limit_points_fold_the_branch(p1_branch):
    # the free parameter turns back at each LP
    vals = [pt.values[0] for pt in p1_branch.points]
    turns = sum(1 for i in range(1, len(vals) - 1)
                if (vals[i] - vals[i - 1]) * (vals[i + 1] - vals[i]) < 0)
    assert turns == 2


def test_equilibrium_round_trip(p1_branch):
    # an emitted point is a fixed point of the corrector
    from bifurcat.continuation import _Curve, _eq_system
    F, DF = _eq_system(P1, "kappa1")
    curve = _Curve(F, DF, lambda u: u[3] > 0)
    for pt in p1_branch.points[::25]:
        u = np.append(pt.x, pt.values[0])
        u2, nit = curve.correct(u, np.eye(4)[3])
        assert nit == 1
        np.testing.assert_allclose(u2, u, rtol=1e-9)


def test_bad_inputs():
    eq = coexistence_equilibria(P1)[0]
    with pytest.raises(KeyError):
        continue_equilibrium(P1, eq, "beta", (0, 1))
    with pytest.raises(ValueError):
        continue_hopf(P1, eq.x, ("alpha",), {"alpha": (1, 2)})
    with pytest.raises(ContinuationError):
        hopf_point_in(P1.with_(kappa1=23.8), "kappa1", (23.5, 24.0))


def test_fd_transversality_sign():
    eq = hopf_equilibrium(P1)
    d = fd_transversality(P1, eq.x, "kappa1")
    # the pair moves into the right half-plane as kappa1 grows
    assert d > 0 and math.isfinite(d)


def test_hopf_curve_points():
    eq = hopf_equilibrium(P1)
    br = continue_hopf(P1, eq.x, ("alpha", "kappa1"), {"alpha": (45, 60), "kappa1": (22, 26)},
                       max_points=40)
    assert len(br.points) > 5
    for pt in br.points:
        c = pt.coeffs
        assert c.A1 > 0 and abs(c.A0 - c.A1 * c.A2) < 1e-7 * (1 + abs(c.A0))


@pytest.fixture(scope="module")
def p1_cycle():
    h = hopf_point_in(P1, "kappa1", (23.1, 23.3))
    return h, find_limit_cycle(P1, h, -1e-3, "kappa1")


def test_p1_cycle(p1_cycle):
    h, cyc = p1_cycle
    assert cyc.method == "reverse-multiple"
    assert cyc.closure < 1e-8
    assert cyc.period == pytest.approx(2 * math.pi / h.certificates["omega"], rel=0.05)
    assert not cyc.stable
    assert np.max(np.abs(cyc.nontrivial_multipliers)) > 1.0


def test_cycle_round_trip(p1_cycle):
    # fed back to plain forward shooting, the cycle reconverges in one step
    h, cyc = p1_cycle
    f = vector_field(cyc.params, cyc.anchor)
    x0, T, nit = shoot(cyc.params, cyc.anchor, cyc.period, cyc.anchor, f / np.linalg.norm(f))
    assert nit == 1
    np.testing.assert_allclose(x0, cyc.anchor, rtol=1e-8)


def test_trivial_multiplier(p1_cycle):
    _, cyc = p1_cycle
    mu = floquet_multipliers(cyc.params, cyc.anchor, cyc.period)
    assert np.min(np.abs(mu - 1.0)) < 1e-6
    # the fast direction contracts by about exp(-109 T), below round-off
    assert np.min(np.abs(mu)) < 1e-10


def test_wrong_side_has_no_small_cycle(p1_cycle):
    h, _ = p1_cycle
    with pytest.raises(CycleNotFound):
        find_limit_cycle(P1, h, +1e-3, "kappa1")


def test_event_json_keeps_booleans():
    ev = BifurcationEvent("GH", 0.0, {"alpha": 1.0}, np.ones(3), P1, {"degenerate": False, "l2": 1})
    assert ev.to_json()["certificates"] == {"degenerate": False, "l2": 1.0}

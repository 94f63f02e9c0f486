"""Pseudo-arclength continuation of equilibria and Hopf curves, and shooting
for limit cycles.

Equilibrium branches solve f(x; lam) = 0 in (x, lam).  Test functions on
every point are

    tau_LP = A0,  tau_H = A1 A2 - A0 (with A1 > 0),
    tau_BP = det [[f_x, f_lam], [t^T]]

and sign changes are refined by Brent's method in arclength.  Hopf curves
solve {f = 0, A0 - A1 A2 = 0} in two parameters and monitor l1 (GH) and A1
(BT).  Cycles are found by Newton shooting with a Poincare phase condition.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .equilibria import coexistence_equilibria
from .integrator import flow, flow_with_sensitivity, integrate, IntegrationConfig
from .lyapunov import L1_ZERO_RTOL, hopf_normal_form, normal_form
from .model import (ModelParams, PARAM_NAMES, SingularStateError, jacobian,
                    multilinear_derivative, param_derivative, vector_field)
from .stability import CharCoeffs, coeffs_from_matrix, roots_of

log = logging.getLogger(__name__)

NEWTON_TOL = 1e-10
NEWTON_MAXIT = 8
EVENT_STOL = 1e-9
# log of the growth allowed on one reversed shooting segment
SEGMENT_GROWTH = 8.0
MAX_HALVINGS = 6
# residual level at which reversed-flow integration error dominates
NOISE_RTOL = 1e-9


class ContinuationError(RuntimeError):
    pass


class CycleNotFound(RuntimeError):
    pass


@dataclass(frozen=True)
class StepControl:
    h0: float = 1e-2
    hmin: float = 1e-8
    hmax: float = 0.5


@dataclass
class BranchPoint:
    s: float
    values: tuple
    x: np.ndarray
    coeffs: CharCoeffs
    tau_lp: float
    tau_h: float
    tau_bp: float = math.nan
    l1: float = math.nan


@dataclass
class BifurcationEvent:
    kind: str
    s: float
    values: dict
    x: np.ndarray
    params: ModelParams
    certificates: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        loc = dict(self.values)
        loc.update(E1=float(self.x[0]), E2=float(self.x[1]), M=float(self.x[2]))
        return {"kind": self.kind, "location": loc,
                "certificates": {k: v if isinstance(v, bool) else
                                 float(v) if isinstance(v, (int, float, np.floating)) else v
                                 for k, v in self.certificates.items()}}


@dataclass
class Branch:
    free_params: tuple
    points: list = field(default_factory=list)
    events: list = field(default_factory=list)
    terminated: str = ""


# ---------------------------------------------------------------------------
# generic pseudo-arclength engine


def _check_names(names):
    for n in names:
        if n not in PARAM_NAMES:
            raise KeyError(f"unknown parameter {n!r}")


def _params_of(p: ModelParams, names, vals) -> ModelParams:
    return p.with_(**{n: float(v) for n, v in zip(names, vals)})


def _tangent(DF: np.ndarray, prev: Optional[np.ndarray]) -> np.ndarray:
    if prev is None:
        _, _, vt = np.linalg.svd(DF)
        t = vt[-1]
    else:
        B = np.vstack([DF, prev])
        rhs = np.zeros(B.shape[0])
        rhs[-1] = 1.0
        t = np.linalg.solve(B, rhs)
    t = t / np.linalg.norm(t)
    if prev is not None and np.dot(t, prev) < 0:
        t = -t
    return t


class _Curve:
    """F: R^n -> R^(n-1) with Jacobian DF, traced by pseudo-arclength."""

    def __init__(self, F, DF, in_domain):
        self.F, self.DF, self.in_domain = F, DF, in_domain

    def correct(self, u_pred, t, target=None, u_base=None):
        """Newton on [F(u); t.(u - u_base) - target] = 0."""
        if u_base is None:
            u_base, target = u_pred, 0.0
        u = u_pred.copy()
        for it in range(NEWTON_MAXIT):
            if not self.in_domain(u):
                return None, it
            try:
                Fu = self.F(u)
                J = self.DF(u)
            except (SingularStateError, ValueError):
                return None, it
            r = np.append(Fu, np.dot(t, u - u_base) - target)
            try:
                du = np.linalg.solve(np.vstack([J, t]), -r)
            except np.linalg.LinAlgError:
                return None, it
            u = u + du
            if not np.all(np.isfinite(u)):
                return None, it
            if np.linalg.norm(du) <= NEWTON_TOL * (1.0 + np.linalg.norm(u)):
                if not self.in_domain(u):
                    return None, it
                try:
                    res = np.max(np.abs(self.F(u)))
                except (SingularStateError, ValueError):
                    return None, it
                if res < 1e-9 * (1.0 + np.max(np.abs(u))):
                    return u, it + 1
        return None, NEWTON_MAXIT

    def trace(self, u0, direction, step: StepControl, max_points, stop):
        """Yield (s, u, t) along the curve starting at u0.  ``direction`` is
        a vector used to orient the first tangent."""
        t = _tangent(self.DF(u0), None)
        if np.dot(t, direction) < 0:
            t = -t
        s, u, h = 0.0, u0, step.h0
        yield s, u, t
        reason = "max_points"
        for _ in range(max_points):
            while True:
                u_new, nit = self.correct(u + h * t, t)
                if u_new is not None:
                    break
                h *= 0.5
                if h < step.hmin:
                    reason = "step_underflow"
                    break
            if u_new is None:
                break
            t_new = _tangent(self.DF(u_new), t)
            s += float(np.linalg.norm(u_new - u))
            u, t = u_new, t_new
            yield s, u, t
            if stop(u):
                reason = "range"
                break
            if nit <= 3:
                h = min(h * 1.5, step.hmax)
        self.reason = reason


def _locate(curve: _Curve, a, b, fn: Callable[[np.ndarray], float]):
    """Refine a sign change of fn between consecutive points a=(s,u,t) and
    b by Brent's method in arclength measured along a's tangent."""
    sa, ua, ta = a
    sb, ub, _ = b
    span = float(np.dot(ta, ub - ua))
    cache = {}

    def at(d):
        u, _ = curve.correct(ua + d * ta, ta, target=d, u_base=ua)
        if u is None:
            raise ContinuationError("corrector failed while locating an event")
        cache[d] = u
        return u

    g = lambda d: fn(at(d))
    ga, gb = fn(ua), fn(ub)
    if ga == 0:
        return sa, ua
    if gb == 0:
        return sb, ub
    d = brentq(g, 0.0, span, xtol=EVENT_STOL, rtol=4 * np.finfo(float).eps)
    u = cache.get(d)
    if u is None:
        u = at(d)
    return sa + d, u


# ---------------------------------------------------------------------------
# equilibrium branches


def _eq_system(p: ModelParams, name: str):
    def F(u):
        return vector_field(_params_of(p, [name], u[3:]), u[:3])

    def DF(u):
        q = _params_of(p, [name], u[3:])
        return np.column_stack([jacobian(q, u[:3]), param_derivative(q, u[:3], name)])

    return F, DF


def _eq_point(p, name, s, u, t, DF) -> BranchPoint:
    q = _params_of(p, [name], u[3:])
    cc = coeffs_from_matrix(jacobian(q, u[:3]))
    tau_bp = float(np.linalg.det(np.vstack([DF(u), t])))
    return BranchPoint(s, (float(u[3]),), u[:3].copy(), cc, cc.A0,
                       cc.A1 * cc.A2 - cc.A0, tau_bp)


def _tau_h_gated(cc):
    return cc.A1 * cc.A2 - cc.A0


def continue_equilibrium(p: ModelParams, start, free: str, bounds: tuple,
                         step: StepControl = StepControl(), direction: int = 1,
                         max_points: int = 2000) -> Branch:
    """Trace the equilibrium branch through ``start`` in parameter ``free``
    between ``bounds``.  ``direction`` is +1/-1 for the initial sense of the
    free parameter."""
    _check_names([free])
    lo, hi = bounds
    x0 = np.asarray(getattr(start, "x", start), dtype=float)
    F, DF = _eq_system(p, free)
    u0 = np.append(x0, p.get(free))
    # polish the start
    u0c, _ = _Curve(F, DF, lambda u: u[3] > 0).correct(u0, np.eye(4)[3])
    if u0c is None:
        raise ContinuationError("start point is not an equilibrium")
    curve = _Curve(F, DF, lambda u: u[3] > 0)
    dirv = np.zeros(4)
    dirv[3] = direction
    stop = lambda u: not (lo <= u[3] <= hi)
    br = Branch((free,))
    trail = []
    for s, u, t in curve.trace(u0c, dirv, step, max_points, stop):
        pt = _eq_point(p, free, s, u, t, DF)
        br.points.append(pt)
        trail.append((s, u, t))
    br.terminated = getattr(curve, "reason", "")
    _equilibrium_events(p, free, curve, trail, br)
    return br


def _equilibrium_events(p, free, curve, trail, br: Branch):
    DF = curve.DF
    for k in range(1, len(trail)):
        a, b = trail[k - 1], trail[k]
        pa, pb = br.points[k - 1], br.points[k]
        bp_change = pa.tau_bp * pb.tau_bp < 0
        if bp_change:
            sev, u = _locate(curve, a, b, lambda u: float(np.linalg.det(
                np.vstack([DF(u), _tangent(DF(u), a[2])]))))
            br.events.append(_make_eq_event("BP", p, free, sev, u))
        elif pa.tau_lp * pb.tau_lp < 0:
            sev, u = _locate(curve, a, b, lambda u: _cc_at(p, free, u).A0)
            br.events.append(_make_eq_event("LP", p, free, sev, u))
        if pa.tau_h * pb.tau_h < 0 and (pa.coeffs.A1 > 0 or pb.coeffs.A1 > 0):
            sev, u = _locate(curve, a, b, lambda u: _tau_h_gated(_cc_at(p, free, u)))
            if _cc_at(p, free, u).A1 > 0:
                br.events.append(_make_eq_event("H", p, free, sev, u))
    br.events.sort(key=lambda e: e.s)


def _cc_at(p, free, u) -> CharCoeffs:
    return coeffs_from_matrix(jacobian(_params_of(p, [free], u[3:]), u[:3]))


def _critical_real_part(q: ModelParams, x) -> float:
    ev = roots_of(coeffs_from_matrix(jacobian(q, x)))
    cplx = [z for z in ev if z.imag != 0]
    if not cplx:
        return math.nan
    return max(cplx, key=lambda z: z.imag).real


def fd_transversality(p: ModelParams, x, free: str, h: float = 1e-5) -> float:
    """Centred difference of Re(critical pair) along the equilibrium branch."""
    vals = []
    for sgn in (1, -1):
        lam = p.get(free) + sgn * h
        q = p.with_(**{free: lam})
        xx = np.asarray(x, float).copy()
        for _ in range(20):
            dx = np.linalg.solve(jacobian(q, xx), -vector_field(q, xx))
            xx += dx
            if np.linalg.norm(dx) < 1e-14 * (1 + np.linalg.norm(xx)):
                break
        vals.append(_critical_real_part(q, xx))
    return (vals[0] - vals[1]) / (2.0 * h)


def _make_eq_event(kind, p, free, s, u) -> BifurcationEvent:
    q = _params_of(p, [free], u[3:])
    x = u[:3].copy()
    cc = coeffs_from_matrix(jacobian(q, x))
    cert = {"A0": cc.A0, "A1": cc.A1, "A2": cc.A2, "A0_minus_A1A2": cc.A0 - cc.A1 * cc.A2,
            "residual": float(np.max(np.abs(vector_field(q, x))))}
    if kind == "H":
        cert["transversality_fd"] = fd_transversality(q, x, free)
        try:
            nf = hopf_normal_form(q, _as_eq(x), check=False)
            cert["l1"] = nf.l1
            cert["omega"] = nf.omega
        except Exception as exc:  # pragma: no cover - diagnostic only
            log.debug("normal form failed at H: %s", exc)
    return BifurcationEvent(kind, s, {free: float(u[3])}, x, q, cert)


def _as_eq(x):
    from .equilibria import Equilibrium, Kind
    return Equilibrium(tuple(float(v) for v in x), Kind.COEXISTENCE, 1, "")


# ---------------------------------------------------------------------------
# Hopf curves


def _hopf_fn(q: ModelParams, x) -> float:
    cc = coeffs_from_matrix(jacobian(q, x))
    return cc.A0 - cc.A1 * cc.A2


def _hopf_system(p: ModelParams, names):
    def F(u):
        q = _params_of(p, names, u[3:])
        return np.append(vector_field(q, u[:3]), _hopf_fn(q, u[:3]))

    def DF(u):
        q = _params_of(p, names, u[3:])
        x = u[:3]
        top = np.column_stack([jacobian(q, x)] + [param_derivative(q, x, n) for n in names])
        g = np.zeros(5)
        for i in range(5):
            h = 1e-6 * max(1.0, abs(u[i]))
            up, um = u.copy(), u.copy()
            up[i] += h
            um[i] -= h
            qp = _params_of(p, names, up[3:])
            qm = _params_of(p, names, um[3:])
            g[i] = (_hopf_fn(qp, up[:3]) - _hopf_fn(qm, um[:3])) / (2 * h)
        return np.vstack([top, g])

    return F, DF


def _l1_at(p, names, u) -> float:
    q = _params_of(p, names, u[3:])
    x = u[:3]
    A = jacobian(q, x)
    omega, qv, pv, G = normal_form(A, lambda vs: multilinear_derivative(q, x, len(vs), vs), 3)
    return float(G[(2, 1)].real / omega)


def continue_hopf(p: ModelParams, start, free: Sequence[str], bounds: dict,
                  step: StepControl = StepControl(h0=0.02, hmax=0.2), direction: int = 1,
                  max_points: int = 600) -> Branch:
    """Trace the Hopf curve through ``start`` (state or H event) in two
    parameters.  ``bounds`` maps each free name to (lo, hi)."""
    names = tuple(free)
    if len(names) != 2:
        raise ValueError("continue_hopf needs two free parameters")
    _check_names(names)
    if isinstance(start, BifurcationEvent):
        p = start.params
        x0 = start.x
    else:
        x0 = np.asarray(start, dtype=float)
    F, DF = _hopf_system(p, names)
    u0 = np.concatenate([x0, [p.get(n) for n in names]])
    dom = lambda u: bool(np.all(u[3:] > 0))
    curve = _Curve(F, DF, dom)
    # project the start onto the curve, holding the first parameter fixed
    u0c, _ = curve.correct(u0, np.eye(5)[3])
    if u0c is None:
        raise ContinuationError("start point does not satisfy the Hopf system")

    def stop(u):
        if any(not (bounds[n][0] <= u[3 + i] <= bounds[n][1]) for i, n in enumerate(names)):
            return True
        return _cc_hopf(p, names, u).A1 <= 0

    dirv = np.zeros(5)
    dirv[3] = direction
    br = Branch(names)
    trail = []
    for s, u, t in curve.trace(u0c, dirv, step, max_points, stop):
        q = _params_of(p, names, u[3:])
        cc = coeffs_from_matrix(jacobian(q, u[:3]))
        l1 = _l1_at(p, names, u) if cc.A1 > 0 else math.nan
        br.points.append(BranchPoint(s, tuple(float(v) for v in u[3:]), u[:3].copy(), cc,
                                     cc.A0, cc.A1 * cc.A2 - cc.A0, math.nan, l1))
        trail.append((s, u, t))
    br.terminated = getattr(curve, "reason", "")

    for k in range(1, len(trail)):
        pa, pb = br.points[k - 1], br.points[k]
        a, b = trail[k - 1], trail[k]
        if pa.coeffs.A1 > 0 and pb.coeffs.A1 <= 0:
            sev, u = _locate(curve, a, b, lambda u: _cc_hopf(p, names, u).A1)
            br.events.append(_hopf_event("BT", p, names, sev, u))
            br.terminated = "BT"
            break
        if math.isfinite(pa.l1) and math.isfinite(pb.l1) and pa.l1 * pb.l1 < 0:
            sev, u = _locate(curve, a, b, lambda u: _l1_at(p, names, u))
            br.events.append(_hopf_event("GH", p, names, sev, u))
    return br


def _cc_hopf(p, names, u):
    return coeffs_from_matrix(jacobian(_params_of(p, names, u[3:]), u[:3]))


def _hopf_event(kind, p, names, s, u) -> BifurcationEvent:
    q = _params_of(p, names, u[3:])
    x = u[:3].copy()
    cc = coeffs_from_matrix(jacobian(q, x))
    cert = {"A0": cc.A0, "A1": cc.A1, "A2": cc.A2, "A0_minus_A1A2": cc.A0 - cc.A1 * cc.A2,
            "residual": float(np.max(np.abs(vector_field(q, x))))}
    if kind == "GH":
        nf = hopf_normal_form(q, _as_eq(x), check=False)
        cert.update(l1=nf.l1, l2=nf.l2, omega=nf.omega)
        cert["degenerate"] = bool(abs(nf.l2) <= L1_ZERO_RTOL)
    return BifurcationEvent(kind, s, {n: float(v) for n, v in zip(names, u[3:])}, x, q, cert)


def hopf_point_in(p: ModelParams, free: str, bounds: tuple, step: StepControl = StepControl(),
                  direction: int = 1) -> BifurcationEvent:
    """First H event met when continuing the stable-side coexistence
    equilibrium of ``p`` in ``free``; convenience for starting curves."""
    for eq in coexistence_equilibria(p):
        br = continue_equilibrium(p, eq, free, bounds, step, direction)
        hs = [e for e in br.events if e.kind == "H"]
        if hs:
            return hs[0]
    raise ContinuationError(f"no Hopf point found in {free} within {bounds}")


# ---------------------------------------------------------------------------
# limit cycles


@dataclass
class LimitCycle:
    anchor: np.ndarray
    period: float
    floquet: np.ndarray
    stable: bool
    params: ModelParams
    closure: float = math.nan
    amplitude: float = math.nan
    method: str = ""

    @property
    def nontrivial_multipliers(self) -> np.ndarray:
        k = int(np.argmin(np.abs(self.floquet - 1.0)))
        return np.delete(self.floquet, k)


def floquet_multipliers(p: ModelParams, x0, T: float) -> np.ndarray:
    _, M, _ = flow_with_sensitivity(p, x0, T)
    mu = np.linalg.eigvals(M)
    return mu[np.argsort(-np.abs(mu))]


def cycle_amplitude(p: ModelParams, x0, T: float, n: int = 512) -> float:
    """Peak-to-peak range of E2 over one period."""
    tr = integrate(p, x0, IntegrationConfig((0.0, T), rtol=1e-10, atol=1e-12))
    e2 = tr(np.linspace(0.0, T, n))[1]
    return float(e2.max() - e2.min())


def shoot(p: ModelParams, x0, T: float, section_point, section_normal,
          direction: int = 1, segments: int = 1, tol: float = 1e-11, maxit: int = 30,
          rtol: float = 1e-10, atol: float = 1e-12):
    """Newton multiple shooting for a periodic orbit.

    Unknowns are ``segments`` states and the period; residuals are
    phi(x_i, direction*T/N) - x_(i+1) and the phase condition
    n . (x_0 - section_point) = 0.  ``direction = -1`` shoots on the
    time-reversed flow.  The Jacobian is reused (chord steps) while the
    residual keeps dropping fast.
    """
    N = int(segments)
    d = 1.0 if direction > 0 else -1.0
    n = np.asarray(section_normal, float)
    xs = np.asarray(section_point, float)
    X = [np.asarray(x0, float)]
    if N > 1:
        tr = integrate(p, x0, IntegrationConfig((0.0, T), rtol=1e-10, atol=1e-12))
        for i in range(1, N):
            ti = (T * (N - i) / N) if d < 0 else T * i / N
            X.append(np.asarray(tr(ti), float))
    X = np.array(X)
    size = 3 * N + 1

    def residual(X, T, with_jac):
        R = np.zeros(size)
        Jm = np.zeros((size, size)) if with_jac else None
        for i in range(N):
            j = (i + 1) % N
            if with_jac:
                y, Phi, _ = flow_with_sensitivity(p, X[i], d * T / N, rtol=rtol, atol=atol)
                Jm[3 * i:3 * i + 3, 3 * i:3 * i + 3] += Phi
                Jm[3 * i:3 * i + 3, 3 * j:3 * j + 3] -= np.eye(3)
                Jm[3 * i:3 * i + 3, -1] = d * vector_field(p, y) / N
            else:
                y = flow(p, X[i], d * T / N, rtol=rtol, atol=atol)
            R[3 * i:3 * i + 3] = y - X[j]
        R[-1] = np.dot(n, X[0] - xs)
        if with_jac:
            Jm[-1, :3] = n
        return R, Jm

    R, Jm = residual(X, T, True)
    res = float(np.max(np.abs(R)))
    for it in range(maxit):
        dz = np.linalg.solve(Jm, -R)
        big = 1.0 + np.max(np.abs(X))
        step_norm = float(np.max(np.abs(dz)))
        if step_norm < tol * big or (res < tol * big and step_norm < 1e3 * tol * big):
            return X[0] + dz[:3], T + dz[-1], it + 1
        lim = 0.5 * max(1.0, float(np.max(np.abs(X))))
        scale = min(1.0, lim / max(step_norm, 1e-300))
        # backtrack until the residual drops
        for _ in range(MAX_HALVINGS):
            Xn = X + scale * dz[:-1].reshape(N, 3)
            Tn = T + scale * dz[-1]
            res_n = np.inf
            if Tn > 0 and np.all(np.isfinite(Xn)):
                try:
                    Rn, _ = residual(Xn, Tn, False)
                    res_n = float(np.max(np.abs(Rn)))
                except SingularStateError:
                    pass
            if res_n < res:
                break
            scale *= 0.5
        else:
            # no descent left: accept if we are already at the noise floor
            if res < NOISE_RTOL * big:
                return X[0], T, it + 1
            raise CycleNotFound(f"shooting stalled (residual {res:.3g})")
        X, T = Xn, Tn
        # refresh the Jacobian unless the full step contracted well
        if scale < 1.0 or res_n > 0.1 * res:
            R, Jm = residual(X, T, True)
        else:
            R = Rn
        res = res_n
    raise CycleNotFound(f"shooting did not converge (residual {res:.3g})")


def find_limit_cycle(p: ModelParams, near: BifurcationEvent, offset: float,
                     free: Optional[str] = None, segments: Optional[int] = None,
                     reverse: Optional[bool] = None, restarts: int = 3) -> LimitCycle:
    """Locate the small cycle born at the Hopf point ``near`` with the free
    parameter moved by ``offset``.

    The section passes through the equilibrium, normal to the plane spanned
    by the real eigenvector and Re q.  Unstable cycles (subcritical Hopf)
    are shot on the reversed flow.  The fast decaying direction grows like
    exp(|lambda_fast| t) backwards in time, so the orbit is cut into
    ``segments`` pieces (default: enough to keep that growth near e^8 per
    piece).
    """
    free = free or next(iter(near.values))
    base = near.params
    q = base.with_(**{free: base.get(free) + offset})
    # equilibrium at the shifted parameter
    x = near.x.copy()
    for _ in range(20):
        dx = np.linalg.solve(jacobian(q, x), -vector_field(q, x))
        x += dx
        if np.linalg.norm(dx) < 1e-14 * (1 + np.linalg.norm(x)):
            break
    A = jacobian(q, x)
    ev, V = np.linalg.eig(A)
    ic = int(np.argmax(ev.imag))
    mu = ev[ic].real
    ir = int(np.argmin(np.abs(ev.imag)))
    vreal = np.real(V[:, ir])

    A0 = jacobian(base, near.x)
    omega, qv, pv, G = normal_form(A0, lambda vs: multilinear_derivative(base, near.x, len(vs), vs), 3)
    rec1 = G[(2, 1)].real
    if mu * rec1 >= 0:
        raise CycleNotFound("offset points to the side without a small cycle")
    rho = math.sqrt(-mu / rec1)
    qr = np.real(qv)
    normal = np.cross(vreal, qr)
    normal /= np.linalg.norm(normal)
    if reverse is None:
        reverse = rec1 > 0
    T0 = 2.0 * math.pi / ev[ic].imag
    fast = float(np.max(np.abs(ev.real)))
    if segments is None:
        segments = max(1, int(math.ceil(fast * T0 / SEGMENT_GROWTH)))

    last = None
    for k in range(restarts):
        r = rho * (1.0 + 0.25 * k)
        # point on the section: x + 2 Re(z q) with z real lies in span(Re q)
        guess = x + 2.0 * r * qr
        try:
            if reverse:
                x0, T, _ = shoot(q, guess, T0, x, normal, -1, segments)
            else:
                x0, T, _ = shoot(q, guess, T0, x, normal, 1, 1)
        except (CycleNotFound, np.linalg.LinAlgError, SingularStateError) as exc:
            last = exc
            continue
        if np.linalg.norm(x0 - x) < 1e-3 * rho:
            last = CycleNotFound("collapsed onto the equilibrium")
            continue
        return _finish_cycle(q, x0, T, "reverse-multiple" if reverse else "forward-single")
    raise CycleNotFound(f"no cycle after {restarts} restarts: {last}")


def _finish_cycle(q, x0, T, method) -> LimitCycle:
    mult = floquet_multipliers(q, x0, T)
    closure = float(np.max(np.abs(flow(q, x0, T, rtol=1e-12, atol=1e-14) - x0)))
    k = int(np.argmin(np.abs(mult - 1.0)))
    others = np.delete(mult, k)
    stable = bool(np.all(np.abs(others) < 1.0))
    return LimitCycle(np.asarray(x0), float(T), mult, stable, q, closure,
                      cycle_amplitude(q, x0, T), method)


@dataclass
class FamilyPoint:
    value: float
    period: float
    amplitude: float
    anchor: np.ndarray
    multipliers: np.ndarray
    dvalue: float


@dataclass
class CycleFamily:
    free: str
    points: list = field(default_factory=list)
    events: list = field(default_factory=list)
    terminated: str = ""


def cycle_family_sweep(p: ModelParams, start: LimitCycle, free: str, bounds: tuple,
                       step: StepControl = StepControl(h0=1e-3, hmin=1e-9, hmax=0.05),
                       direction: int = 1, max_points: int = 200,
                       min_amplitude: float = 1e-6,
                       stop_after_lpc: Optional[int] = None) -> CycleFamily:
    """Pseudo-arclength continuation of a cycle family in one parameter by
    forward single shooting.  LPC is flagged where the parameter component
    of the tangent changes sign.  With ``stop_after_lpc = k`` the sweep
    ends k points after the first LPC."""
    _check_names([free])
    lo, hi = bounds
    base = start.params
    x_prev = start.anchor.copy()
    n_prev = vector_field(base, x_prev)
    n_prev /= np.linalg.norm(n_prev)

    def residual(u, sec_pt, sec_n):
        x, T, lam = u[:3], u[3], u[4]
        q = base.with_(**{free: lam})
        y, M, dlam = flow_with_sensitivity(q, x, T, free)
        R = np.append(y - x, np.dot(sec_n, x - sec_pt))
        J = np.zeros((4, 5))
        J[:3, :3] = M - np.eye(3)
        J[:3, 3] = vector_field(q, y)
        J[:3, 4] = dlam
        J[3, :3] = sec_n
        return R, J, M

    def correct(u_pred, t, sec_pt, sec_n):
        u = u_pred.copy()
        for it in range(NEWTON_MAXIT + 4):
            if not (u[3] > 0 and u[4] > 0):
                return None, it, None, None
            try:
                R, J, M = residual(u, sec_pt, sec_n)
            except (SingularStateError, ValueError):
                return None, it, None, None
            r = np.append(R, np.dot(t, u - u_pred))
            B = np.vstack([J, t])
            try:
                du = np.linalg.solve(B, -r)
            except np.linalg.LinAlgError:
                return None, it, None, None
            u = u + du
            if np.linalg.norm(du) < 1e-10 * (1 + np.linalg.norm(u)):
                R, J, M = residual(u, sec_pt, sec_n)
                return u, it + 1, J, M
        return None, NEWTON_MAXIT, None, None

    u = np.concatenate([start.anchor, [start.period, base.get(free)]])
    _, J, M = residual(u, x_prev, n_prev)
    t = _tangent(J, None)
    if t[4] * direction < 0:
        t = -t
    fam = CycleFamily(free)

    def record(u, t, M):
        q = base.with_(**{free: u[4]})
        mu = np.linalg.eigvals(M)
        mu = mu[np.argsort(-np.abs(mu))]
        amp = cycle_amplitude(q, u[:3], u[3], 256)
        fam.points.append(FamilyPoint(float(u[4]), float(u[3]), amp, u[:3].copy(), mu,
                                      float(t[4])))

    record(u, t, M)
    h = step.h0
    lpc_index = 0
    for _ in range(max_points):
        sec_pt = u[:3].copy()
        sec_n = vector_field(base.with_(**{free: u[4]}), sec_pt)
        sec_n /= np.linalg.norm(sec_n)
        while True:
            u_new, nit, J, M = correct(u + h * t, t, sec_pt, sec_n)
            if u_new is not None:
                break
            h *= 0.5
            if h < step.hmin:
                break
        if u_new is None:
            fam.terminated = "step_underflow"
            break
        t_new = _tangent(J, t)
        u, t = u_new, t_new
        record(u, t, M)
        a, b = fam.points[-2], fam.points[-1]
        if a.dvalue * b.dvalue < 0:
            fam.events.append(_lpc_event(base, free, a, b))
            lpc_index = len(fam.points)
        if stop_after_lpc is not None and fam.events and \
                len(fam.points) - lpc_index >= stop_after_lpc:
            fam.terminated = "lpc"
            break
        if not (lo <= u[4] <= hi):
            fam.terminated = "range"
            break
        if b.amplitude < min_amplitude:
            fam.terminated = "collapsed"
            break
        if nit <= 3:
            h = min(1.5 * h, step.hmax)
    else:
        fam.terminated = "max_points"
    return fam


def _lpc_event(base, free, a: FamilyPoint, b: FamilyPoint) -> BifurcationEvent:
    # the fold lies where d(value)/ds = 0; interpolate linearly in that
    w = a.dvalue / (a.dvalue - b.dvalue)
    val = a.value + w * (b.value - a.value)
    x = a.anchor + w * (b.anchor - a.anchor)
    cert = {"dvalue_a": a.dvalue, "dvalue_b": b.dvalue,
            "amplitude": a.amplitude + w * (b.amplitude - a.amplitude),
            "period": a.period + w * (b.period - a.period)}
    return BifurcationEvent("LPC", 0.0, {free: float(val)}, x, base.with_(**{free: float(val)}),
                            cert)

"""Adaptive Dormand-Prince 5(4) integration with dense output and
hyperplane events.

Stepping uses :class:`scipy.integrate.RK45`; this module adds the event
location, rejected-step bookkeeping (stiffness warning), the singularity
abort at E2 = -a and the variational systems used by shooting.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import RK45, OdeSolution
from scipy.optimize import brentq

from .model import ModelParams, SingularStateError, param_derivative, vector_field

EVENT_TTOL = 1e-12
STIFF_REJECT_RATIO = 0.5


class StiffnessWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class IntegrationConfig:
    t_span: tuple = (0.0, 1.0)
    rtol: float = 1e-9
    atol: float = 1e-11
    max_step: float = math.inf
    direction: str = "forward"

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if self.direction not in ("forward", "backward"):
            raise ValueError(f"direction must be 'forward' or 'backward', got {self.direction!r}")
        t0, t1 = self.t_span
        if t1 != t0 and (t1 > t0) != (self.direction == "forward"):
            raise ValueError(f"t_span {self.t_span} runs against direction {self.direction!r}")


@dataclass(frozen=True)
class Hyperplane:
    """Event n . (y - point) = 0.  ``direction`` +1/-1 keeps only crossings
    where the left-hand side increases/decreases with t, so a crossing keeps
    its sign when integrated backwards; 0 keeps both."""

    normal: Sequence[float]
    point: Sequence[float]
    direction: int = 0
    terminal: bool = False

    def __call__(self, t, y):
        return float(np.dot(self.normal, np.asarray(y)[:3] - np.asarray(self.point)))


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    status: str
    message: str = ""
    events: list = field(default_factory=list)
    n_accepted: int = 0
    n_rejected: int = 0
    _sol: Optional[OdeSolution] = None

    @property
    def ok(self) -> bool:
        return self.status in ("success", "terminal_event")

    @property
    def y_final(self) -> np.ndarray:
        return self.y[-1]

    def __call__(self, t):
        if self._sol is None:
            if np.all(np.asarray(t) == self.t[0]):
                return self.y[0] if np.ndim(t) == 0 else np.repeat(self.y[:1].T, np.size(t), 1)
            raise ValueError("no dense output available")
        return self._sol(t)


def _solve(rhs, t0, y0, t1, rtol, atol, max_step, events=(), keep_dense=True,
           keep_steps=True):
    y0 = np.asarray(y0, dtype=float)
    if t1 == t0:
        return Trajectory(np.array([t0]), y0[None, :].copy(), "success")
    try:
        solver = RK45(rhs, t0, y0, t1, rtol=rtol, atol=atol, max_step=max_step)
    except SingularStateError as exc:
        return Trajectory(np.array([t0]), y0[None, :].copy(), "singular", str(exc))
    ts, ys, interps = [t0], [y0.copy()], []
    found = []
    status, msg = "success", ""
    sgn = 1.0 if t1 > t0 else -1.0
    last_g = [ev(t0, y0) for ev in events]
    n_acc = 0
    while solver.status == "running":
        try:
            step_msg = solver.step()
        except SingularStateError as exc:
            status, msg = "singular", str(exc)
            break
        if solver.status == "failed":
            status, msg = "step_underflow", str(step_msg)
            break
        n_acc += 1
        dense = solver.dense_output()
        t_new, y_new = solver.t, solver.y
        stop = False
        if events:
            g_new = [ev(t_new, y_new) for ev in events]
            for k, ev in enumerate(events):
                g0, g1 = last_g[k], g_new[k]
                if g0 == 0.0 or g0 * g1 > 0:
                    continue
                rising = (g1 - g0) * sgn > 0
                if ev.direction and (ev.direction > 0) != rising:
                    continue
                tev = brentq(lambda s: ev(s, dense(s)), solver.t_old, t_new,
                             xtol=EVENT_TTOL, rtol=4 * np.finfo(float).eps)
                found.append((k, tev, dense(tev)))
                if ev.terminal:
                    stop = True
            last_g = g_new
        if keep_steps or stop or solver.status != "running":
            ts.append(t_new)
            ys.append(y_new.copy())
        if keep_dense:
            interps.append(dense)
        if stop:
            status = "terminal_event"
            # truncate at the first terminal crossing
            k, tev, yev = min(((k, tv, yv) for k, tv, yv in found if events[k].terminal),
                              key=lambda e: (e[1] - t0) * sgn)
            ts[-1], ys[-1] = tev, yev
            break
    n_total = (solver.nfev - 2) / 6.0
    n_rej = max(0, int(round(n_total)) - n_acc)
    if n_acc + n_rej > 10 and n_rej > STIFF_REJECT_RATIO * (n_acc + n_rej):
        warnings.warn(f"{n_rej} of {n_acc + n_rej} steps rejected; the problem looks stiff",
                      StiffnessWarning, stacklevel=3)
    sol = None
    if keep_dense and interps:
        sol = OdeSolution(np.array([t0] + [i.t for i in interps]), interps)
    found.sort(key=lambda e: (e[1] - t0) * sgn)
    return Trajectory(np.array(ts), np.array(ys), status, msg, found, n_acc, n_rej, sol)


def integrate(p: ModelParams, s0, cfg: IntegrationConfig = IntegrationConfig(),
              events: Sequence[Callable] = (), keep_dense: bool = True) -> Trajectory:
    """Integrate the model from ``s0`` over ``cfg.t_span``.

    On a singularity or step underflow the trajectory ends at the last valid
    state and ``status`` says why.
    """
    t0, t1 = map(float, cfg.t_span)
    vector_field(p, s0)  # raises on a singular initial state
    rhs = lambda t, y: vector_field(p, y)
    return _solve(rhs, t0, s0, t1, cfg.rtol, cfg.atol, cfg.max_step, tuple(events), keep_dense)


def flow(p: ModelParams, s0, T: float, rtol=1e-10, atol=1e-12) -> np.ndarray:
    """State after time T (negative T runs the flow backwards)."""
    fj = _fast_field(p)
    tr = _solve(lambda t, y: fj(y)[0], 0.0, s0, float(T), rtol, atol, math.inf,
                keep_dense=False, keep_steps=False)
    if not tr.ok:
        raise SingularStateError(tr.message)
    return tr.y_final


def _fast_field(p: ModelParams):
    """Closure evaluating (f, J) with the parameters unpacked once."""
    r1, r2, al, k1, k2, a, c, m = (p.r1, p.r2, p.alpha, p.kappa1, p.kappa2, p.a, p.c, p.m)
    cm = c * m
    pole = a * 1e-12

    def fj(x):
        e1, e2, mm = x[0], x[1], x[2]
        d = a + e2
        if abs(d) <= pole:
            raise SingularStateError(f"E2 = {e2!r} is on the singularity E2 = -a")
        ph = e2 / d
        hol = mm * ph
        dh = a * mm / (d * d)
        f = np.array([r1 * e2 - al * e1, al * e1 - k1 * e2 * e2 - m * hol,
                      r2 * mm - k2 * mm * mm + cm * hol])
        J = np.array([[-al, r1, 0.0],
                      [al, -2.0 * k1 * e2 - m * dh, -m * ph],
                      [0.0, cm * dh, r2 - 2.0 * k2 * mm + cm * ph]])
        return f, J

    return fj


def _variational_rhs(p: ModelParams, param: Optional[str]):
    fj = _fast_field(p)
    if param is None:
        def rhs(t, z):
            f, J = fj(z[:3])
            return np.concatenate([f, (J @ z[3:12].reshape(3, 3)).ravel()])
        return rhs

    def rhs(t, z):
        x = z[:3]
        f, J = fj(x)
        return np.concatenate([f, (J @ z[3:12].reshape(3, 3)).ravel(),
                               J @ z[12:15] + param_derivative(p, x, param)])
    return rhs


def flow_with_sensitivity(p: ModelParams, s0, T: float, param: Optional[str] = None,
                          rtol=1e-10, atol=1e-12):
    """phi_T(s0) together with d phi/d s0 (3x3) and, when ``param`` is
    given, d phi/d param.  T may be negative."""
    z0 = np.concatenate([np.asarray(s0, float), np.eye(3).ravel()]
                        + ([np.zeros(3)] if param else []))
    tr = _solve(_variational_rhs(p, param), 0.0, z0, float(T), rtol, atol, math.inf,
                keep_dense=False, keep_steps=False)
    if not tr.ok:
        raise SingularStateError(tr.message)
    z = tr.y_final
    dp = z[12:15] if param else None
    return z[:3], z[3:12].reshape(3, 3), dp

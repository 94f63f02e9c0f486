"""Stage-structured leafhopper / predatory-mite model.

State ordering is ``(E1, E2, M)``: eggs, hatchlings (nymphs and adults) and
mites.  The right-hand side is

    E1' = r1*E2 - alpha*E1
    E2' = alpha*E1 - kappa1*E2**2 - m*E2*M/(a + E2)
    M'  = r2*M - kappa2*M**2 + c*m*E2*M/(a + E2)

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Sequence

import numpy as np

PARAM_NAMES = ("r1", "r2", "alpha", "kappa1", "kappa2", "a", "c", "m")

# |a + E2| below this (relative to a) is treated as the pole of the response.
SINGULAR_RTOL = 1e-12


class SingularStateError(ValueError):
    """Raised when a state sits on the E2 = -a pole of the functional response."""


@dataclass(frozen=True)
class ModelParams:
    """The eight positive model constants."""

    r1: float
    r2: float
    alpha: float
    kappa1: float
    kappa2: float
    a: float = 1.0
    c: float = 1.0
    m: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            try:
                v = float(v)
            except (TypeError, ValueError):
                raise ValueError(f"parameter {f.name} must be a real number, got {v!r}")
            if not math.isfinite(v):
                raise ValueError(f"parameter {f.name} must be finite, got {v}")
            if v <= 0.0:
                raise ValueError(f"parameter {f.name} must be strictly positive, got {v}")
            object.__setattr__(self, f.name, v)

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def get(self, name: str) -> float:
        if name not in PARAM_NAMES:
            raise KeyError(f"unknown parameter {name!r}")
        return getattr(self, name)

    def as_dict(self) -> dict:
        return {n: getattr(self, n) for n in PARAM_NAMES}


@dataclass(frozen=True)
class ScaleMap:
    """Relates original and rescaled coordinates.

    ``E1 = state_scale[0]*X1``, ``E2 = state_scale[1]*X2``,
    ``M = state_scale[2]*Y`` and ``t = time_scale*tau``.
    """

    state_scale: tuple
    time_scale: float

    def to_rescaled(self, state) -> np.ndarray:
        return np.asarray(state, dtype=float) / np.asarray(self.state_scale)

    def from_rescaled(self, state) -> np.ndarray:
        return np.asarray(state, dtype=float) * np.asarray(self.state_scale)

    def to_rescaled_time(self, t):
        return np.asarray(t, dtype=float) / self.time_scale

    def from_rescaled_time(self, tau):
        return np.asarray(tau, dtype=float) * self.time_scale

    @property
    def is_identity(self) -> bool:
        return all(s == 1.0 for s in self.state_scale) and self.time_scale == 1.0


def as_state(s: Sequence[float]) -> np.ndarray:
    x = np.asarray(s)
    if x.shape != (3,):
        raise ValueError(f"state must have three components, got shape {x.shape}")
    return x


def _check_pole(p: ModelParams, e2) -> None:
    if abs(p.a + e2) <= SINGULAR_RTOL * p.a:
        raise SingularStateError(f"E2 = {e2!r} is on the singularity E2 = -a = {-p.a}")


def is_biological(s) -> bool:
    """True when every component is non-negative (the physical octant)."""
    return bool(np.all(np.asarray(s, dtype=float) >= 0.0))


def vector_field(p: ModelParams, s) -> np.ndarray:
    e1, e2, mm = as_state(s)
    _check_pole(p, e2)
    hol = e2 * mm / (p.a + e2)
    return np.array([
        p.r1 * e2 - p.alpha * e1,
        p.alpha * e1 - p.kappa1 * e2 * e2 - p.m * hol,
        p.r2 * mm - p.kappa2 * mm * mm + p.c * p.m * hol,
    ])


def jacobian(p: ModelParams, s) -> np.ndarray:
    e1, e2, mm = as_state(s)
    _check_pole(p, e2)
    d = p.a + e2
    dh_de2 = p.a * mm / (d * d)   # d/dE2 of E2*M/(a+E2)
    dh_dm = e2 / d
    return np.array([
        [-p.alpha, p.r1, 0.0],
        [p.alpha, -2.0 * p.kappa1 * e2 - p.m * dh_de2, -p.m * dh_dm],
        [0.0, p.c * p.m * dh_de2, p.r2 - 2.0 * p.kappa2 * mm + p.c * p.m * dh_dm],
    ])


def param_derivative(p: ModelParams, s, name: str) -> np.ndarray:
    """Partial derivative of the vector field with respect to one parameter."""
    e1, e2, mm = as_state(s)
    _check_pole(p, e2)
    d = p.a + e2
    hol = e2 * mm / d
    if name == "r1":
        return np.array([e2, 0.0, 0.0])
    if name == "r2":
        return np.array([0.0, 0.0, mm])
    if name == "alpha":
        return np.array([-e1, e1, 0.0])
    if name == "kappa1":
        return np.array([0.0, -e2 * e2, 0.0])
    if name == "kappa2":
        return np.array([0.0, 0.0, -mm * mm])
    if name == "a":
        dh = -hol / d
        return np.array([0.0, -p.m * dh, p.c * p.m * dh])
    if name == "c":
        return np.array([0.0, 0.0, p.m * hol])
    if name == "m":
        return np.array([0.0, -hol, p.c * hol])
    raise KeyError(f"unknown parameter {name!r}")


def nondimensionalize(p: ModelParams) -> tuple[ModelParams, ScaleMap]:
    """Rescale to a = c = m = 1.

    Uses E1 = a*X1, E2 = a*X2, M = a*c*Y, t = tau/(c*m).  Note the mite
    self-competition rescales as a*kappa2/m (the c factors cancel).
    """
    cm = p.c * p.m
    hat = ModelParams(
        r1=p.r1 / cm,
        r2=p.r2 / cm,
        alpha=p.alpha / cm,
        kappa1=p.a * p.kappa1 / cm,
        kappa2=p.a * p.kappa2 / p.m,
        a=1.0, c=1.0, m=1.0,
    )
    return hat, ScaleMap(state_scale=(p.a, p.a, p.a * p.c), time_scale=1.0 / cm)


def _saturation_derivative(k: int, e2: float, a: float) -> float:
    """k-th derivative of E2/(a+E2) with respect to E2."""
    if k == 0:
        return e2 / (a + e2)
    return (-1) ** (k + 1) * math.factorial(k) * a / (a + e2) ** (k + 1)


def multilinear_derivative(p: ModelParams, s, order: int, vectors) -> np.ndarray:
    """Order-k Frechet derivative of the vector field applied to k vectors.

    Works for real or complex vectors.  Only the terms E2**2, M**2 and
    E2*M/(a+E2) are nonlinear, so the forms are closed-form:
    with g(E2, M) = M*phi(E2), phi = E2/(a+E2),

        D^k g[v1..vk] = M phi^(k) prod v_i[E2] + phi^(k-1) sum_j v_j[M] prod_{i!=j} v_i[E2].
    """
    if order not in (2, 3, 4, 5):
        raise ValueError(f"unsupported derivative order {order}; expected 2..5")
    if len(vectors) != order:
        raise ValueError(f"order {order} needs {order} vectors, got {len(vectors)}")
    _, e2, mm = as_state(s)
    _check_pole(p, e2)
    vs = [np.asarray(v) for v in vectors]
    u2 = [v[1] for v in vs]
    um = [v[2] for v in vs]

    prod_all = 1.0
    for x in u2:
        prod_all = prod_all * x
    g = mm * _saturation_derivative(order, e2, p.a) * prod_all
    phi_km1 = _saturation_derivative(order - 1, e2, p.a)
    for j in range(order):
        rest = 1.0
        for i in range(order):
            if i != j:
                rest = rest * u2[i]
        g = g + phi_km1 * um[j] * rest

    dtype = np.result_type(*vs, float)
    out = np.zeros(3, dtype=dtype)
    out[1] = -p.m * g
    out[2] = p.c * p.m * g
    if order == 2:
        out[1] += -2.0 * p.kappa1 * u2[0] * u2[1]
        out[2] += -2.0 * p.kappa2 * um[0] * um[1]
    return out

"""Least-action kinematics of a single decay ``1 -> 2 + 3``.

The history consists of three free segments in the low-velocity limit: the
parent travels from ``(x1, t_I)`` to an unknown vertex ``(x, t)``, where it
turns into two products that reach ``x2`` and ``x3`` at ``t_F``.  The action

    S = -m1 c^2 (t - t_I) + m1 |x - x1|^2 / 2(t - t_I)
        - (m2 + m3) c^2 (t_F - t) + sum_k m_k |x_k - x|^2 / 2(t_F - t)

is stationary at the vertex, which gives momentum and energy balance there.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, DomainError

logger = logging.getLogger(__name__)

__all__ = [
    "DecaySpec",
    "DecayVertex",
    "NoRealVertexError",
    "decay_action",
    "action_gradient",
    "solve_vertex_closed_form",
    "solve_vertex_numeric",
]


class NoRealVertexError(DomainError):
    """The decay has no vertex inside the time window (e.g. no mass defect)."""


@dataclass(frozen=True)
class DecaySpec:
    """Masses, light speed, time window and the three fixed end positions.

    A non-positive mass defect is accepted here so that the solvers can
    report it; they raise :class:`NoRealVertexError`.
    """

    m1: float
    m2: float
    m3: float
    c: float
    t_I: float
    t_F: float
    x1: np.ndarray
    x2: np.ndarray
    x3: np.ndarray

    def __post_init__(self):
        for name in ("x1", "x2", "x3"):
            v = np.atleast_1d(np.asarray(getattr(self, name), dtype=float)).copy()
            v.flags.writeable = False
            object.__setattr__(self, name, v)
        if not (self.x1.shape == self.x2.shape == self.x3.shape) or not 1 <= self.x1.size <= 3:
            raise DomainError("positions must share one dimension between 1 and 3")
        if min(self.m1, self.m2, self.m3) <= 0 or self.c <= 0:
            raise DomainError("masses and c must be positive")
        if not self.t_F > self.t_I:
            raise DomainError("t_F must exceed t_I")

    @property
    def mass_defect(self):
        return self.m1 - self.m2 - self.m3

    @property
    def product_center(self):
        return (self.m2 * self.x2 + self.m3 * self.x3) / (self.m2 + self.m3)

    def translated(self, shift) -> "DecaySpec":
        shift = np.asarray(shift, dtype=float)
        return DecaySpec(self.m1, self.m2, self.m3, self.c, self.t_I, self.t_F,
                         self.x1 + shift, self.x2 + shift, self.x3 + shift)


@dataclass(frozen=True)
class DecayVertex:
    x: np.ndarray
    t: float
    p1: np.ndarray
    p2: np.ndarray
    p3: np.ndarray
    action: float
    momentum_residual: float
    energy_residual: float
    method: str
    is_minimum: bool = True
    notes: list = field(default_factory=list)

    def as_dict(self):
        return {
            "x": self.x.tolist(), "t": self.t,
            "p1": self.p1.tolist(), "p2": self.p2.tolist(), "p3": self.p3.tolist(),
            "action": self.action, "momentum_residual": self.momentum_residual,
            "energy_residual": self.energy_residual, "method": self.method,
            "is_minimum": self.is_minimum, "notes": list(self.notes),
        }


def _check_window(spec, t):
    if not spec.t_I < t < spec.t_F:
        raise DomainError(f"vertex time {t} must lie strictly inside ({spec.t_I}, {spec.t_F})")


def decay_action(spec: DecaySpec, x, t) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _check_window(spec, t)
    a, b = t - spec.t_I, spec.t_F - t
    c2 = spec.c ** 2
    return float(
        -spec.m1 * c2 * a + 0.5 * spec.m1 * np.sum((x - spec.x1) ** 2) / a
        - (spec.m2 + spec.m3) * c2 * b
        + 0.5 * spec.m2 * np.sum((spec.x2 - x) ** 2) / b
        + 0.5 * spec.m3 * np.sum((spec.x3 - x) ** 2) / b
    )


def _momenta(spec, x, t):
    a, b = t - spec.t_I, spec.t_F - t
    return spec.m1 * (x - spec.x1) / a, spec.m2 * (spec.x2 - x) / b, spec.m3 * (spec.x3 - x) / b


def _energy_balance(spec, p1, p2, p3):
    c2 = spec.c ** 2
    return float(spec.m1 * c2 + p1 @ p1 / (2 * spec.m1)
                 - (spec.m2 + spec.m3) * c2 - p2 @ p2 / (2 * spec.m2) - p3 @ p3 / (2 * spec.m3))


def action_gradient(spec: DecaySpec, x, t):
    """``(dS/dx, dS/dt)``: momentum imbalance ``p1 - p2 - p3`` and minus the energy imbalance."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _check_window(spec, t)
    p1, p2, p3 = _momenta(spec, x, t)
    return p1 - p2 - p3, -_energy_balance(spec, p1, p2, p3)


def _hessian(spec, z, h=1e-6):
    n = z.size
    H = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h * (1 + abs(z[k]))
        gp = np.concatenate([*_grad_z(spec, z + e)])
        gm = np.concatenate([*_grad_z(spec, z - e)])
        H[:, k] = (gp - gm) / (2 * e[k])
    return 0.5 * (H + H.T)


def _grad_z(spec, z):
    gx, gt = action_gradient(spec, z[:-1], z[-1])
    return gx, [gt]


def _vertex(spec, x, t, method, notes):
    p1, p2, p3 = _momenta(spec, x, t)
    z = np.append(x, t)
    pd = bool(np.all(np.linalg.eigvalsh(_hessian(spec, z)) > 0))
    if not pd:
        notes.append("stationary point is not a minimum of the action")
    return DecayVertex(
        np.asarray(x, dtype=float), float(t), p1, p2, p3, decay_action(spec, x, t),
        float(np.max(np.abs(p1 - p2 - p3))), abs(_energy_balance(spec, p1, p2, p3)),
        method, pd, notes,
    )


def solve_vertex_closed_form(spec: DecaySpec, fallback: bool = False) -> DecayVertex:
    """Vertex from the closed form, valid when the parent starts at the products' centre of mass.

    With ``x1`` equal to ``x_CM = (m2 x2 + m3 x3)/(m2 + m3)`` the vertex sits
    at ``x1`` and, in coordinates relative to ``x_CM``,

        t = t_F - sqrt((m2 |x2|^2 + m3 |x3|^2) / (2 (m1 - m2 - m3) c^2)).

    Parameters
    ----------
    fallback : bool
        When ``x1`` differs from ``x_CM``, hand over to the numeric solver
        instead of raising.

    Raises
    ------
    NoRealVertexError
        Non-positive mass defect, or the root falls before ``t_I``.
    DomainError
        ``x1 != x_CM`` and ``fallback`` is false.
    """
    if spec.mass_defect <= 0:
        raise NoRealVertexError("no real vertex: the mass defect m1 - m2 - m3 is not positive")
    cm = spec.product_center
    scale = 1.0 + float(np.max(np.abs(np.concatenate([spec.x1, spec.x2, spec.x3]))))
    if np.max(np.abs(spec.x1 - cm)) > 1e-12 * scale:
        if fallback:
            return solve_vertex_numeric(spec)
        raise DomainError("closed form needs the parent at the products' centre of mass")
    y2, y3 = spec.x2 - cm, spec.x3 - cm
    root = math.sqrt((spec.m2 * y2 @ y2 + spec.m3 * y3 @ y3) / (2 * spec.mass_defect * spec.c ** 2))
    t = spec.t_F - root
    if t < spec.t_I:
        raise NoRealVertexError(f"vertex time {t} precedes t_I={spec.t_I}")
    if root == 0:
        raise NoRealVertexError("products at the parent's position: vertex degenerates onto t_F")
    notes = [f"second stationary root at t = {spec.t_F + root:.17g} lies outside the window"]
    return _vertex(spec, spec.x1.copy(), t, "closed_form", notes)


def solve_vertex_numeric(spec: DecaySpec, xatol=1e-6, max_newton=50, tol=1e-12) -> DecayVertex:
    """Stationary point of the action by bounded Nelder-Mead plus damped Newton.

    Raises
    ------
    NoRealVertexError
        Non-positive mass defect, all three positions coinciding, or a
        minimum pinned at the edge of the time window.
    ConvergenceError
        Newton polishing does not bring the gradient below ``tol`` (relative
        to the momentum scale); the message carries the residual norms.
    """
    if spec.mass_defect <= 0:
        raise NoRealVertexError("no real vertex: the mass defect m1 - m2 - m3 is not positive")
    d = spec.x1.size
    span = spec.t_F - spec.t_I
    eps = 1e-9 * span
    cm = spec.product_center
    scale = 1.0 + float(np.max(np.abs(np.concatenate([spec.x1, spec.x2, spec.x3]))))
    if max(np.max(np.abs(spec.x2 - spec.x1)), np.max(np.abs(spec.x3 - spec.x1))) <= 1e-12 * scale:
        raise NoRealVertexError("products at the parent's position: vertex degenerates onto t_F")
    z0 = np.append(0.5 * (spec.x1 + cm), spec.t_I + 0.75 * span)
    lo = np.append(np.full(d, -np.inf), spec.t_I + eps)
    hi = np.append(np.full(d, np.inf), spec.t_F - eps)

    def S(z):
        if not lo[-1] <= z[-1] <= hi[-1]:
            return np.inf
        return decay_action(spec, z[:-1], z[-1])

    res = minimize(S, z0, method="Nelder-Mead", bounds=list(zip(lo, hi)),
                   options={"xatol": xatol, "fatol": 1e-10, "maxiter": 20000, "maxfev": 40000})
    z = res.x
    pscale = max(spec.m1, spec.m2, spec.m3) * (1.0 + float(np.max(np.abs(
        np.concatenate([spec.x1, spec.x2, spec.x3]))))) / span

    def norm(z):
        gx, gt = _grad_z(spec, z)
        return float(np.max(np.abs(np.concatenate([gx, gt]))))

    r = norm(z)
    for _ in range(max_newton):
        if r <= tol * pscale:
            break
        g = np.concatenate([*_grad_z(spec, z)])
        step = np.linalg.solve(_hessian(spec, z), g)
        lam = 1.0
        while lam > 1e-6:
            zn = z - lam * step
            if spec.t_I < zn[-1] < spec.t_F and norm(zn) < r:
                break
            lam *= 0.5
        else:
            break
        z, r = zn, norm(zn)
    if r > 1e-9 and min(z[-1] - lo[-1], hi[-1] - z[-1]) <= 1e-6 * span:
        raise NoRealVertexError(f"action minimum pinned at the window edge t = {z[-1]:.17g}")
    if r > 1e-9:
        gx, gt = _grad_z(spec, z)
        raise ConvergenceError(
            f"no stationary vertex found: |p1-p2-p3|={np.max(np.abs(gx)):.3e}, energy residual={abs(gt[0]):.3e}"
        )
    return _vertex(spec, z[:-1], z[-1], "numeric", [])

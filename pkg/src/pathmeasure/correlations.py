"""Phase-space densities for a light particle bouncing off an immobile heavy one.

The heavy particle (mass ``m1``) rests at ``x1`` distributed by ``rho1``.  The
light particle (mass ``m2``) moves with speed ``v`` and reflects elastically
off it once, somewhere inside the window ``(t_I, t_F)``.  Outside the window
three families of densities are considered, differing in how the light
particle's position is tied to the heavy particle's:

========  =================================  =================================
family    before the window (p2 = +m2 v)      after the window (p2 = -m2 v)
========  =================================  =================================
plus      rho1(x1) rho2(x2 - v t)             rho1(x1) rho2(-x2 - v t + 2 x1)
minus     rho1(x1) rho2(x2 - v t - 2 x1)      rho1(x1) rho2(-x2 - v t)
pm        rho1(x1) rho2(x2 - v t - x1)        rho1(x1) rho2(-x2 - v t + x1)
========  =================================  =================================

``plus`` is uncorrelated before and correlated after, ``minus`` the reverse,
``pm`` correlated on both sides.  The momentum delta factors are carried as
branch tags ``"pre"``/``"post"``.

Every argument of ``rho2`` has the form ``zeta = s x2 + c x1 - v t`` with
``s = +1`` before and ``-1`` after; the constants ``c`` are tabulated in
``_ARGUMENT``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf
from scipy.stats import qmc

from .errors import DomainError, ModelError

__all__ = [
    "Box",
    "TruncatedGaussian",
    "CollisionModel",
    "FAMILIES",
    "collision_flow",
    "flow_map",
    "eta_evaluate",
    "liouville_check",
    "correlation_statistic",
    "signature_matrix",
    "heavy_marginal",
    "normalization",
]

FAMILIES = ("plus", "minus", "pm")
BRANCHES = ("pre", "post")

# (sign of x2, coefficient of x1) in the rho2 argument
_ARGUMENT = {
    ("plus", "pre"): (1.0, 0.0),
    ("plus", "post"): (-1.0, 2.0),
    ("minus", "pre"): (1.0, -2.0),
    ("minus", "post"): (-1.0, 0.0),
    ("pm", "pre"): (1.0, -1.0),
    ("pm", "post"): (-1.0, 1.0),
}


@dataclass(frozen=True)
class Box:
    """Uniform density on ``[lo, hi]``."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.hi > self.lo:
            raise DomainError("box needs hi > lo")

    @property
    def support(self):
        return self.lo, self.hi

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.lo) & (x <= self.hi), 1.0 / (self.hi - self.lo), 0.0)

    def variance(self):
        return (self.hi - self.lo) ** 2 / 12.0


@dataclass(frozen=True)
class TruncatedGaussian:
    """Normal density cut at ``mu +- cut * sigma`` and renormalized."""

    mu: float
    sigma: float
    cut: float = 4.0

    def __post_init__(self):
        if self.sigma <= 0 or self.cut <= 0:
            raise DomainError("sigma and cut must be positive")

    @property
    def support(self):
        return self.mu - self.cut * self.sigma, self.mu + self.cut * self.sigma

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        z = (x - self.mu) / self.sigma
        norm = self.sigma * math.sqrt(2 * math.pi) * erf(self.cut / math.sqrt(2))
        return np.where(np.abs(z) <= self.cut, np.exp(-0.5 * z * z) / norm, 0.0)

    def variance(self):
        a = self.cut
        phi = math.exp(-0.5 * a * a) / math.sqrt(2 * math.pi)
        return self.sigma ** 2 * (1 - 2 * a * phi / erf(a / math.sqrt(2)))


@dataclass(frozen=True)
class CollisionModel:
    """Heavy/light collision ensemble.

    Every pairing of a heavy position in ``rho1``'s support with a light
    offset in ``rho2``'s support must collide strictly inside ``(t_I, t_F)``
    for all three families; the constructor checks this.
    """

    m1: float
    m2: float
    v: float
    rho1: object
    rho2: object
    t_I: float
    t_F: float
    min_mass_ratio: float = 100.0

    def __post_init__(self):
        if self.m1 <= 0 or self.m2 <= 0 or self.v <= 0:
            raise DomainError("masses and speed must be positive")
        if self.m1 / self.m2 < self.min_mass_ratio:
            raise DomainError(f"mass ratio {self.m1 / self.m2:g} below {self.min_mass_ratio:g}")
        if not self.t_I < 0 < self.t_F:
            raise DomainError("need t_I < 0 < t_F")
        for fam in FAMILIES:
            lo, hi = self.collision_times(fam)
            if not (self.t_I < lo and hi < self.t_F):
                raise ModelError(f"family {fam!r}: collisions span [{lo:.4g}, {hi:.4g}], "
                                 f"not inside ({self.t_I}, {self.t_F})")

    def collision_times(self, family):
        """Range of collision times ``((1 + c) x1 - zeta) / v`` over the supports."""
        _, c = _ARGUMENT[(family, "pre")]
        a1, b1 = self.rho1.support
        a2, b2 = self.rho2.support
        ts = [((1 + c) * x - z) / self.v for x in (a1, b1) for z in (a2, b2)]
        return min(ts), max(ts)


def _key(family, branch):
    if family not in FAMILIES:
        raise DomainError(f"unknown family {family!r}")
    if branch not in BRANCHES:
        raise DomainError(f"unknown branch {branch!r}")
    return _ARGUMENT[(family, branch)]


def collision_flow(model: CollisionModel, x1, x2, t):
    """Light-particle position and momentum at ``t`` for a launch from ``x2`` at time 0.

    Before ``t* = (x1 - x2)/v`` the particle flies freely to the right; after
    it, the reflected position is ``2 x1 - x2 - v t`` with momentum ``-m2 v``.
    """
    if x2 > x1:
        raise DomainError("light particle must start to the left of the heavy one")
    y = x2 + model.v * t
    if y <= x1:
        return y, model.m2 * model.v
    return 2 * x1 - y, -model.m2 * model.v


def flow_map(model: CollisionModel, x1, x2, branch, u):
    """Transport ``(x1, x2, branch)`` by time ``u`` (either sign).

    The light particle is unfolded to ``xi = x2`` (pre) or ``2 x1 - x2`` (post),
    which moves freely as ``xi + v u``; folding back at ``x1`` gives the new
    position and branch.  Works elementwise on arrays.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if branch not in BRANCHES:
        raise DomainError(f"unknown branch {branch!r}")
    if np.any(x2 > x1):
        raise DomainError("light particle must lie to the left of the heavy one")
    xi = x2 if branch == "pre" else 2 * x1 - x2
    xi = xi + model.v * u
    pre = xi <= x1
    return x1, np.where(pre, xi, 2 * x1 - xi), np.where(pre, "pre", "post")


def _outside_window(model, t):
    if model.t_I < t < model.t_F:
        raise DomainError(f"densities are defined only outside ({model.t_I}, {model.t_F}); got t={t}")


def eta_evaluate(model: CollisionModel, family, x1, x2, t, branch):
    """Density value on one momentum branch; arrays broadcast.

    A branch that holds no particles at ``t`` (e.g. ``pre`` after the window)
    evaluates to zero through the formula itself, since the model guarantees
    every collision happens inside the window.
    """
    s, c = _key(family, branch)
    _outside_window(model, t)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return model.rho1.pdf(x1) * model.rho2.pdf(s * x2 + c * x1 - model.v * t)


def _branch_at(model, t):
    return "pre" if t <= model.t_I else "post"


def liouville_check(model: CollisionModel, family, t, u, n=10_000, points=None, seed=0, pad=0.1):
    """``max |eta(s, t) - eta(G_u(s), t + u)|`` over sample points.

    Points default to a scrambled Halton set in ``(x1, zeta)`` over the
    supports widened by ``pad`` on each side, mapped to ``x2`` on the branch
    that is populated at ``t``.  ``points`` may instead give an ``(n, 2)``
    array of ``(x1, x2)`` on that branch.
    """
    _outside_window(model, t)
    _outside_window(model, t + u)
    branch = _branch_at(model, t)
    s, c = _key(family, branch)
    if points is None:
        a1, b1 = model.rho1.support
        a2, b2 = model.rho2.support
        w1, w2 = pad * (b1 - a1), pad * (b2 - a2)
        sample = qmc.Halton(d=2, seed=seed).random(n)
        pts = qmc.scale(sample, [a1 - w1, a2 - w2], [b1 + w1, b2 + w2])
        x1 = pts[:, 0]
        x2 = s * (pts[:, 1] - c * x1 + model.v * t)
    else:
        pts = np.asarray(points, dtype=float)
        x1, x2 = pts[:, 0], pts[:, 1]
    before = eta_evaluate(model, family, x1, x2, t, branch)
    y1, y2, br = flow_map(model, x1, x2, branch, u)
    after = np.empty_like(before)
    for b in BRANCHES:
        m = br == b
        after[m] = eta_evaluate(model, family, y1[m], y2[m], t + u, b)
    return float(np.max(np.abs(before - after)))


def _nodes(model, family, branch, t, order):
    """Gauss-Legendre nodes over ``supp rho1 x supp rho2`` mapped to ``(x1, x2)``."""
    s, c = _key(family, branch)
    x, w = np.polynomial.legendre.leggauss(order)
    a1, b1 = model.rho1.support
    a2, b2 = model.rho2.support
    x1 = 0.5 * (b1 - a1) * x + 0.5 * (b1 + a1)
    z = 0.5 * (b2 - a2) * x + 0.5 * (b2 + a2)
    X1, Z = np.meshgrid(x1, z, indexing="ij")
    W = np.outer(0.5 * (b1 - a1) * w, 0.5 * (b2 - a2) * w)
    X2 = s * (Z - c * X1 + model.v * t)
    return X1, X2, W


def _check_branch_time(model, t, branch):
    _outside_window(model, t)
    if branch != _branch_at(model, t):
        raise DomainError(f"branch {branch!r} holds no particles at t={t}")


def normalization(model: CollisionModel, family, t, branch=None, order=64) -> float:
    """Total mass of the density on its populated branch."""
    branch = branch or _branch_at(model, t)
    _check_branch_time(model, t, branch)
    X1, X2, W = _nodes(model, family, branch, t, order)
    return float(np.sum(W * eta_evaluate(model, family, X1, X2, t, branch)))


def heavy_marginal(model: CollisionModel, family, x1, t, branch=None, order=64):
    """``int eta(x1, x2) dx2`` on the populated branch (arrays of ``x1`` allowed)."""
    branch = branch or _branch_at(model, t)
    _check_branch_time(model, t, branch)
    s, c = _key(family, branch)
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x, w = np.polynomial.legendre.leggauss(order)
    a2, b2 = model.rho2.support
    z = 0.5 * (b2 - a2) * x + 0.5 * (b2 + a2)
    wz = 0.5 * (b2 - a2) * w
    X2 = s * (z[None, :] - c * x1[:, None] + model.v * t)
    vals = eta_evaluate(model, family, x1[:, None], X2, t, branch)
    return vals @ wz


def correlation_statistic(model: CollisionModel, family, branch, t, order=64) -> float:
    """``Cov(x1, x2)`` under the density's spatial law at ``t``.

    Tensor Gauss-Legendre quadrature of order ``order`` per axis in the
    variables ``(x1, zeta)``, where the density factorizes and the map to
    ``x2`` has unit Jacobian.
    """
    _check_branch_time(model, t, branch)
    X1, X2, W = _nodes(model, family, branch, t, order)
    P = W * eta_evaluate(model, family, X1, X2, t, branch)
    mass = P.sum()
    e1, e2 = (P * X1).sum() / mass, (P * X2).sum() / mass
    return float((P * (X1 - e1) * (X2 - e2)).sum() / mass)


def signature_matrix(model: CollisionModel, t_pre, t_post, threshold=1e-3):
    """Rows plus/minus/pm, columns pre/post: ``"+"``, ``"-"`` or ``"0"`` by covariance sign."""
    out = []
    for fam in FAMILIES:
        row = []
        for br, t in (("pre", t_pre), ("post", t_post)):
            cov = correlation_statistic(model, fam, br, t)
            row.append("+" if cov > threshold else "-" if cov < -threshold else "0")
        out.append(row)
    return out

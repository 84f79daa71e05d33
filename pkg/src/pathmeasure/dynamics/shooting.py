"""Two-point boundary-value solving (least-action paths between fixed ends).

One-coordinate systems scan a grid of initial momenta, bracket sign changes
of the endpoint residual and refine each bracket with Brent's method.  Systems
with more coordinates run Newton iterations from several starts, using the
monodromy block dx(T)/dp0 as the Jacobian, and deduplicate the roots.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq, root

from ..errors import DomainError, IntegrationError, ShootingError
from .hamiltonian import HamiltonianSpec, PhasePoint
from .integrate import StepControl, integrate, integrate_final

logger = logging.getLogger(__name__)

__all__ = ["ShootSettings", "BoundarySolutions", "shoot_boundary", "refine_branch"]


@dataclass(frozen=True)
class ShootSettings:
    """Search controls.

    ``p_grid`` is a 1-D array of trial momenta for one-coordinate systems, or
    an array of shape ``(k, ndof)`` of Newton starts otherwise.  When omitted,
    a grid of ``n_grid`` points (resp. a handful of starts) is laid around the
    free-particle momentum ``m (x2 - x1) / T`` with half-width
    ``span_factor * m * max(1, |x1|, |x2|, |x2 - x1|) / T``.
    """

    p_grid: Optional[np.ndarray] = None
    n_grid: int = 201
    span_factor: float = 100.0
    tol: float = 1e-8
    rtol: float = 1e-12
    atol: float = 1e-12
    n_samples: int = 2001
    max_newton: int = 50


class BoundarySolutions(list):
    """List of branch trajectories plus search diagnostics.

    An empty list is a legitimate answer (the end point is classically
    unreachable); ``failures`` lists brackets or starts that did not converge.
    """

    def __init__(self, branches=(), failures=()):
        super().__init__(branches)
        self.failures = list(failures)

    @property
    def unreachable(self) -> bool:
        return len(self) == 0


def _free_guess(spec, x1, x2, T):
    return spec.mass_vector * (x2 - x1) / T


def _default_scale(spec, x1, x2, T):
    ext = max(1.0, float(np.max(np.abs(x1))), float(np.max(np.abs(x2))), float(np.max(np.abs(x2 - x1))))
    return spec.mass_vector * ext / T


def shoot_boundary(spec: HamiltonianSpec, x1, t1, x2, t2, settings: ShootSettings = None) -> BoundarySolutions:
    """All classical paths from ``(x1, t1)`` to ``(x2, t2)`` the search can find.

    Returns
    -------
    BoundarySolutions
        Trajectories sorted by initial momentum, integrated with the
        variational equations so monodromy blocks are available.

    Raises
    ------
    ShootingError
        When sign-change brackets were found but none could be refined.
    """
    settings = settings or ShootSettings()
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x1.size != spec.ndof or x2.size != spec.ndof:
        raise DomainError("endpoint sizes must match the Hamiltonian's coordinate count")
    if not t2 > t1:
        raise DomainError("t2 must exceed t1")
    if spec.ndof == 1:
        roots, failures = _scan_1d(spec, x1, t1, x2, t2, settings)
        if failures and not roots:
            raise ShootingError("no bracket converged: " + "; ".join(failures))
    else:
        roots, failures = _newton_multi(spec, x1, t1, x2, t2, settings)
    ctl = StepControl(rtol=settings.rtol, atol=settings.atol, n_samples=settings.n_samples, variational=True)
    branches = [integrate(spec, PhasePoint(x1, p0, t1), t2, ctl) for p0 in roots]
    for tr in branches:
        miss = float(np.max(np.abs(tr.positions[-1] - x2)))
        if miss > settings.tol:
            failures.append(f"branch p0={tr.momenta[0]} misses endpoint by {miss:.2e}")
    branches = [tr for tr in branches if np.max(np.abs(tr.positions[-1] - x2)) <= settings.tol]
    if not branches:
        logger.info("no classical path found between %s and %s", x1, x2)
    return BoundarySolutions(branches, failures)


def _scan_1d(spec, x1, t1, x2, t2, settings):
    T = t2 - t1
    if settings.p_grid is not None:
        grid = np.sort(np.asarray(settings.p_grid, dtype=float).ravel())
    else:
        c = _free_guess(spec, x1, x2, T)[0]
        w = settings.span_factor * _default_scale(spec, x1, x2, T)[0]
        grid = np.linspace(c - w, c + w, settings.n_grid)
    xf, _ = integrate_final(spec, x1, grid[:, None], t1, t2, settings.rtol, settings.atol)
    res = xf[:, 0] - x2[0]

    known = dict(zip(grid.tolist(), res.tolist()))

    def f(p):
        # bracket ends reuse the batch residuals so their signs stay consistent
        if p in known:
            return known[p]
        return integrate_final(spec, x1, [[p]], t1, t2, settings.rtol, settings.atol)[0][0, 0] - x2[0]

    roots, failures = [], []
    for k in range(len(grid) - 1):
        a, b = grid[k], grid[k + 1]
        ra, rb = res[k], res[k + 1]
        if ra == 0.0:
            roots.append(a)
            continue
        if np.sign(ra) == np.sign(rb):
            continue
        if rb == 0.0:
            continue  # picked up as the left end of the next cell
        try:
            p = brentq(f, a, b, xtol=1e-15 * max(1.0, abs(a), abs(b)), rtol=4 * np.finfo(float).eps,
                       maxiter=200)
        except (RuntimeError, ValueError, IntegrationError) as exc:
            failures.append(f"bracket [{a:.6g}, {b:.6g}]: {exc}")
            continue
        roots.append(p)
    if res[-1] == 0.0:
        roots.append(grid[-1])
    return _dedupe(roots, np.min(np.diff(grid)) if len(grid) > 1 else 0.0), failures


def _newton_multi(spec, x1, t1, x2, t2, settings):
    T = t2 - t1
    c = _free_guess(spec, x1, x2, T)
    if settings.p_grid is not None:
        starts = np.atleast_2d(np.asarray(settings.p_grid, dtype=float))
    else:
        s = _default_scale(spec, x1, x2, T)
        starts = np.array([c, c + 0.5 * s, c - 0.5 * s, c + 2 * s, c - 2 * s])
    ctl = StepControl(rtol=settings.rtol, atol=settings.atol, n_samples=2, variational=True)

    def fun(p):
        tr = integrate(spec, PhasePoint(x1, p, t1), t2, ctl)
        return tr.positions[-1] - x2, tr.dxdp0[-1]

    roots, failures = [], []
    for p_start in starts:
        try:
            sol = root(fun, p_start, jac=True, method="hybr", options={"xtol": 1e-14, "maxfev": settings.max_newton * 10})
        except IntegrationError as exc:
            failures.append(f"start {p_start}: {exc}")
            continue
        if np.max(np.abs(sol.fun)) <= settings.tol:
            roots.append(sol.x)
        else:
            failures.append(f"start {p_start}: residual {np.max(np.abs(sol.fun)):.2e}")
    if len(starts) > 1:
        spread = np.min([np.linalg.norm(a - b) for i, a in enumerate(starts) for b in starts[i + 1:]])
    else:
        spread = 0.0
    return _dedupe(roots, min(spread, 1e-6 * (1.0 + np.linalg.norm(c)))), failures


def _dedupe(roots, resolution):
    out = []
    for r in roots:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if all(np.linalg.norm(r - q) > resolution for q in out):
            out.append(r)
    out.sort(key=tuple)
    return out


def refine_branch(spec: HamiltonianSpec, x1, t1, x2, t2, p_guess, settings: ShootSettings = None):
    """Newton refinement of a single branch from a nearby initial momentum.

    Used to follow one branch under small endpoint perturbations.
    """
    settings = settings or ShootSettings()
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    ctl = StepControl(rtol=settings.rtol, atol=settings.atol, n_samples=2, variational=True)
    p = np.atleast_1d(np.asarray(p_guess, dtype=float)).copy()
    for _ in range(settings.max_newton):
        tr = integrate(spec, PhasePoint(x1, p, t1), t2, ctl)
        F = tr.positions[-1] - x2
        J = tr.dxdp0[-1]
        step = np.linalg.solve(J, F)
        p = p - step
        if np.max(np.abs(step)) <= 1e-14 * (1.0 + np.max(np.abs(p))):
            break
    tr = integrate(spec, PhasePoint(x1, p, t1), t2, ctl)
    if np.max(np.abs(tr.positions[-1] - x2)) > settings.tol:
        raise ShootingError(f"branch refinement did not converge near p0={p_guess}")
    return p

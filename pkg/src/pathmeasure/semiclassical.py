"""Semiclassical final-position densities built from classical branches.

Units have hbar = 1.  For ``n`` endpoint coordinates the propagator between
fixed ends is

    K = (2 pi i)^(-n/2) sum_i sqrt(D_i) exp(i (W_i - M_i pi / 2))

with action ``W_i``, Van Vleck factor ``D_i = |det d2W_i / dx1 dx2|`` and
Maslov index ``M_i`` of branch ``i``.  Its modulus squared splits into a
classical part ``sum_i D_i`` and a cross-branch interference part.
"""

import itertools
import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.signal import find_peaks

from ._io import write_csv
from .dynamics import (
    HamiltonianSpec,
    ShootSettings,
    StepControl,
    Trajectory,
    action_along,
    integrate,
    refine_branch,
    shoot_boundary,
)
from .errors import CausticError, DomainError, ModelError, NumericalError

logger = logging.getLogger(__name__)

__all__ = [
    "Branch",
    "UnreachableWarning",
    "make_branch",
    "vanvleck_factor",
    "vanvleck_monodromy",
    "maslov_index",
    "classical_density",
    "semiclassical_propagator",
    "interference_term",
    "quantum_density",
    "free_propagator",
    "oscillator_propagator",
    "FringeProfile",
    "TwoSlitModel",
    "fringe_profile",
]

CAUSTIC_DET = 1e-14
CAUSTIC_RTOL = 1e-10


class UnreachableWarning(UserWarning):
    """No classical branch connects the requested end points."""


@dataclass(frozen=True)
class Branch:
    """One classical path between fixed ends and its semiclassical weights."""

    trajectory: Trajectory
    action: float
    vanvleck: float
    maslov: int

    def __post_init__(self):
        if not self.vanvleck > 0:
            raise DomainError("Van Vleck factor must be positive")
        if self.maslov < 0:
            raise DomainError("Maslov index must be non-negative")

    @property
    def ndof(self):
        return self.trajectory.spec.ndof

    @property
    def amplitude(self) -> complex:
        return np.sqrt(self.vanvleck) * np.exp(1j * (self.action - 0.5 * np.pi * self.maslov))


def _with_variational(spec: HamiltonianSpec, traj: Trajectory, rtol=1e-12) -> Trajectory:
    if traj.dxdp0 is not None and traj.dense is not None:
        return traj
    ctl = StepControl(rtol=rtol, atol=rtol, n_samples=len(traj.times), variational=True)
    return integrate(spec, traj.start, traj.times[-1], ctl)


def _frame_scale(spec, traj):
    """Symplectic scale ``c = 1 / (max(1/m) T)`` putting dx/dp0 and dp/dp0 on equal footing."""
    return 1.0 / (np.max(1.0 / spec.mass_vector) * (traj.times[-1] - traj.times[0]))


def _check_end_point(spec, traj):
    """Raise CausticError when dx(T)/dp0 is singular relative to the monodromy scale."""
    c = _frame_scale(spec, traj)
    J, K = traj.dxdp0[-1], traj.dpdp0[-1]
    scale = c * np.linalg.norm(J, 2) + np.linalg.norm(K, 2)
    smin = np.linalg.svd(c * J, compute_uv=False).min()
    if smin < CAUSTIC_RTOL * scale:
        raise CausticError(f"end point is conjugate to the start (relative singular value {smin / scale:.1e})")


def vanvleck_monodromy(spec: HamiltonianSpec, traj: Trajectory) -> float:
    """``1 / |det dx(T)/dp0|`` from the integrated variational equations."""
    traj = _with_variational(spec, traj)
    _check_end_point(spec, traj)
    det = np.linalg.det(traj.dxdp0[-1])
    if abs(det) < CAUSTIC_DET:
        raise CausticError(f"|det dx/dp0| = {abs(det):.2e} at the end point")
    return 1.0 / abs(det)


def vanvleck_factor(spec: HamiltonianSpec, traj: Trajectory, h: float = None,
                    settings: ShootSettings = None) -> float:
    """``|det dp0/dx2|`` by central differences of re-shot branches.

    Each end-point coordinate is displaced by ``+-h`` (default
    ``1e-5 (1 + |x2|)``) and the branch is followed by Newton refinement from
    its own initial momentum.
    """
    x1, t1 = traj.positions[0], traj.times[0]
    x2, t2 = traj.positions[-1], traj.times[-1]
    p0 = traj.momenta[0]
    n = spec.ndof
    if h is None:
        h = 1e-5 * (1.0 + float(np.max(np.abs(x2))))
    if h <= 0:
        raise DomainError("finite-difference step must be positive")
    jac = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        pp = refine_branch(spec, x1, t1, x2 + e, t2, p0, settings)
        pm = refine_branch(spec, x1, t1, x2 - e, t2, p0, settings)
        jac[:, k] = (pp - pm) / (2 * h)
    det = abs(np.linalg.det(jac))
    if det == 0 or 1.0 / det < CAUSTIC_DET:
        raise CausticError("Van Vleck determinant diverges at this end point")
    return det


def _frame_phases(J, K, c):
    """Eigenphases of W = (K - i c J)(K + i c J)^-1 for each sample."""
    A = K - 1j * c * J
    B = K + 1j * c * J
    W = np.linalg.solve(B.transpose(0, 2, 1), A.transpose(0, 2, 1)).transpose(0, 2, 1)
    return np.angle(np.linalg.eigvals(W))


def maslov_index(spec: HamiltonianSpec, traj: Trajectory, min_samples: int = 256) -> int:
    """Number of conjugate points (with multiplicity) strictly inside the path.

    Conjugate points are the zeros of the Jacobi fields ``dx(t)/dp0``.  They
    are counted as passages of the eigenphases of the unitary matrix
    ``(K - icJ)(K + icJ)^-1`` through zero, where ``J = dx/dp0`` and
    ``K = dp/dp0``; each eigenvalue is followed continuously in time.

    Raises
    ------
    CausticError
        If the end point itself is conjugate to the start.
    """
    traj = _with_variational(spec, traj)
    n = spec.ndof
    t0, t1 = traj.times[0], traj.times[-1]
    _check_end_point(spec, traj)
    c = _frame_scale(spec, traj)
    m = min_samples
    for _ in range(8):
        ts = np.linspace(t0, t1, m)[1:]
        Y = traj.dense(ts).T
        J = Y[:, 2 * n:2 * n + n * n].reshape(-1, n, n)
        K = Y[:, 2 * n + n * n:].reshape(-1, n, n)
        ph = _frame_phases(J, K, c)
        tracked, ok = _track(ph)
        if ok:
            break
        m *= 2
    else:
        raise NumericalError("could not resolve the eigenphase flow of the Jacobi fields")
    # phases leave 0 in the negative direction; each passage through -2 pi k counts once
    crossings = np.floor(-tracked[-1] / (2 * np.pi) + 1e-9)
    return int(np.sum(np.maximum(crossings, 0)))


def _track(ph):
    """Follow eigenphases continuously; returns unwrapped phases per sample.

    Consecutive samples are matched by the permutation with the smallest
    total phase change (exhaustive over permutations, so meant for the small
    coordinate counts handled here).
    """
    if ph.shape[1] == 1:
        out = np.unwrap(ph, axis=0)
        return out, bool(np.all(np.abs(np.diff(out, axis=0)) < 0.5))
    perms = np.array(list(itertools.permutations(range(ph.shape[1]))))
    out = np.empty_like(ph)
    out[0] = ph[0]
    ok = True
    for k in range(1, len(ph)):
        cand = ph[k][perms]
        step = np.angle(np.exp(1j * (cand - out[k - 1])))
        best = np.argmin(np.sum(np.abs(step), axis=1))
        if np.max(np.abs(step[best])) > 0.5:
            ok = False
        out[k] = out[k - 1] + step[best]
    return out, ok


def make_branch(spec: HamiltonianSpec, traj: Trajectory, vanvleck: str = "monodromy", h: float = None) -> Branch:
    """Attach action, Van Vleck factor and Maslov index to a shot trajectory."""
    traj = _with_variational(spec, traj)
    if vanvleck == "monodromy":
        d = vanvleck_monodromy(spec, traj)
    elif vanvleck == "fd":
        d = vanvleck_factor(spec, traj, h)
    else:
        raise DomainError(f"unknown Van Vleck method {vanvleck!r}")
    return Branch(traj, action_along(spec, traj), d, maslov_index(spec, traj))


def classical_density(branches: Sequence[Branch]) -> float:
    """Sum of Van Vleck factors; 0 (with a warning) when no branch exists."""
    if not branches:
        warnings.warn("classically unreachable end point", UnreachableWarning, stacklevel=2)
        return 0.0
    return float(sum(b.vanvleck for b in branches))


def _ndof(branches, ndof):
    if ndof is not None:
        return int(ndof)
    if not branches:
        raise DomainError("need branches or an explicit coordinate count")
    return branches[0].ndof


def semiclassical_propagator(branches: Sequence[Branch], ndof: int = None) -> complex:
    """Semiclassical kernel between the shared end points (hbar = 1)."""
    if not branches:
        raise DomainError("semiclassical propagator needs at least one branch")
    n = _ndof(branches, ndof)
    pref = (2 * np.pi) ** (-0.5 * n) * np.exp(-0.25j * np.pi * n)
    return complex(pref * sum(b.amplitude for b in branches))


def interference_term(branches: Sequence[Branch]) -> float:
    """``sum_{i != j} sqrt(D_i D_j) cos((W_i - W_j) - (M_i - M_j) pi / 2)``."""
    total = 0.0
    for i, bi in enumerate(branches):
        for bj in branches[i + 1:]:
            phase = (bi.action - bj.action) - 0.5 * np.pi * (bi.maslov - bj.maslov)
            total += 2.0 * np.sqrt(bi.vanvleck * bj.vanvleck) * np.cos(phase)
    return float(total)


def quantum_density(branches: Sequence[Branch], ndof: int = None) -> float:
    """``(rho_FC + rho_FI) / (2 pi)^n`` for ``n`` end-point coordinates."""
    if not branches:
        return 0.0
    n = _ndof(branches, ndof)
    rho = (classical_density(branches) + interference_term(branches)) / (2 * np.pi) ** n
    if rho < -1e-12:
        raise NumericalError(f"negative quantum density {rho:.3e}: branch data inconsistent")
    return max(rho, 0.0)


# --- exact kernels (quadratic Lagrangians) ----------------------------------


def free_propagator(m, T, x1, x2) -> complex:
    """Free-particle kernel ``(m / 2 pi i T)^(n/2) exp(i m |x2 - x1|^2 / 2T)``."""
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    n = x1.size
    return complex((m / (2j * np.pi * T)) ** (0.5 * n) * np.exp(0.5j * m * np.sum((x2 - x1) ** 2) / T))


def oscillator_propagator(m, omega, T, x1, x2) -> complex:
    """1-D harmonic-oscillator kernel (Mehler form), valid for ``0 < omega T < pi``."""
    s = np.sin(omega * T)
    if not 0 < omega * T < np.pi:
        raise DomainError("closed form implemented for 0 < omega T < pi")
    W = m * omega / (2 * s) * ((x1 * x1 + x2 * x2) * np.cos(omega * T) - 2 * x1 * x2)
    return complex(np.sqrt(m * omega / (2j * np.pi * s)) * np.exp(1j * W))


# --- fringes ----------------------------------------------------------------


@dataclass(frozen=True)
class FringeProfile:
    screen: np.ndarray
    rho_FQ: np.ndarray
    rho_FC: np.ndarray
    rho_FI: np.ndarray

    def to_csv(self, path):
        rows = zip(self.screen, self.rho_FQ, self.rho_FC, self.rho_FI)
        return write_csv(path, ["screen_coordinate", "rho_FQ", "rho_FC", "rho_FI"], rows)

    def spacing(self) -> float:
        """Mean distance between neighbouring maxima of rho_FQ.

        Peak positions are refined by a parabola through the three samples
        around each local maximum.
        """
        y = self.rho_FQ
        x = self.screen
        peaks, _ = find_peaks(y)
        if len(peaks) < 2:
            raise NumericalError("fewer than two fringe maxima on the screen")
        pos = []
        for k in peaks:
            y0, y1, y2 = y[k - 1], y[k], y[k + 1]
            denom = y0 - 2 * y1 + y2
            off = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
            pos.append(x[k] + off * (x[k + 1] - x[k]))
        return float(np.mean(np.diff(pos)))


class TwoSlitModel:
    """Free particle in the plane leaving one of two slit points at t = 0.

    The slits sit at ``(0, +-s/2)``; the screen is the line ``x = L``, reached
    at time ``T = m L / p`` so that ``p`` is the momentum along the axis.  For
    a screen coordinate ``y`` the model returns one branch per slit, each
    found by the boundary-value solver started from the straight-line
    momentum.
    """

    def __init__(self, L, s, p, m=1.0, n_samples=201):
        if L <= 0 or p <= 0 or m <= 0 or s < 0:
            raise DomainError("need L, p, m > 0 and s >= 0")
        self.L, self.s, self.p, self.m = float(L), float(s), float(p), float(m)
        self.T = self.m * self.L / self.p
        self.spec = HamiltonianSpec.free([self.m], dimension=2)
        self.n_samples = n_samples

    def predicted_spacing(self):
        return 2 * np.pi * self.L / (self.p * self.s)

    def __call__(self, y) -> list:
        out = []
        for sy in (0.5 * self.s, -0.5 * self.s):
            # one Newton start per slit, at the straight-line momentum
            start = [[self.p, self.m * (y - sy) / self.T]]
            settings = ShootSettings(p_grid=np.array(start), n_samples=self.n_samples)
            sols = shoot_boundary(self.spec, [0.0, sy], 0.0, [self.L, y], self.T, settings)
            out.extend(make_branch(self.spec, tr) for tr in sols)
        return out


def _fringe_point(args):
    model, y = args
    br = model(y)
    if len(br) != 2:
        raise ModelError(f"model returned {len(br)} branches at screen point {y}")
    return quantum_density(br), classical_density(br), interference_term(br)


def fringe_profile(model: Callable[[float], Sequence[Branch]], screen, workers: int = 1) -> FringeProfile:
    """Tabulate quantum, classical and interference densities across a screen.

    ``model(y)`` must return exactly two branches for every screen point.
    With ``workers > 1`` screen points are evaluated in separate processes
    (the model must then be picklable).
    """
    screen = np.asarray(screen, dtype=float)
    args = [(model, float(y)) for y in screen]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_fringe_point, args, chunksize=max(1, len(args) // (4 * workers))))
    else:
        rows = [_fringe_point(a) for a in args]
    fq, fc, fi = (np.array(col) for col in zip(*rows))
    return FringeProfile(screen, fq, fc, fi)

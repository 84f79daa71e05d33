"""Asymptotic labels of paths: p-limits and channel (fragment) decomposition."""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from ..errors import DomainError
from .hamiltonian import HamiltonianSpec, PhasePoint
from .integrate import StepControl, Trajectory, integrate

__all__ = ["PLimitReport", "p_limit", "ChannelPartition", "classify_channel"]

DEFAULT_HORIZONS = (1e2, 1e3, 1e4)


@dataclass(frozen=True)
class PLimitReport:
    """Outcome of a p-limit estimate.

    Attributes
    ----------
    estimate : ndarray
        Best estimate of ``lim m x(T) / T``: the Richardson combination of the
        two largest horizons, which removes the ``x_offset / T`` term of an
        asymptotically free motion.
    horizons : ndarray
    raw : ndarray, shape (k, ndof)
        ``m x(T) / T`` at each horizon.
    envelope : ndarray
        ``max |m x(t)| / T`` over ``t in [T/2, T]`` for each horizon; it decays
        like 1/T for bound motion.
    final_momentum : ndarray
        ``p(T)`` at the largest horizon.
    converged : bool
        Successive extrapolated estimates agree within ``tol``.
    """

    estimate: np.ndarray
    horizons: np.ndarray
    raw: np.ndarray
    extrapolated: np.ndarray
    envelope: np.ndarray
    final_momentum: np.ndarray
    converged: bool
    tol: float

    @property
    def inconclusive(self):
        return not self.converged

    def decay_exponent(self):
        """Least-squares slope of log(envelope) against log(T)."""
        return float(np.polyfit(np.log(self.horizons), np.log(self.envelope), 1)[0])


def p_limit(spec: HamiltonianSpec, start: PhasePoint, horizons=DEFAULT_HORIZONS, control: StepControl = None,
            tol: float = 1e-4) -> PLimitReport:
    """Estimate the p-limit ``lim_{t->inf} m x(t) / t`` of the path through ``start``.

    The path is integrated once to the largest horizon (Verlet by default) and
    read off at every horizon.  Non-convergence is reported, never raised.
    """
    horizons = np.sort(np.asarray(horizons, dtype=float))
    if horizons[0] <= start.time:
        raise DomainError("horizons must lie after the start time")
    control = control or StepControl(method="verlet", dt=5e-2)
    # dense enough sampling on [T/2, T] to see the envelope of oscillations
    per = 400
    times = [np.array([start.time])]
    for T in horizons:
        times.append(np.linspace(0.5 * T, T, per))
    times = np.unique(np.concatenate(times))
    times = times[times >= start.time]
    traj = integrate(spec, start, horizons[-1], control, sample_times=times)
    m = spec.mass_vector
    raw, env = [], []
    for T in horizons:
        k = np.searchsorted(traj.times, T)
        raw.append(m * traj.positions[k] / T)
        window = (traj.times >= 0.5 * T) & (traj.times <= T)
        env.append(np.max(np.linalg.norm(m * traj.positions[window], axis=1)) / T)
    raw = np.array(raw)
    if len(horizons) > 1:
        T = horizons
        ex = (T[1:, None] * raw[1:] - T[:-1, None] * raw[:-1]) / (T[1:] - T[:-1])[:, None]
    else:
        ex = raw.copy()
    converged = bool(len(ex) > 1 and np.max(np.abs(ex[-1] - ex[-2])) < tol)
    return PLimitReport(ex[-1], horizons, raw, ex, np.array(env), traj.momenta[-1], converged, tol)


@dataclass(frozen=True)
class ChannelPartition:
    """Fragments (0-based particle indices), their asymptotic velocities, diagnostics."""

    fragments: Tuple[Tuple[int, ...], ...]
    velocities: np.ndarray
    conclusive: bool = True
    notes: List[str] = field(default_factory=list)

    def fragment_of(self, i):
        for k, f in enumerate(self.fragments):
            if i in f:
                return k
        raise KeyError(i)

    def p_limits(self, spec: HamiltonianSpec):
        """Per-particle p-limits ``m_i V_k`` implied by the partition (flat array)."""
        out = np.zeros((spec.n_particles, spec.dimension))
        for f, v in zip(self.fragments, self.velocities):
            for i in f:
                out[i] = spec.masses[i] * v
        return out.ravel()


def _slope(t, y):
    """Least-squares velocity of y(t) (rows = samples)."""
    tc = t - t.mean()
    return (tc @ (y - y.mean(axis=0))) / (tc @ tc)


def classify_channel(spec: HamiltonianSpec, traj: Trajectory, window: float = 0.25, velocity_tol: float = 1e-3,
                     growth_tol: float = 0.05, oscillation_factor: float = 6.0) -> ChannelPartition:
    """Split the particles into asymptotically bound fragments.

    Over the trailing ``window`` fraction of the trajectory, two particles are
    linked when their separation has no secular drift: the fitted relative
    velocity is below ``velocity_tol``, or the fitted displacement across the
    window is within ``oscillation_factor`` times the largest detrended
    excursion (a bounded oscillation of amplitude A fits a slope of at most
    3A/L over a window of length L).  Linked components form fragments.
    Each fragment must keep its internal excursions bounded (the maximum over
    the second half of the window may not exceed the first half by more than
    ``growth_tol`` relative) and fragment velocities must be pairwise distinct.
    A violated check makes the result inconclusive rather than raising.
    """
    if not 0 < window <= 1:
        raise DomainError("window must be a fraction in (0, 1]")
    n, dim = spec.n_particles, spec.dimension
    t_all = traj.times
    t_cut = t_all[-1] - window * (t_all[-1] - t_all[0])
    sel = t_all >= t_cut
    if sel.sum() < 8:
        raise DomainError("trajectory too short or too coarsely sampled for the window")
    t = t_all[sel]
    x = traj.positions[sel].reshape(-1, n, dim)

    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            d = x[:, i, :] - x[:, j, :]
            rel = _slope(t, d)
            resid = d - d.mean(axis=0) - np.outer(t - t.mean(), rel)
            drift = np.linalg.norm(rel) * (t[-1] - t[0])
            if np.linalg.norm(rel) < velocity_tol or drift <= oscillation_factor * np.abs(resid).max():
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    fragments = sorted(tuple(g) for g in groups.values())

    masses = np.asarray(spec.masses)
    notes, ok = [], True
    velocities = []
    half = len(t) // 2
    for f in fragments:
        idx = list(f)
        mf = masses[idx]
        X = np.einsum("i,tid->td", mf, x[:, idx, :]) / mf.sum()
        velocities.append(_slope(t, X))
        if len(idx) > 1:
            exc = np.linalg.norm(x[:, idx, :] - X[:, None, :], axis=2).max(axis=1)
            a, b = exc[:half].max(), exc[half:].max()
            if b > (1 + growth_tol) * a + 1e-12:
                ok = False
                notes.append(f"fragment {f}: internal excursion grows ({a:.3g} -> {b:.3g})")
    velocities = np.array(velocities)
    for a in range(len(fragments)):
        for b in range(a + 1, len(fragments)):
            if np.linalg.norm(velocities[a] - velocities[b]) < velocity_tol:
                ok = False
                notes.append(f"fragments {fragments[a]} and {fragments[b]} share a velocity")
    return ChannelPartition(tuple(fragments), velocities, ok, notes)

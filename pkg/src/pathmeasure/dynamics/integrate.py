"""Forward integration of Hamilton's equations and the action functional.

Two schemes are available through :class:`StepControl`:

* ``"rk"``  adaptive DOP853 (scipy), used for shooting and action evaluation;
  optionally carries the variational (monodromy) blocks dx/dp0 and dp/dp0.
* ``"verlet"`` fixed-step velocity Verlet, second order and symplectic, used
  for long horizons where bounded energy error matters more than local accuracy.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import simpson, solve_ivp, trapezoid

from .._io import write_csv
from ..errors import DomainError, IntegrationError
from .hamiltonian import HamiltonianSpec, PhasePoint

logger = logging.getLogger(__name__)

__all__ = ["StepControl", "Trajectory", "integrate", "integrate_final", "action_along", "energy"]


@dataclass(frozen=True)
class StepControl:
    method: str = "rk"
    rtol: float = 1e-12
    atol: float = 1e-12
    dt: float = 1e-2
    n_samples: int = 2001
    variational: bool = False
    energy_tol: float = 1e-9

    def __post_init__(self):
        if self.method not in ("rk", "verlet"):
            raise DomainError(f"unknown integrator {self.method!r}")
        if self.n_samples < 2:
            raise DomainError("need at least two samples")


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered phase-space samples of one path.

    ``dxdp0`` / ``dpdp0`` are the monodromy blocks (shape ``(n, ndof, ndof)``)
    when the path was integrated with ``variational=True``; ``dense`` is the
    continuous extension of the full state when available.
    """

    times: np.ndarray
    positions: np.ndarray
    momenta: np.ndarray
    spec: HamiltonianSpec
    dxdp0: Optional[np.ndarray] = None
    dpdp0: Optional[np.ndarray] = None
    dense: Optional[object] = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1:
            raise DomainError("times must be 1-D")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise DomainError("sample times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def __getitem__(self, k) -> PhasePoint:
        return PhasePoint(self.positions[k], self.momenta[k], self.times[k])

    @property
    def start(self) -> PhasePoint:
        return self[0]

    @property
    def final(self) -> PhasePoint:
        return self[-1]

    @property
    def initial_momentum(self):
        return self.momenta[0]

    def energies(self):
        return self.spec.hamiltonian(self.positions, self.momenta)

    def energy_drift(self) -> float:
        """max |H(t) - H(t0)| / max(|H(t0)|, tiny) over the samples."""
        e = self.energies()
        scale = abs(e[0]) if e[0] != 0 else 1.0
        return float(np.max(np.abs(e - e[0])) / scale)

    def to_rows(self):
        e = self.energies()
        for k in range(len(self.times)):
            yield (self.times[k], *self.positions[k], *self.momenta[k], e[k])

    def header(self):
        n = self.spec.ndof
        return ["t"] + [f"x{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)] + ["energy"]

    def to_csv(self, path):
        """Columns t, x1..xn, p1..pn, energy."""
        return write_csv(path, self.header(), self.to_rows())


def energy(spec: HamiltonianSpec, point: PhasePoint) -> float:
    return float(spec.hamiltonian(point.positions, point.momenta))


def _has_singular(spec):
    return any(getattr(getattr(t, "shape", None), "singular", False) for t in spec.terms)


def _rhs_factory(spec: HamiltonianSpec, variational: bool, batch: int = 0):
    n = spec.ndof
    minv = 1.0 / spec.mass_vector
    check = _has_singular(spec)

    def guard(t, x):
        if check:
            r, pair = spec.closest_singular_pair(x)
            if r < spec.r_min:
                raise IntegrationError(f"pair {pair} reached r={r:.3e} < r_min={spec.r_min:g} at t={t:.6g}")

    if batch:
        def rhs(t, y):
            y = y.reshape(batch, 2 * n)
            x, p = y[:, :n], y[:, n:]
            guard(t, x)
            return np.concatenate([p * minv, -spec.gradient(x)], axis=1).ravel()
        return rhs

    if not variational:
        def rhs(t, y):
            x, p = y[:n], y[n:]
            guard(t, x)
            return np.concatenate([p * minv, -spec.gradient(x)])
        return rhs

    def rhs(t, y):
        x, p = y[:n], y[n:2 * n]
        J = y[2 * n:2 * n + n * n].reshape(n, n)
        K = y[2 * n + n * n:].reshape(n, n)
        guard(t, x)
        dJ = minv[:, None] * K
        dK = -spec.hessian(x) @ J
        return np.concatenate([p * minv, -spec.gradient(x), dJ.ravel(), dK.ravel()])

    return rhs


def integrate(spec: HamiltonianSpec, start: PhasePoint, t_end: float, control: StepControl = None,
              sample_times=None) -> Trajectory:
    """Integrate Hamilton's equations from ``start`` up to ``t_end``.

    Parameters
    ----------
    spec : HamiltonianSpec
    start : PhasePoint
    t_end : float
        Must exceed ``start.time``; the last sample is exactly at ``t_end``.
    control : StepControl, optional
    sample_times : array_like, optional
        Explicit output times (must lie in the span and include both ends);
        overrides ``control.n_samples``.

    Raises
    ------
    IntegrationError
        When a singular interaction pair comes closer than ``spec.r_min``.
    """
    control = control or StepControl()
    start.check(spec)
    t0 = start.time
    if not t_end > t0:
        raise DomainError("t_end must exceed the start time")
    if sample_times is None:
        sample_times = np.linspace(t0, t_end, control.n_samples)
    else:
        sample_times = np.asarray(sample_times, dtype=float)
        if sample_times[0] != t0 or sample_times[-1] != t_end:
            raise DomainError("sample_times must start at start.time and end at t_end")
    if control.method == "verlet":
        if control.variational:
            raise DomainError("variational equations require the rk integrator")
        traj = _verlet(spec, start, t_end, control.dt, sample_times)
    else:
        traj = _rk(spec, start, t_end, control, sample_times)
    drift = traj.energy_drift()
    if drift > control.energy_tol:
        logger.info("energy drift %.3e exceeds tolerance %.1e", drift, control.energy_tol)
    return traj


def _rk(spec, start, t_end, control, sample_times):
    n = spec.ndof
    y0 = [start.positions, start.momenta]
    if control.variational:
        y0 += [np.zeros(n * n), np.eye(n).ravel()]
    y0 = np.concatenate(y0)
    rhs = _rhs_factory(spec, control.variational)
    sol = solve_ivp(rhs, (start.time, t_end), y0, method="DOP853", t_eval=sample_times,
                    rtol=control.rtol, atol=control.atol, dense_output=control.variational)
    if sol.status != 0:
        raise IntegrationError(f"integration failed: {sol.message}")
    Y = sol.y.T
    kw = {}
    if control.variational:
        kw = dict(dxdp0=Y[:, 2 * n:2 * n + n * n].reshape(-1, n, n),
                  dpdp0=Y[:, 2 * n + n * n:].reshape(-1, n, n), dense=sol.sol)
    return Trajectory(sol.t, Y[:, :n], Y[:, n:2 * n], spec, **kw)


def _verlet(spec, start, t_end, dt, sample_times):
    """Velocity Verlet; the step is shrunk so sample times are hit exactly."""
    minv = 1.0 / spec.mass_vector
    x = start.positions.copy()
    p = start.momenta.copy()
    g = spec.gradient(x)
    check = _has_singular(spec)
    xs, ps = [x.copy()], [p.copy()]
    t = start.time
    free = not spec.terms
    for t_next in sample_times[1:]:
        span = t_next - t
        if free:
            x += span * minv * p
            t = t_next
            xs.append(x.copy())
            ps.append(p.copy())
            continue
        steps = max(1, math.ceil(span / dt - 1e-9))
        h = span / steps
        for _ in range(steps):
            p -= 0.5 * h * g
            x += h * minv * p
            g = spec.gradient(x)
            p -= 0.5 * h * g
        if check:
            r, pair = spec.closest_singular_pair(x)
            if r < spec.r_min:
                raise IntegrationError(f"pair {pair} reached r={r:.3e} near t={t_next:.6g}")
        t = t_next
        xs.append(x.copy())
        ps.append(p.copy())
    return Trajectory(np.asarray(sample_times, dtype=float), np.array(xs), np.array(ps), spec)


def integrate_final(spec: HamiltonianSpec, x0, p0s, t0, t1, rtol=1e-12, atol=1e-12):
    """Final positions for a batch of initial momenta from a common start.

    ``p0s`` has shape ``(nb, ndof)``; the batch is integrated as one system.
    """
    x0 = np.asarray(x0, dtype=float)
    p0s = np.atleast_2d(np.asarray(p0s, dtype=float))
    nb, n = p0s.shape
    y0 = np.concatenate([np.broadcast_to(x0, (nb, n)), p0s], axis=1).ravel()
    sol = solve_ivp(_rhs_factory(spec, False, batch=nb), (t0, t1), y0, method="DOP853",
                    t_eval=[t1], rtol=rtol, atol=atol)
    if sol.status != 0:
        raise IntegrationError(f"batch integration failed: {sol.message}")
    Y = sol.y[:, -1].reshape(nb, 2 * n)
    return Y[:, :n], Y[:, n:]


def action_along(spec: HamiltonianSpec, traj: Trajectory, quadrature: str = "simpson") -> float:
    """Action ``integral (T - V) dt`` over the samples of ``traj``.

    The kinetic term is taken from the stored momenta, so a trial path built
    with momenta ``m * dx/dt`` is evaluated as well as a true trajectory.
    """
    if len(traj.times) < 2:
        raise DomainError("action needs at least two samples")
    lag = spec.kinetic(traj.momenta) - spec.potential(traj.positions)
    if quadrature == "simpson":
        return float(simpson(lag, x=traj.times))
    if quadrature == "trapezoid":
        return float(trapezoid(lag, x=traj.times))
    raise DomainError(f"unknown quadrature {quadrature!r}")

"""Classical scattering off a central potential.

Deflection angles come from integrating the orbit equation in the polar
angle, ``u'' + u = r^2 V'(r) / (2 E b^2)`` with ``u = 1/r``, from the incoming
asymptote (``u = 0``, ``u' = 1/b``) to the outgoing one.  Scanning ``theta(b)``
and splitting it into monotone pieces gives every impact parameter that
feeds a given angle, from which cross-sections and transported incidence
densities follow.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from ._io import write_csv
from .dynamics.potentials import HardSphere
from .errors import DomainError, IntegrationError, OrbitingError, SingularAngleError

logger = logging.getLogger(__name__)

__all__ = [
    "DeflectionSample",
    "DeflectionScan",
    "BranchPoint",
    "IncidenceDensity",
    "CrossSectionTable",
    "deflection_function",
    "deflection_scan",
    "invert_branches",
    "classical_cross_section",
    "transfer_density",
    "cross_section_table",
    "cross_section_from_measure",
    "scattered_flux",
    "pullback_incidence_density",
    "rutherford_deflection",
    "rutherford_impact",
    "rutherford_cross_section",
]

RAINBOW_SLOPE = 1e-3
GLORY_BAND = math.radians(1.0)
SCAN_CUTOFF = math.radians(0.5)


@dataclass(frozen=True)
class DeflectionSample:
    b: float
    theta: float
    dtheta_db: float
    branch_id: int = 0

    def __post_init__(self):
        if self.b < 0:
            raise DomainError("impact parameter must be non-negative")
        if not 0 <= self.theta <= math.pi:
            raise DomainError("scattering angle must lie in [0, pi]")


def rutherford_deflection(b, k, E):
    """``2 arctan(k / (2 E b))`` for a repulsive ``k / r`` field."""
    return 2.0 * np.arctan2(k, 2.0 * E * np.asarray(b, dtype=float))


def rutherford_impact(theta, k, E):
    return k / (2.0 * E) / np.tan(0.5 * np.asarray(theta, dtype=float))


def rutherford_cross_section(theta, k, E):
    return (k / (4.0 * E)) ** 2 / np.sin(0.5 * np.asarray(theta, dtype=float)) ** 4


def _signed_deflection(shape, E, b, rtol, phi_max, r_min):
    """Signed deflection ``pi - phi_end`` (positive for net repulsion)."""
    c = 1.0 / (2.0 * E * b * b)
    force = shape.r2_dvdr
    u_cap = 1.0 / r_min

    def rhs(phi, y):
        u, w = y
        if u <= 0.0:
            return (w, -u)
        return (w, -u + c * float(force(1.0 / u)))

    def outgoing(phi, y):
        return y[0]

    outgoing.terminal = True
    outgoing.direction = -1

    def collapse(phi, y):
        return y[0] - u_cap

    collapse.terminal = True
    collapse.direction = 1

    # trial steps deep inside a steep core may overflow; step control rejects them
    with np.errstate(over="ignore", invalid="ignore"):
        sol = solve_ivp(rhs, (0.0, phi_max), (0.0, 1.0 / b), method="DOP853", rtol=rtol,
                        atol=rtol * 1e-2 / b, events=(outgoing, collapse))
    if sol.status < 0:
        raise IntegrationError(f"orbit integration failed at b={b}: {sol.message}")
    if sol.t_events[1].size:
        raise IntegrationError(f"orbit at b={b} falls below r_min={r_min}")
    if not sol.t_events[0].size:
        raise OrbitingError(f"orbit at b={b} still bound after {phi_max / math.pi:.0f} half-turns")
    return math.pi - float(sol.t_events[0][0])


def _fold(signed):
    """Scattering angle in [0, pi] from a signed deflection of any size."""
    return math.acos(max(-1.0, min(1.0, math.cos(signed))))


def _theta(shape, E, b, rtol=1e-10, phi_max=20 * math.pi, r_min=1e-8):
    if isinstance(shape, HardSphere):
        return float(shape.analytic_deflection(b))
    if b == 0.0:
        return math.pi
    return _fold(_signed_deflection(shape, E, b, rtol, phi_max, r_min))


def deflection_function(shape, E, b, h=None, rtol=1e-10) -> DeflectionSample:
    """Scattering angle and ``dtheta/db`` at impact parameter ``b``.

    Parameters
    ----------
    shape : radial potential shape or HardSphere
        Hard spheres are served from the closed form.
    E : float
        Kinetic energy at infinity (> 0).  The angle does not depend on mass.
    b : float
    h : float, optional
        Central-difference step, default ``1e-5 (1 + b)``.

    Raises
    ------
    OrbitingError
        If the orbit is trapped for many revolutions.
    """
    if not E > 0:
        raise DomainError("energy must be positive")
    b = float(b)
    if b < 0:
        raise DomainError("impact parameter must be non-negative")
    theta = _theta(shape, E, b, rtol)
    if isinstance(shape, HardSphere):
        d = -2.0 / math.sqrt(shape.R**2 - b * b) if b < shape.R else 0.0
        return DeflectionSample(b, theta, d)
    h = 1e-5 * (1.0 + b) if h is None else h
    if b > h:
        d = (_theta(shape, E, b + h, rtol) - _theta(shape, E, b - h, rtol)) / (2 * h)
    else:
        d = (_theta(shape, E, b + h, rtol) - theta) / h
    return DeflectionSample(b, theta, d)


def _theta_or_nan(args):
    shape, E, b = args
    try:
        return _theta(shape, E, b)
    except (OrbitingError, IntegrationError):
        return float("nan")


@dataclass(frozen=True)
class DeflectionScan:
    """``theta(b)`` sampled on ``[0, b_max]`` and split into monotone branches.

    ``branch_id`` labels consecutive samples on which ``theta`` is monotone;
    samples where the orbit could not be completed carry ``theta = nan`` and
    ``branch_id = -1``.
    """

    shape: object
    energy: float
    b: np.ndarray
    theta: np.ndarray
    dtheta_db: np.ndarray
    branch_id: np.ndarray

    @property
    def b_max(self):
        return float(self.b[-1])

    def segments(self):
        """Index ranges ``(start, stop)`` (inclusive) of each monotone branch."""
        out = []
        for k in np.unique(self.branch_id[self.branch_id >= 0]):
            idx = np.flatnonzero(self.branch_id == k)
            out.append((int(idx[0]), int(idx[-1])))
        return out

    def to_csv(self, path):
        rows = zip(self.b, self.theta, self.dtheta_db, self.branch_id)
        return write_csv(path, ["b", "theta", "dtheta_db", "branch_id"], rows)


def _find_b_max(shape, E, cutoff, b0=1.0):
    if isinstance(shape, HardSphere):
        return shape.R
    b = b0
    for _ in range(80):
        if _theta(shape, E, b) < cutoff:
            return b
        b *= 2.0
    raise SingularAngleError("deflection never drops below the scan cutoff", kind="forward")


def _label_branches(theta):
    slope = np.gradient(theta)
    ids = np.full(theta.size, -1)
    current, sign = -1, 0
    for k in range(theta.size):
        if not np.isfinite(theta[k]) or not np.isfinite(slope[k]):
            sign = 0
            continue
        s = int(np.sign(slope[k]))
        if current < 0 or ids[k - 1] < 0 or (s != 0 and sign != 0 and s != sign):
            current += 1
        if s != 0:
            sign = s
        ids[k] = current
    return ids


def deflection_scan(shape, E, n=2000, b_max=None, cutoff=SCAN_CUTOFF, workers=1) -> DeflectionScan:
    """Sample ``theta`` on ``n`` points over ``[0, b_max]`` and label monotone branches.

    ``b_max`` defaults to the first power-of-two multiple of 1 at which the
    deflection is below ``cutoff`` (0.5 degree).  ``workers > 1`` spreads the
    orbit integrations over processes.
    """
    if not E > 0:
        raise DomainError("energy must be positive")
    if n < 4:
        raise DomainError("scan needs at least four points")
    if b_max is None:
        b_max = _find_b_max(shape, E, cutoff)
    b = np.linspace(0.0, b_max, n)
    args = [(shape, E, float(x)) for x in b]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            theta = np.array(list(pool.map(_theta_or_nan, args, chunksize=max(1, n // (4 * workers)))))
    else:
        theta = np.array([_theta_or_nan(a) for a in args])
    if np.isnan(theta).any():
        logger.info("%d scan points trapped or collapsed", int(np.isnan(theta).sum()))
    dtheta = np.gradient(theta, b)
    return DeflectionScan(shape, E, b, theta, dtheta, _label_branches(theta))


@dataclass(frozen=True)
class BranchPoint:
    """One impact parameter feeding a given angle, with ``|db/dtheta|`` there."""

    b: float
    db_dtheta: float
    branch_id: int


def _check_glory(theta):
    if not 0 < theta <= math.pi:
        raise DomainError("angle must lie in (0, pi]")
    if theta < GLORY_BAND or theta > math.pi - GLORY_BAND:
        raise SingularAngleError(f"theta={math.degrees(theta):.4g} deg inside the glory band", kind="glory")


def invert_branches(scan: DeflectionScan, theta: float) -> List[BranchPoint]:
    """Every ``b`` with ``theta(b) = theta``, one per monotone branch of the scan.

    Raises
    ------
    SingularAngleError
        Inside the glory band, at a rainbow (``|dtheta/db| < 1e-3``), or when
        ``theta`` is only reached beyond the scanned range (forward divergence).
    """
    theta = float(theta)
    _check_glory(theta)
    shape, E = scan.shape, scan.energy
    if isinstance(shape, HardSphere):
        b = float(shape.analytic_impact(theta))
        return [BranchPoint(b, 0.5 * shape.R * math.sin(0.5 * theta), 0)]
    tail = scan.theta[-1]
    if np.isfinite(tail) and theta <= tail:
        raise SingularAngleError("angle only reached beyond the scanned impact range", kind="forward")
    out = []
    for i0, i1 in scan.segments():
        lo, hi = scan.theta[i0], scan.theta[i1]
        if not min(lo, hi) <= theta <= max(lo, hi) or i1 == i0:
            continue
        if theta == lo:
            b = scan.b[i0]
        elif theta == hi:
            b = scan.b[i1]
        else:
            b = brentq(lambda x: _theta(shape, E, x) - theta, scan.b[i0], scan.b[i1], xtol=1e-14, rtol=1e-14)
        d = deflection_function(shape, E, b).dtheta_db
        if abs(d) < RAINBOW_SLOPE:
            raise SingularAngleError(f"theta={math.degrees(theta):.4g} deg at a rainbow (b={b:.6g})", kind="rainbow")
        out.append(BranchPoint(float(b), 1.0 / abs(d), int(scan.branch_id[i0])))
    return out


class IncidenceDensity:
    """Non-negative density ``rho(b, phi)`` over the incident beam cross-section."""

    def __init__(self, rho: Callable[[float, float], float]):
        self.rho = rho

    @classmethod
    def lebesgue(cls):
        return cls(lambda b, phi: 1.0)

    @classmethod
    def constant(cls, c):
        if c < 0:
            raise DomainError("density must be non-negative")
        return cls(lambda b, phi: c)

    def __call__(self, b, phi=0.0):
        v = self.rho(b, phi)
        if v < 0:
            raise DomainError(f"negative incidence density at b={b}")
        return v


def transfer_density(rho_I, branches: List[BranchPoint], theta: float, phi: float = 0.0) -> float:
    """Final-angle density ``sum_i rho_I(b_i, phi) b_i |db_i/dtheta| / sin(theta)``."""
    _check_glory(theta)
    s = math.sin(theta)
    return float(sum(rho_I(bp.b, phi) * bp.b / s * bp.db_dtheta for bp in branches))


_LEBESGUE = IncidenceDensity.lebesgue()


def classical_cross_section(branches: List[BranchPoint], theta: float) -> float:
    """``sum_i b_i |db_i/dtheta| / sin(theta)``; the uniform-beam transfer density."""
    return transfer_density(_LEBESGUE, branches, theta)


@dataclass(frozen=True)
class CrossSectionTable:
    """Cross-section per angle; flagged angles hold ``nan`` and the flag name."""

    theta: np.ndarray
    sigma: np.ndarray
    n_branches: np.ndarray
    flags: tuple
    normalizers: Optional[np.ndarray] = None
    converged: Optional[bool] = None
    notes: list = field(default_factory=list)

    def to_csv(self, path):
        rows = zip(np.degrees(self.theta), self.sigma, self.n_branches, self.flags)
        return write_csv(path, ["theta_deg", "sigma", "n_branches", "flag"], rows)


def cross_section_table(scan: DeflectionScan, thetas, rho_I=None) -> CrossSectionTable:
    """Tabulate the classical cross-section (or a transported density) over angles."""
    thetas = np.asarray(thetas, dtype=float)
    sig, nb, flags = [], [], []
    for th in thetas:
        try:
            br = invert_branches(scan, th)
        except SingularAngleError as exc:
            sig.append(float("nan"))
            nb.append(0)
            flags.append(exc.kind or "singular")
            continue
        sig.append(classical_cross_section(br, th) if rho_I is None else transfer_density(rho_I, br, th))
        nb.append(len(br))
        flags.append("")
    return CrossSectionTable(thetas, np.array(sig), np.array(nb), tuple(flags))


def cross_section_from_measure(theta, rho_F, radii, theta_of_b: Callable[[float], float],
                               rtol=1e-3) -> CrossSectionTable:
    """Cross-section ``rho_F / mu_bar`` with the normalizer taken from nested disks.

    ``rho_F`` samples the final-angle density of a path-set measure on the
    increasing grid ``theta``, which must reach ``pi``.  For each radius
    ``B_n`` the disk ``b < B_n`` of the incident beam maps (for a monotone
    repulsive deflection) onto angles above ``theta_of_b(B_n)``, so

        mu_bar_n = 2 pi int_{theta(B_n)}^{pi} rho_F sin(theta) dtheta / (pi B_n^2).

    The last element of the sequence is used; the sequence counts as
    converged when its last two elements agree within ``rtol`` (relative).
    """
    theta = np.asarray(theta, dtype=float)
    rho_F = np.asarray(rho_F, dtype=float)
    radii = np.sort(np.asarray(radii, dtype=float))
    if theta.shape != rho_F.shape or theta.ndim != 1 or np.any(np.diff(theta) <= 0):
        raise DomainError("theta must be increasing and match rho_F")
    if not np.all(np.isfinite(rho_F)) or np.any(rho_F < 0):
        raise DomainError("rho_F samples must be finite and non-negative")
    if abs(theta[-1] - math.pi) > 1e-12:
        raise DomainError("theta grid must end at pi")
    if radii.size < 2 or radii[0] <= 0:
        raise DomainError("need at least two positive radii")
    spline = CubicSpline(theta, 2 * math.pi * rho_F * np.sin(theta))
    mus = []
    for B in radii:
        lo = theta_of_b(B)
        if lo < theta[0]:
            raise DomainError(f"theta grid does not reach down to theta(B={B})={lo:.4g}")
        mus.append(float(spline.integrate(lo, math.pi)) / (math.pi * B * B))
    mus = np.array(mus)
    converged = bool(abs(mus[-1] - mus[-2]) <= rtol * abs(mus[-1]))
    notes = [] if converged else ["normalizer sequence not Cauchy within tolerance; sigma inconclusive"]
    return CrossSectionTable(theta, rho_F / mus[-1], np.full(theta.size, -1), tuple("" for _ in theta),
                             mus, converged, notes)


def scattered_flux(scan: DeflectionScan, theta_min: float, theta_max: float = math.pi - GLORY_BAND,
                   n_nodes: int = 48):
    """Flux scattered into ``[theta_min, theta_max]`` versus the feeding annulus area.

    Returns ``(flux, area)`` with ``flux = 2 pi int sigma sin(theta) dtheta``
    by Gauss-Legendre quadrature and ``area = pi (b(theta_min)^2 -
    b(theta_max)^2)``; valid for a single monotone branch.
    """
    if not theta_min < theta_max:
        raise DomainError("need theta_min < theta_max")
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    mid, half = 0.5 * (theta_max + theta_min), 0.5 * (theta_max - theta_min)
    flux = 0.0
    for xi, wi in zip(x, w):
        th = mid + half * xi
        flux += wi * half * classical_cross_section(invert_branches(scan, th), th) * math.sin(th)
    flux *= 2 * math.pi
    lo, hi = invert_branches(scan, theta_min), invert_branches(scan, theta_max)
    if len(lo) != 1 or len(hi) != 1:
        raise DomainError("flux balance needs a single monotone branch")
    return flux, math.pi * (lo[0].b ** 2 - hi[0].b ** 2)


def pullback_incidence_density(scan: DeflectionScan, sigma_Q: Callable[[float], float], b: float) -> float:
    """Incidence density at ``b`` that reproduces an assigned cross-section ``sigma_Q``.

    For a single branch, ``rho_I(b) = sigma_Q(theta(b)) / sigma_C(theta(b))``.

    Raises
    ------
    NotImplementedError
        When several impact parameters feed ``theta(b)``; the pullback is not
        unique there.
    """
    th = _theta(scan.shape, scan.energy, b)
    br = invert_branches(scan, th)
    if len(br) != 1:
        raise NotImplementedError("incidence pullback through several branches is not unique")
    return float(sigma_Q(th) / classical_cross_section(br, th))

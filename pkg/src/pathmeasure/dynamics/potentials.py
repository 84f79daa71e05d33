"""Radial potential shapes and the potential terms a Hamiltonian is built from.

Radial shapes expose ``value``, ``dvdr`` and ``d2vdr2`` as numpy-vectorized
functions of the distance ``r``.  Terms combine shapes with particle indices.
"""

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from ..errors import DomainError

__all__ = [
    "ScreenedCoulomb",
    "SpringPotential",
    "LennardJones",
    "TabulatedPotential",
    "HardSphere",
    "ExternalHarmonic",
    "ExternalCentral",
    "PairPotential",
]


@dataclass(frozen=True)
class ScreenedCoulomb:
    """Yukawa form ``k * exp(-r/a) / r``; ``k < 0`` is attractive."""

    k: float
    a: float
    singular = True

    def __post_init__(self):
        if self.a <= 0:
            raise DomainError("screening length a must be positive")

    def value(self, r):
        return self.k * np.exp(-r / self.a) / r

    def dvdr(self, r):
        return -self.k * np.exp(-r / self.a) * (1.0 / r**2 + 1.0 / (self.a * r))

    def d2vdr2(self, r):
        a = self.a
        return self.k * np.exp(-r / a) * (2.0 / r**3 + 2.0 / (a * r**2) + 1.0 / (a * a * r))

    def r2_dvdr(self, r):
        """``r**2 * V'(r)``, finite as r -> infinity (used by orbit integration)."""
        return -self.k * np.exp(-r / self.a) * (1.0 + r / self.a)


@dataclass(frozen=True)
class SpringPotential:
    """``0.5 * kappa * r**2`` between two particles (or about the origin)."""

    kappa: float
    singular = False

    def value(self, r):
        return 0.5 * self.kappa * r**2

    def dvdr(self, r):
        return self.kappa * r

    def d2vdr2(self, r):
        return self.kappa + 0.0 * r

    def r2_dvdr(self, r):
        return self.kappa * r**3


@dataclass(frozen=True)
class LennardJones:
    """``4 eps [(s/r)^12 - (s/r)^6]``: repulsive core plus attractive well."""

    epsilon: float
    sigma: float
    singular = True

    def value(self, r):
        x = (self.sigma / r) ** 6
        return 4.0 * self.epsilon * (x * x - x)

    def dvdr(self, r):
        x = (self.sigma / r) ** 6
        return 4.0 * self.epsilon * (-12.0 * x * x + 6.0 * x) / r

    def d2vdr2(self, r):
        x = (self.sigma / r) ** 6
        return 4.0 * self.epsilon * (156.0 * x * x - 42.0 * x) / r**2

    def r2_dvdr(self, r):
        x = (self.sigma / r) ** 6
        return 4.0 * self.epsilon * (-12.0 * x * x + 6.0 * x) * r


class TabulatedPotential:
    """Radial potential interpolated from samples on ``(0, r_max]``.

    A natural cubic spline through the samples; identically zero beyond
    ``r_max``.  The last sample must already be (close to) zero so the
    potential decays at ``r_max``.
    """

    singular = True

    def __init__(self, r, v, decay_tol=1e-8):
        r = np.asarray(r, dtype=float)
        v = np.asarray(v, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size < 4:
            raise DomainError("need matching 1-D arrays with at least 4 samples")
        if np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise DomainError("sample radii must be positive and strictly increasing")
        if abs(v[-1]) > decay_tol * max(1.0, np.abs(v).max()):
            raise DomainError("tabulated potential must decay at r_max")
        self.r = r
        self.v = v
        self.r_min = r[0]
        self.r_max = r[-1]
        self._spline = CubicSpline(r, v, bc_type="natural")
        self._d1 = self._spline.derivative(1)
        self._d2 = self._spline.derivative(2)

    def __repr__(self):
        return f"TabulatedPotential(n={self.r.size}, r_max={self.r_max})"

    def _eval(self, f, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < self.r_min):
            raise DomainError(f"r below tabulated range ({self.r_min})")
        out = np.where(r > self.r_max, 0.0, f(np.minimum(r, self.r_max)))
        return out if out.ndim else float(out)

    def value(self, r):
        return self._eval(self._spline, r)

    def dvdr(self, r):
        return self._eval(self._d1, r)

    def d2vdr2(self, r):
        return self._eval(self._d2, r)

    def r2_dvdr(self, r):
        return np.asarray(r) ** 2 * self.dvdr(r)


@dataclass(frozen=True)
class HardSphere:
    """Impenetrable sphere of radius R; served analytically, never integrated."""

    R: float
    singular = True

    def __post_init__(self):
        if self.R <= 0:
            raise DomainError("hard-sphere radius must be positive")

    def analytic_deflection(self, b):
        b = np.asarray(b, dtype=float)
        th = 2.0 * np.arccos(np.clip(b / self.R, -1.0, 1.0))
        out = np.where(b < self.R, th, 0.0)
        return out if out.ndim else float(out)

    def analytic_impact(self, theta):
        return self.R * np.cos(0.5 * np.asarray(theta, dtype=float))


# --- terms -----------------------------------------------------------------


@dataclass(frozen=True)
class ExternalHarmonic:
    """Independent isotropic traps ``0.5 m_i w_i^2 |x_i|^2``.

    ``omega`` holds one frequency per particle (a scalar is broadcast).
    """

    omega: Tuple[float, ...]


@dataclass(frozen=True)
class ExternalCentral:
    """Central field ``V(|x_i|)`` acting on the listed particles."""

    shape: object
    particles: Tuple[int, ...] = (0,)


@dataclass(frozen=True)
class PairPotential:
    """Two-body interaction ``V(|x_i - x_j|)``."""

    i: int
    j: int
    shape: object = field(default=None)

    def __post_init__(self):
        if self.i == self.j:
            raise DomainError("pair potential needs two distinct particles")

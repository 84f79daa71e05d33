"""Particle Hamiltonians ``H = sum p_i^2 / 2 m_i + V(x)`` and phase-space types."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..errors import DomainError
from .potentials import (
    ExternalCentral,
    ExternalHarmonic,
    HardSphere,
    PairPotential,
    ScreenedCoulomb,
)

__all__ = ["HamiltonianSpec", "PhasePoint"]


def _radial_force(shape, d):
    """Gradient of ``V(|d|)`` w.r.t. ``d``; zero at coincidence, where a regular V' vanishes."""
    r = np.linalg.norm(d, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        rhat = np.where(r > 0, d / r, 0.0)
    return shape.dvdr(r) * rhat


def _radial_grad_hess(shape, d):
    """Gradient and Hessian of ``V(|d|)`` w.r.t. the vector ``d`` (batched)."""
    r = np.linalg.norm(d, axis=-1)
    v1 = shape.dvdr(r)
    v2 = shape.d2vdr2(r)
    with np.errstate(invalid="ignore", divide="ignore"):
        rhat = d / r[..., None]
    rhat = np.nan_to_num(rhat)
    grad = v1[..., None] * rhat
    dim = d.shape[-1]
    outer = rhat[..., :, None] * rhat[..., None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        tang = np.where(r > 0, v1 / r, v2)
    eye = np.eye(dim)
    hess = v2[..., None, None] * outer + tang[..., None, None] * (eye - outer)
    return grad, hess


@dataclass(frozen=True)
class HamiltonianSpec:
    """Masses, spatial dimension and potential terms of an N-particle system.

    Positions and momenta are flat arrays of length ``N * dimension`` ordered
    particle by particle.  Batched arrays with leading axes are accepted by
    every method.
    """

    masses: Tuple[float, ...]
    dimension: int = 1
    terms: Tuple[object, ...] = ()
    r_min: float = 1e-6

    def __post_init__(self):
        masses = tuple(float(m) for m in np.atleast_1d(self.masses))
        if not masses or any(m <= 0 for m in masses):
            raise DomainError("masses must be positive")
        if self.dimension not in (1, 2, 3):
            raise DomainError("dimension must be 1, 2 or 3")
        object.__setattr__(self, "masses", masses)
        terms = tuple(self.terms)
        n = len(masses)
        for t in terms:
            if isinstance(t, ExternalHarmonic):
                om = tuple(float(w) for w in np.broadcast_to(np.atleast_1d(t.omega), (n,)))
                terms = tuple(ExternalHarmonic(om) if s is t else s for s in terms)
            elif isinstance(t, PairPotential):
                if not (0 <= t.i < n and 0 <= t.j < n):
                    raise DomainError(f"pair ({t.i}, {t.j}) out of range for {n} particles")
                self._check_shape(t.shape)
            elif isinstance(t, ExternalCentral):
                if any(not 0 <= i < n for i in t.particles):
                    raise DomainError("external-central particle index out of range")
                self._check_shape(t.shape)
            else:
                raise DomainError(f"unknown potential term {t!r}")
        object.__setattr__(self, "terms", terms)

    @staticmethod
    def _check_shape(shape):
        if isinstance(shape, HardSphere):
            raise DomainError("hard-sphere potentials are served analytically, not integrated")
        if isinstance(shape, ScreenedCoulomb) and shape.a <= 0:
            raise DomainError("screening length must be positive")

    # convenience constructors
    @classmethod
    def free(cls, masses, dimension=1):
        return cls(tuple(np.atleast_1d(masses)), dimension)

    @classmethod
    def harmonic(cls, masses, omega, dimension=1):
        return cls(tuple(np.atleast_1d(masses)), dimension, (ExternalHarmonic(tuple(np.atleast_1d(omega))),))

    @property
    def n_particles(self) -> int:
        return len(self.masses)

    @property
    def ndof(self) -> int:
        return self.n_particles * self.dimension

    @property
    def mass_vector(self) -> np.ndarray:
        """Mass per coordinate (length ``ndof``)."""
        return np.repeat(np.asarray(self.masses), self.dimension)

    def _split(self, x):
        x = np.asarray(x, dtype=float)
        return x.reshape(x.shape[:-1] + (self.n_particles, self.dimension))

    def kinetic(self, p):
        p = np.asarray(p, dtype=float)
        return 0.5 * np.sum(p * p / self.mass_vector, axis=-1)

    def potential(self, x):
        xs = self._split(x)
        out = np.zeros(xs.shape[:-2])
        for t in self.terms:
            if isinstance(t, ExternalHarmonic):
                w2m = np.asarray(t.omega) ** 2 * np.asarray(self.masses)
                out = out + 0.5 * np.sum(w2m * np.sum(xs * xs, axis=-1), axis=-1)
            elif isinstance(t, PairPotential):
                r = np.linalg.norm(xs[..., t.i, :] - xs[..., t.j, :], axis=-1)
                out = out + t.shape.value(r)
            else:
                for i in t.particles:
                    out = out + t.shape.value(np.linalg.norm(xs[..., i, :], axis=-1))
        return out

    def hamiltonian(self, x, p):
        return self.kinetic(p) + self.potential(x)

    def closest_singular_pair(self, x):
        """Smallest distance among singular interactions and the pair that attains it."""
        xs = self._split(x)
        best = (np.inf, None)
        for t in self.terms:
            if isinstance(t, PairPotential) and t.shape.singular:
                r = float(np.min(np.linalg.norm(xs[..., t.i, :] - xs[..., t.j, :], axis=-1)))
                if r < best[0]:
                    best = (r, (t.i, t.j))
            elif isinstance(t, ExternalCentral) and t.shape.singular:
                for i in t.particles:
                    r = float(np.min(np.linalg.norm(xs[..., i, :], axis=-1)))
                    if r < best[0]:
                        best = (r, (i, "origin"))
        return best

    def gradient(self, x):
        """dV/dx, same shape as ``x``."""
        xs = self._split(x)
        g = np.zeros_like(xs)
        for t in self.terms:
            if isinstance(t, ExternalHarmonic):
                w2m = (np.asarray(t.omega) ** 2 * np.asarray(self.masses))[:, None]
                g = g + w2m * xs
            elif isinstance(t, PairPotential):
                f = _radial_force(t.shape, xs[..., t.i, :] - xs[..., t.j, :])
                g[..., t.i, :] += f
                g[..., t.j, :] -= f
            else:
                for i in t.particles:
                    g[..., i, :] += _radial_force(t.shape, xs[..., i, :])
        return g.reshape(np.shape(x))

    def hessian(self, x):
        """Second derivatives of V, shape ``(..., ndof, ndof)``."""
        xs = self._split(x)
        n, dim = self.n_particles, self.dimension
        batch = xs.shape[:-2]
        h = np.zeros(batch + (n, dim, n, dim))
        for t in self.terms:
            if isinstance(t, ExternalHarmonic):
                for i, w in enumerate(t.omega):
                    h[..., i, :, i, :] += self.masses[i] * w * w * np.eye(dim)
            elif isinstance(t, PairPotential):
                _, hh = _radial_grad_hess(t.shape, xs[..., t.i, :] - xs[..., t.j, :])
                h[..., t.i, :, t.i, :] += hh
                h[..., t.j, :, t.j, :] += hh
                h[..., t.i, :, t.j, :] -= hh
                h[..., t.j, :, t.i, :] -= hh
            else:
                for i in t.particles:
                    _, hh = _radial_grad_hess(t.shape, xs[..., i, :])
                    h[..., i, :, i, :] += hh
        return h.reshape(batch + (n * dim, n * dim))


@dataclass(frozen=True)
class PhasePoint:
    """Positions and momenta (flat, length ``ndof``) at a given time."""

    positions: np.ndarray
    momenta: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.positions, dtype=float)).copy()
        p = np.atleast_1d(np.asarray(self.momenta, dtype=float)).copy()
        if x.shape != p.shape or x.ndim != 1:
            raise DomainError("positions and momenta must be 1-D arrays of equal length")
        x.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "momenta", p)
        object.__setattr__(self, "time", float(self.time))

    def check(self, spec: HamiltonianSpec):
        if self.positions.size != spec.ndof:
            raise DomainError(f"phase point has {self.positions.size} coordinates, spec needs {spec.ndof}")
        return self

"""Hamiltonian trajectory engine: integration, action, shooting, asymptotics."""

from .asymptotics import ChannelPartition, PLimitReport, classify_channel, p_limit
from .hamiltonian import HamiltonianSpec, PhasePoint
from .integrate import StepControl, Trajectory, action_along, energy, integrate, integrate_final
from .potentials import (
    ExternalCentral,
    ExternalHarmonic,
    HardSphere,
    LennardJones,
    PairPotential,
    ScreenedCoulomb,
    SpringPotential,
    TabulatedPotential,
)
from .shooting import BoundarySolutions, ShootSettings, refine_branch, shoot_boundary

__all__ = [
    "HamiltonianSpec", "PhasePoint", "StepControl", "Trajectory",
    "integrate", "integrate_final", "action_along", "energy",
    "ShootSettings", "BoundarySolutions", "shoot_boundary", "refine_branch",
    "PLimitReport", "p_limit", "ChannelPartition", "classify_channel",
    "ScreenedCoulomb", "SpringPotential", "LennardJones", "TabulatedPotential", "HardSphere",
    "ExternalHarmonic", "ExternalCentral", "PairPotential",
]

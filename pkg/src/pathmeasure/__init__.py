"""Path-set measures for Bernoulli maps, classical mechanics and semiclassics.

Subpackages and modules:

* :mod:`pathmeasure.measure_lab`: exact digit arithmetic for the doubling map
* :mod:`pathmeasure.dynamics`: Hamiltonian integration, shooting, p-limits
* :mod:`pathmeasure.semiclassical`: Van Vleck/Maslov densities and fringes
* :mod:`pathmeasure.scattering`: deflection functions and cross-sections
* :mod:`pathmeasure.decay`: least-action decay vertex
* :mod:`pathmeasure.correlations`: heavy/light collision densities
"""

__version__ = "0.1.0"

from . import correlations, decay, dynamics, measure_lab, scattering, semiclassical  # noqa: E402
from .errors import (  # noqa: E402
    CausticError,
    ConvergenceError,
    DomainError,
    IntegrationError,
    ModelError,
    NumericalError,
    OrbitingError,
    PathMeasureError,
    ShootingError,
    SingularAngleError,
)

__all__ = [
    "correlations", "decay", "dynamics", "measure_lab", "scattering", "semiclassical",
    "CausticError", "ConvergenceError", "DomainError", "IntegrationError", "ModelError", "NumericalError",
    "OrbitingError", "PathMeasureError", "ShootingError", "SingularAngleError", "__version__",
]

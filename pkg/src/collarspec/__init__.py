"""Spectra of Laplacians on degenerating warped-product collars.

The collar ``I x M`` carries ``rho(eps, t)^{2a} dt^2 + rho(eps, t)^{2b} h``.
Separating fiber modes reduces the Laplacian to one radial Sturm-Liouville
problem per fiber eigenvalue; the modules below solve, assemble and
analyse those problems as ``eps -> 0``.
"""

__version__ = "0.1.0"

from .metric import (CollarConfig, ConfigError, FiberSpectrum, ProfileRho,
                     frozen_profile, make_profile, sl_coefficients)
from .sturm import (BC, SLProblem, count_eigenvalues, eigenfunction,
                    kth_eigenvalue, matrix_oracle)

__all__ = [
    "__version__",
    "BC",
    "CollarConfig",
    "ConfigError",
    "FiberSpectrum",
    "ProfileRho",
    "SLProblem",
    "count_eigenvalues",
    "eigenfunction",
    "frozen_profile",
    "kth_eigenvalue",
    "make_profile",
    "matrix_oracle",
    "sl_coefficients",
]

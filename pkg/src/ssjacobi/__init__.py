"""Semi-separable differentiation matrices for weighted Jacobi spectral bases.

Modules:
    specfun    -- Jacobi polynomials, Gauss-Jacobi quadrature, hypergeometrics.
    semisep    -- generator-form semi-separable matrices: O(N r) matvec,
                  products, and an O(N r^2) structured solver.
    jacobidiff -- the rank-2 skew-symmetric differentiation matrix, built by
                  four mutually validating routes.
    spectral   -- basis evaluation, the coefficient map, and diffusion /
                  advection time-steppers.
    cli        -- command-line front end (gen, verify, bench, demo).
"""

from . import jacobidiff, semisep, specfun, spectral
from .jacobidiff import DiffMatrixBuild, build
from .semisep import SemiSepGenerators, SkewGeneratorPair, solve_structured
from .specfun import JacobiParams
from .spectral import CoeffVector

__version__ = "0.1.0"

__all__ = [
    "specfun",
    "semisep",
    "jacobidiff",
    "spectral",
    "JacobiParams",
    "SemiSepGenerators",
    "SkewGeneratorPair",
    "DiffMatrixBuild",
    "CoeffVector",
    "build",
    "solve_structured",
    "__version__",
]

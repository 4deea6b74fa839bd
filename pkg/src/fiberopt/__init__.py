"""Branch-wise ground-state computation for energies whose ray restrictions
have a local minimum followed by a local maximum.

Subpackages:
    fibering   -- exact scalar analysis for homogeneous three-term energies
    fields     -- grids, discrete fields, energies, and their gradients
    nehari     -- ray projections, reduced functionals, sphere minimization
    prescribed -- prescribed-energy solves via the generalized quotient
    affine     -- the 2-D affine p-energy driver
    cli        -- configuration, sweeps, reports, figures
"""

__version__ = "0.1.0"

from .errors import (
    BranchUnavailableError,
    ConfigError,
    ContractViolation,
    DegenerateRayError,
    DomainError,
    NumericalError,
    UnimodalityError,
)

__all__ = [
    "__version__",
    "BranchUnavailableError",
    "ConfigError",
    "ContractViolation",
    "DegenerateRayError",
    "DomainError",
    "NumericalError",
    "UnimodalityError",
]

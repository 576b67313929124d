"""specpart: optimal spectral partitions of planar domains.

Minimizes costs of Dirichlet eigenvalues over partitions of a domain by
driving a penalized energy over groups of L2-orthonormal finite-element
fields to its segregated limit, then verifies the structure of the computed
partition: per-subdomain eigenvalue consistency, the spectral gap, and the
coefficient-weighted gradient balance across the interfaces.
"""

__version__ = "0.1.0"

from .energy import GroupState
from .errors import (ConvergenceError, DegenerateStateError, SpecpartError,
                     StageFailureError)
from .functional import FunctionalSpec, InnerSpec
from .mesh import Mesh, build_disk_mesh, build_rectangle_mesh, build_square_mesh
from .optimizer import RunTrace, SolverConfig, continuation_run

__all__ = [
    "ConvergenceError",
    "DegenerateStateError",
    "FunctionalSpec",
    "GroupState",
    "InnerSpec",
    "Mesh",
    "RunTrace",
    "SolverConfig",
    "SpecpartError",
    "StageFailureError",
    "build_disk_mesh",
    "build_rectangle_mesh",
    "build_square_mesh",
    "continuation_run",
    "__version__",
]

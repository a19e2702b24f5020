"""permatrace: implicit manifold tracing on permutahedral lattices.

Triangulates codimension-1 zero sets of scalar fields in R^n by walking
sign-changing lattice edges, refines them by symmetric subdivision, and
uses the machinery to construct and verify motion-planning infeasibility
certificates for sphere-decomposed robots.
"""

from .backend import BACKEND
from .lattice import LatticeConfig, PermSimplex
from .manifold import (
    EllipsoidManifold,
    ImplicitManifold,
    KernelClassifierManifold,
    PlaneManifold,
    SphereManifold,
    train_classifier,
)
from .pipeline import (
    InfeasibilityProof,
    Plan,
    Problem,
    SolveParams,
    SolveTimeout,
    load_problem_file,
    solve,
    verify_proof,
)
from .subdivision import build_template, coarse_cells, refine
from .tracer import TraceConfig, TraceResult, trace

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "LatticeConfig",
    "PermSimplex",
    "ImplicitManifold",
    "SphereManifold",
    "EllipsoidManifold",
    "PlaneManifold",
    "KernelClassifierManifold",
    "train_classifier",
    "TraceConfig",
    "TraceResult",
    "trace",
    "build_template",
    "coarse_cells",
    "refine",
    "Problem",
    "SolveParams",
    "Plan",
    "SolveTimeout",
    "InfeasibilityProof",
    "solve",
    "verify_proof",
    "load_problem_file",
    "__version__",
]

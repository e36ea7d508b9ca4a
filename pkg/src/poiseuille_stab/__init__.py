"""Linear and nonlinear stability toolkit for plane channel flow.

Chebyshev collocation infrastructure, the per-mode linearized vorticity
operator with its resolvent and pseudospectral diagnostics, quadrature
checks of the critical-layer inequalities, and a pseudo-spectral solver
for the full perturbation equation with threshold sweeps.
"""

__version__ = "0.1.0"

from .chebyshev import (
    ChebyshevGrid,
    DiffOp,
    diff_ops,
    helmholtz_solve,
    l2_inner,
    l2_norm,
    make_grid,
)
from .modeop import ModeOperator, ModeParams, assemble, resolvent_solve, resolvent_sweep
from .semigroup import fit_decay, psi_bound, semigroup_norms, spectrum

__all__ = [
    "ChebyshevGrid",
    "DiffOp",
    "ModeOperator",
    "ModeParams",
    "__version__",
    "assemble",
    "diff_ops",
    "fit_decay",
    "helmholtz_solve",
    "l2_inner",
    "l2_norm",
    "make_grid",
    "psi_bound",
    "resolvent_solve",
    "resolvent_sweep",
    "semigroup_norms",
    "spectrum",
]

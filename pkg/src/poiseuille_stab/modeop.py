"""Per-mode linearized operator around the parabolic channel flow.

For the streamwise Fourier mode k the vorticity perturbation is governed by

    M = -nu (d2 - k^2) + i k diag(1 - y^2) + 2 i k (d2 - k^2)^{-1}

acting on interior node values (the wall rows are eliminated through the
w(+-1) = 0 condition, and the inverse uses the same Dirichlet block). The
resolvent problem shifts this by -i mu with the real spectral parameter
mu = k * lambda.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve, svdvals
from scipy.linalg.lapack import zgecon

from .chebyshev import helmholtz_matrix


class NearSingularSolve(UserWarning):
    """Resolvent solve with condition estimate beyond 1e14."""


@dataclass(frozen=True)
class ModeParams:
    nu: float
    k: int

    def __post_init__(self):
        if not 0.0 < self.nu <= 1.0:
            raise ValueError(f"nu must lie in (0, 1], got {self.nu}")
        if int(self.k) != self.k or abs(self.k) < 1:
            raise ValueError(f"k must be a nonzero integer, got {self.k}")


@dataclass(frozen=True)
class ModeOperator:
    """Dense realization of one mode, plus quadrature-norm metadata.

    ``matrix`` acts on interior node values; ``weight_sqrt`` holds
    sqrt(quad_weights) on the interior nodes, so that
    W^{1/2} matrix W^{-1/2} has 2-norm equal to the quadrature-weighted
    operator norm.
    """

    params: ModeParams
    matrix: np.ndarray
    weight_sqrt: np.ndarray
    grid: object
    ops: object = field(repr=False, default=None)

    @property
    def symmetrized(self):
        ws = self.weight_sqrt
        return (ws[:, None] * self.matrix) / ws[None, :]

    def shifted(self, mu):
        n = self.matrix.shape[0]
        return self.symmetrized - 1j * mu * np.eye(n)


def assemble(grid, ops, params, include_advection=True):
    """Build the interior-node matrix for one mode.

    ``include_advection=False`` drops the shear and nonlocal blocks,
    leaving pure Dirichlet diffusion -nu(d2 - k^2); that variant has the
    analytic spectrum nu(k^2 + n^2 pi^2 / 4) and anchors the tests.

    The nonlocal block is obtained by solving H X = I column-wise against
    a single LU factorization of the Dirichlet Helmholtz matrix H; no
    explicit inverse formula is formed.
    """
    if abs(params.k) < 1:
        raise ValueError("k = 0 has no nonlocal term; it is handled by the dns module")
    nu, k = params.nu, params.k
    y_int = grid.nodes[1:-1]
    n_int = y_int.size
    h = helmholtz_matrix(grid, ops, k)
    m = -nu * h
    if include_advection:
        h_inv = lu_solve(lu_factor(h), np.eye(n_int))
        m = m.astype(complex)
        m += 1j * k * np.diag(1.0 - y_int**2)
        m += 2j * k * h_inv
    else:
        m = m.astype(complex)
    return ModeOperator(
        params=params,
        matrix=m,
        weight_sqrt=np.sqrt(grid.quad_weights[1:-1]),
        grid=grid,
        ops=ops,
    )


def resolvent_solve(op, mu, forcing):
    """Solve (M - i mu) w = forcing on the interior nodes.

    Warns (NearSingularSolve) instead of failing when the LU condition
    estimate exceeds 1e14: deep inside the pseudospectrum at tiny nu the
    solve is legitimate but ill-conditioned, and sweeps must keep going.
    """
    forcing = np.asarray(forcing, dtype=complex)
    a = op.matrix - 1j * mu * np.eye(op.matrix.shape[0])
    lu = lu_factor(a)
    anorm = np.abs(a).sum(axis=0).max()
    rcond = zgecon(lu[0], anorm)[0]
    if rcond < 1e-14:
        warnings.warn(
            f"resolvent solve at mu={mu:g} has condition estimate "
            f"{1.0 / max(rcond, 1e-300):.2e}",
            NearSingularSolve,
        )
    return lu_solve(lu, forcing)


@dataclass(frozen=True)
class ResolventReport:
    params: ModeParams
    mu_grid: np.ndarray
    sigma_min: np.ndarray
    resolvent_norm: np.ndarray
    scaled_norm: np.ndarray
    flagged: np.ndarray

    @property
    def max_resolvent_norm(self):
        return float(self.resolvent_norm.max())

    @property
    def max_scaled_norm(self):
        return float(self.scaled_norm.max())


def resolvent_sweep(op, mu_min, mu_max, n_mu):
    """Smallest singular value of W^{1/2}(M - i mu)W^{-1/2} over a mu grid.

    The weighted similarity makes the reported 2-norms approximate the
    L2 -> L2 operator norms. Rows where the dense SVD fails are flagged
    rather than aborting the sweep.
    """
    if not mu_min < mu_max:
        raise ValueError("need mu_min < mu_max")
    if n_mu < 3:
        raise ValueError("need n_mu >= 3")
    nu, k = op.params.nu, op.params.k
    mus = np.linspace(mu_min, mu_max, n_mu)
    sig = np.empty(n_mu)
    flagged = np.zeros(n_mu, dtype=bool)
    for i, mu in enumerate(mus):
        try:
            sig[i] = svdvals(op.shifted(mu))[-1]
        except np.linalg.LinAlgError:
            sig[i] = np.nan
            flagged[i] = True
    with np.errstate(divide="ignore"):
        rnorm = 1.0 / sig
    return ResolventReport(
        params=op.params,
        mu_grid=mus,
        sigma_min=sig,
        resolvent_norm=rnorm,
        scaled_norm=rnorm * np.sqrt(nu * abs(k)),
        flagged=flagged,
    )

"""Chebyshev-Gauss-Lobatto collocation on (-1, 1).

Nodes, Clenshaw-Curtis quadrature, differentiation matrices and Dirichlet
Helmholtz solves. Everything downstream (mode operators, lemma checks, the
nonlinear solver) is built on this layer.

Inner-product convention: ``l2_inner(a, b)`` is linear in the first argument
and conjugate-linear in the second, <a, b> = int a * conj(b) dy.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, lu_factor, lu_solve


@dataclass(frozen=True)
class ChebyshevGrid:
    """Gauss-Lobatto nodes y_j = cos(j pi / N) and Clenshaw-Curtis weights."""

    n_points: int
    nodes: np.ndarray
    quad_weights: np.ndarray

    @property
    def n_intervals(self):
        return self.n_points - 1


@dataclass(frozen=True)
class DiffOp:
    """Dense spectral differentiation matrices on the grid nodes."""

    d1: np.ndarray
    d2: np.ndarray


def _clenshaw_curtis_weights(n):
    # Exact cosine-sum formula; integrates polynomials of degree <= n exactly.
    theta = np.pi * np.arange(n + 1) / n
    w = np.zeros(n + 1)
    interior = np.arange(1, n)
    v = np.ones(n - 1)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n**2 - 1)
        for m in range(1, n // 2):
            v -= 2.0 * np.cos(2 * m * theta[interior]) / (4 * m**2 - 1)
        v -= np.cos(n * theta[interior]) / (n**2 - 1)
    else:
        w[0] = w[n] = 1.0 / n**2
        for m in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * m * theta[interior]) / (4 * m**2 - 1)
    w[interior] = 2.0 * v / n
    return w


def make_grid(n_intervals):
    """Build the collocation grid with N = ``n_intervals`` (N+1 nodes).

    Raises ValueError below N = 4; coarser grids cannot support any of the
    solves in this package.
    """
    if n_intervals < 4:
        raise ValueError(f"n_intervals must be >= 4, got {n_intervals}")
    n = int(n_intervals)
    nodes = np.cos(np.pi * np.arange(n + 1) / n)
    return ChebyshevGrid(n + 1, nodes, _clenshaw_curtis_weights(n))


def diff_ops(grid):
    """First and second differentiation matrices (Trefethen's formula).

    Diagonals come from the negative-sum trick (row sums of an exact
    differentiation matrix vanish on constants), which controls round-off
    for N >= 64.
    """
    n = grid.n_intervals
    y = grid.nodes
    c = np.ones(n + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n + 1)
    dy = y[:, None] - y[None, :]
    d1 = np.outer(c, 1.0 / c) / (dy + np.eye(n + 1))
    np.fill_diagonal(d1, 0.0)
    np.fill_diagonal(d1, -d1.sum(axis=1))
    d2 = d1 @ d1
    np.fill_diagonal(d2, 0.0)
    np.fill_diagonal(d2, -d2.sum(axis=1))
    return DiffOp(d1, d2)


def helmholtz_matrix(grid, ops, k):
    """Interior block of d2 - k^2 I; encodes phi(+-1) = 0 by truncation."""
    n_int = grid.n_points - 2
    return ops.d2[1:-1, 1:-1] - float(k) ** 2 * np.eye(n_int)


def helmholtz_solve(grid, ops, k, rhs):
    """Solve (d2 - k^2) phi = rhs with phi(+-1) = 0.

    Parameters
    ----------
    k : wavenumber; |k| >= 1 guarantees invertibility, but the Dirichlet
        block is invertible for k = 0 too (plain Poisson), which the
        nonlinear solver uses for the x-averaged mode.
    rhs : values at the interior nodes (length N-1).

    Returns the solution on all N+1 nodes, endpoints exactly zero.
    """
    rhs = np.asarray(rhs)
    if rhs.shape != (grid.n_points - 2,):
        raise ValueError("rhs must live on the interior nodes")
    h = helmholtz_matrix(grid, ops, k)
    try:
        lu = lu_factor(h)
        interior = lu_solve(lu, rhs.astype(complex))
    except LinAlgError as exc:  # cannot happen for |k| >= 1 with Dirichlet rows
        raise RuntimeError(f"singular Helmholtz system for k={k}") from exc
    phi = np.zeros(grid.n_points, dtype=complex)
    phi[1:-1] = interior
    return phi


def l2_norm(grid, profile):
    """Clenshaw-Curtis approximation of the L2(-1,1) norm."""
    profile = np.asarray(profile)
    return float(np.sqrt(grid.quad_weights @ np.abs(profile) ** 2))


def l2_inner(grid, a, b):
    """<a, b> = int a conj(b); conjugate-linear in the second slot."""
    return complex(grid.quad_weights @ (np.asarray(a) * np.conj(b)))


def interpolant(nodes, values):
    """Barycentric interpolant through Gauss-Lobatto node values.

    Exact for the degree-N interpolating polynomial; used to turn solved
    profiles into callables for quadrature on refined grids.
    """
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values)
    n = nodes.size - 1
    bary = (-1.0) ** np.arange(n + 1)
    bary[0] *= 0.5
    bary[-1] *= 0.5

    def evaluate(y):
        scalar = np.isscalar(y) or np.ndim(y) == 0
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.empty(y.shape, dtype=complex)
        diff = y[:, None] - nodes[None, :]
        exact = np.abs(diff) < 1e-14
        hit = exact.any(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            weights = bary / diff
            out[:] = (weights @ values) / weights.sum(axis=1)
        if hit.any():
            out[hit] = values[exact[hit].argmax(axis=1)]
        return out[0] if scalar else out

    return evaluate


@dataclass(frozen=True)
class Segment:
    """Collocation data mapped affinely onto a subinterval [lo, hi]."""

    lo: float
    hi: float
    nodes: np.ndarray
    weights: np.ndarray
    d1: np.ndarray
    d2: np.ndarray

    def integrate(self, values):
        return complex(self.weights @ np.asarray(values))


def make_segment(lo, hi, n_intervals):
    """Affinely mapped Gauss-Lobatto grid and operators on [lo, hi]."""
    if not hi > lo:
        raise ValueError(f"empty segment [{lo}, {hi}]")
    grid = make_grid(n_intervals)
    ops = diff_ops(grid)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    return Segment(
        lo=lo,
        hi=hi,
        nodes=mid + half * grid.nodes,
        weights=half * grid.quad_weights,
        d1=ops.d1 / half,
        d2=ops.d2 / half**2,
    )


def adaptive_integral(f, a, b, rtol=1e-9, max_depth=40):
    """Integrate f on [a, b] by bisected Clenshaw-Curtis panels.

    Each panel is accepted when the 16- and 32-interval rules agree to
    ``rtol`` relative to the running total; panels are otherwise bisected,
    which concentrates work near integrable endpoint concentrations.
    """
    if b <= a:
        return 0.0
    coarse = make_grid(16)
    fine = make_grid(32)

    def estimates(lo, hi):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        ic = half * (coarse.quad_weights @ f(mid + half * coarse.nodes))
        iv = half * (fine.quad_weights @ f(mid + half * fine.nodes))
        return ic, iv

    # magnitude scale from one whole-interval pass keeps rtol relative to
    # the total rather than to a vanishing panel
    scale = abs(estimates(a, b)[1]) + 1e-300

    def panel(lo, hi, depth):
        ic, iv = estimates(lo, hi)
        if depth >= max_depth or abs(iv - ic) <= rtol * scale:
            return iv
        mid = 0.5 * (lo + hi)
        return panel(lo, mid, depth + 1) + panel(mid, hi, depth + 1)

    return panel(a, b, 0)

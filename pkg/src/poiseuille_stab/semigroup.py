"""Pseudospectral bound, spectra, semigroup norm decay and rate fits.

The pseudospectral bound of an accretive matrix A is

    Psi(A) = inf over real mu of sigma_min(A - i mu),

and for m-accretive A the Gearhart-Pruess inequality bounds the semigroup:
||exp(-tA)|| <= exp(-t Psi(A) + pi/2). Both quantities are evaluated on the
weight-symmetrized mode matrices so that all norms are discrete L2 norms.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, svdvals

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
FIT_TRANSIENT_THRESHOLD = 0.5  # fit windows start once the norm falls below this


class PsiBracketError(RuntimeError):
    """Minimizer stuck at the bracket edge even after widening once."""


@dataclass(frozen=True)
class PsiResult:
    params: object
    psi: float
    mu_star: float
    mu_bracket: tuple


@dataclass(frozen=True)
class DecaySeries:
    times: np.ndarray
    norms: np.ndarray

    def __post_init__(self):
        t, n = self.times, self.norms
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("times must be increasing and start at 0")
        if abs(n[0] - 1.0) > 1e-10:
            raise ValueError("norm at t=0 must be 1")
        if not np.all(np.isfinite(n)):
            raise ValueError("norms must be finite")


@dataclass(frozen=True)
class DecayFit:
    c_fit: float
    log_prefactor: float
    fit_window: tuple
    residual: float


def _sigma_min(s_matrix, mu):
    n = s_matrix.shape[0]
    return svdvals(s_matrix - 1j * mu * np.eye(n))[-1]


def _golden_refine(f, a, b, tol):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    best = min(fc, fd)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
        best = min(best, fc, fd)
    return 0.5 * (a + b), best, (a, b)


def psi_bound(op, mu_lo=None, mu_hi=None, tol=None, n_coarse=201):
    """Locate Psi = min over mu of sigma_min(S - i mu).

    A coarse scan localizes the global basin (sigma_min is 1-Lipschitz in
    mu, so the scan cannot miss a minimum by more than half the grid
    spacing), then golden-section refinement shrinks the bracket below
    ``tol``. The default bracket [-2|k|, 3|k|] covers the closure of the
    imaginary part of the numerical range with margin; if the minimizer
    still lands on the bracket edge the bracket is widened once, after
    which it is an error.
    """
    k = abs(op.params.k)
    lo = -2.0 * k if mu_lo is None else mu_lo
    hi = 3.0 * k if mu_hi is None else mu_hi
    tol = 1e-4 * k if tol is None else tol
    s = op.symmetrized
    f = lambda mu: _sigma_min(s, mu)

    for attempt in range(2):
        mus = np.linspace(lo, hi, n_coarse)
        vals = np.array([f(mu) for mu in mus])
        i = int(vals.argmin())
        if 0 < i < n_coarse - 1:
            break
        span = hi - lo
        lo, hi = lo - span, hi + span  # widen once
    else:
        raise PsiBracketError(
            f"psi minimizer pinned at bracket edge for {op.params} in [{lo}, {hi}]"
        )

    mu_star, refined, bracket = _golden_refine(f, mus[i - 1], mus[i + 1], tol)
    psi = min(refined, float(vals.min()))
    return PsiResult(params=op.params, psi=psi, mu_star=mu_star, mu_bracket=bracket)


def spectrum(op):
    """Eigenvalues of the weight-symmetrized matrix, sorted by real part."""
    ev = np.linalg.eigvals(op.symmetrized)
    return ev[np.argsort(ev.real)]


def semigroup_norms(op, times):
    """||exp(-t S)|| in the weighted 2-norm at each requested time.

    Dense scaling-and-squaring exponentials: at the operating sizes this
    removes all time-integration error from the reported norms. Guards
    against overflow past 1e12, which an accretive matrix cannot produce.
    """
    times = np.asarray(times, dtype=float)
    s = op.symmetrized
    norms = np.empty(times.size)
    for i, t in enumerate(times):
        norms[i] = svdvals(expm(-t * s))[0]
        if norms[i] > 1e12:
            raise RuntimeError("semigroup norm overflow: operator not accretive?")
    return DecaySeries(times=times, norms=norms)


def fit_decay(series, window=None):
    """Least-squares exponential rate on (t, log norm) over a window.

    The default window starts where the norm first drops below
    ``FIT_TRANSIENT_THRESHOLD`` (transient exclusion) and runs to the end
    of the series. Windows with fewer than 8 samples are rejected.
    """
    t, n = series.times, series.norms
    if window is None:
        below = np.nonzero(n < FIT_TRANSIENT_THRESHOLD)[0]
        if below.size == 0:
            raise ValueError("norms never drop below the transient threshold")
        window = (t[below[0]], t[-1])
    mask = (t >= window[0]) & (t <= window[1])
    if mask.sum() < 8:
        raise ValueError(f"fit window {window} holds {int(mask.sum())} samples; need >= 8")
    tw = t[mask]
    logn = np.log(n[mask])
    slope, intercept = np.polyfit(tw, logn, 1)
    residual = float(np.abs(logn - (slope * tw + intercept)).max())
    return DecayFit(
        c_fit=float(-slope),
        log_prefactor=float(intercept),
        fit_window=(float(tw[0]), float(tw[-1])),
        residual=residual,
    )


def gp_envelope(psi, times):
    """Gearhart-Pruess bound exp(-t psi + pi/2) on the sampled times."""
    return np.exp(-np.asarray(times) * psi + np.pi / 2)


def loglog_slope(x, y):
    """Least-squares slope of log10(y) against log10(x)."""
    return float(np.polyfit(np.log10(np.asarray(x)), np.log10(np.asarray(y)), 1)[0])

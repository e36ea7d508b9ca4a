"""Pseudospectral bound, spectra, semigroup decay and fit contracts."""

import numpy as np
import pytest
from scipy.linalg import svdvals

from poiseuille_stab.chebyshev import diff_ops, make_grid
from poiseuille_stab.modeop import ModeParams, assemble
from poiseuille_stab.semigroup import (
    DecaySeries,
    fit_decay,
    gp_envelope,
    loglog_slope,
    psi_bound,
    semigroup_norms,
    spectrum,
)


@pytest.fixture(scope="module")
def grid64():
    grid = make_grid(64)
    return grid, diff_ops(grid)


def make_op(grid64, nu, k, **kw):
    grid, ops = grid64
    return assemble(grid, ops, ModeParams(nu=nu, k=k), **kw)


class TestPsi:
    def test_accretivity_floor_at_nu_one(self, grid64):
        res = psi_bound(make_op(grid64, 1.0, 1))
        assert res.psi >= 1.0

    def test_conjugate_mode_symmetry(self, grid64):
        p = psi_bound(make_op(grid64, 1e-3, 2))
        m = psi_bound(make_op(grid64, 1e-3, -2))
        assert abs(p.psi - m.psi) < 1e-8

    def test_bracket_width_below_tolerance(self, grid64):
        res = psi_bound(make_op(grid64, 1e-2, 1), tol=1e-5)
        assert res.mu_bracket[1] - res.mu_bracket[0] < 1e-5

    @pytest.mark.parametrize("nu", [1e-2, 1e-4])
    def test_against_dense_grid_oracle(self, nu):
        # brute-force sigma_min scan at N=96 before trusting the optimizer
        grid = make_grid(96)
        ops = diff_ops(grid)
        op = assemble(grid, ops, ModeParams(nu=nu, k=1))
        s = op.symmetrized
        eye = np.eye(s.shape[0])
        mus = np.linspace(-2.0, 3.0, 1201)
        brute = min(svdvals(s - 1j * mu * eye)[-1] for mu in mus)
        res = psi_bound(op)
        assert res.psi <= brute + 1e-12
        assert brute - res.psi <= 1e-3 * brute

    def test_minimizer_recorded_inside_bracket(self, grid64):
        res = psi_bound(make_op(grid64, 1e-3, 1))
        assert -2.0 < res.mu_star < 3.0

    def test_bracket_pinned_at_edge_raises_after_one_widening(self, grid64):
        from poiseuille_stab.semigroup import PsiBracketError

        # sigma_min decreases towards the true minimizer near mu ~ 0.24,
        # so a bracket far to the right keeps its minimum on the left edge
        with pytest.raises(PsiBracketError):
            psi_bound(make_op(grid64, 1e-2, 1), mu_lo=2.5, mu_hi=3.0, n_coarse=21)


class TestSpectrum:
    def test_diffusion_only_matches_analytic(self, grid64):
        nu, k = 1e-2, 1
        ev = spectrum(make_op(grid64, nu, k, include_advection=False))
        n = np.arange(1, 25)
        exact = nu * (k**2 + n**2 * np.pi**2 / 4)
        assert np.abs(ev[:24].real - exact).max() < 1e-8 * exact.min()
        assert np.abs(ev.imag).max() < 1e-10

    def test_full_operator_real_part_floor(self, grid64):
        nu, k = 1e-3, 1
        ev = spectrum(make_op(grid64, nu, k))
        assert ev[0].real >= nu * k**2 - 1e-6

    def test_sorted_by_real_part(self, grid64):
        ev = spectrum(make_op(grid64, 1e-2, 2))
        assert np.all(np.diff(ev.real) >= 0)

    def test_conjugating_k_conjugates_spectrum(self, grid64):
        ev_p = spectrum(make_op(grid64, 1e-2, 1))
        ev_m = spectrum(make_op(grid64, 1e-2, -1))
        # same real parts, mirrored imaginary parts (as multisets)
        key = lambda e: (np.round(e.real, 10), np.round(e.imag, 10))
        a = sorted(ev_p, key=key)
        b = sorted(np.conj(ev_m), key=key)
        assert np.abs(np.array(a) - np.array(b)).max() < 1e-8


class TestSemigroupNorms:
    def test_identity_at_time_zero(self, grid64):
        series = semigroup_norms(make_op(grid64, 1e-2, 1), np.linspace(0, 5, 9))
        assert abs(series.norms[0] - 1.0) < 1e-10

    def test_diffusion_only_matches_selfadjoint_rate(self, grid64):
        nu, k = 1e-2, 1
        op = make_op(grid64, nu, k, include_advection=False)
        times = np.linspace(0.0, 30.0, 7)
        series = semigroup_norms(op, times)
        lam = nu * (k**2 + np.pi**2 / 4)
        assert np.abs(series.norms - np.exp(-lam * times)).max() < 1e-8

    def test_gearhart_pruess_bound(self, grid64):
        op = make_op(grid64, 1e-3, 1)
        psi = psi_bound(op).psi
        times = np.linspace(0.0, 12.0 / psi, 25)
        series = semigroup_norms(op, times)
        assert np.all(series.norms <= gp_envelope(psi, times) + 1e-9)

    def test_submultiplicative(self, grid64):
        op = make_op(grid64, 1e-2, 1)
        times = np.array([0.0, 2.0, 3.0, 5.0, 8.0])
        series = semigroup_norms(op, times)
        n = dict(zip(series.times, series.norms))
        assert n[5.0] <= n[2.0] * n[3.0] * (1 + 1e-9)
        assert n[8.0] <= n[3.0] * n[5.0] * (1 + 1e-9)

    def test_monotone_in_viscosity(self, grid64):
        times = np.linspace(0.0, 20.0, 6)
        norms = [
            semigroup_norms(make_op(grid64, nu, 1), times).norms
            for nu in (1e-4, 1e-3, 1e-2)
        ]
        for weaker, stronger in zip(norms[:-1], norms[1:]):
            assert np.all(stronger <= weaker + 1e-12)

    def test_times_validation(self, grid64):
        op = make_op(grid64, 1e-2, 1)
        with pytest.raises(ValueError):
            semigroup_norms(op, np.array([1.0, 2.0]))  # must start at 0
        with pytest.raises(ValueError):
            semigroup_norms(op, np.array([0.0, 2.0, 1.0]))


class TestFitDecay:
    def test_exact_exponential(self):
        t = np.linspace(0, 5, 40)
        series = DecaySeries(times=t, norms=np.exp(-3.0 * t))
        fit = fit_decay(series)
        assert abs(fit.c_fit - 3.0) < 1e-10
        assert fit.residual < 1e-10

    def test_diffusion_only_rate(self, grid64):
        nu, k = 1e-2, 1
        op = make_op(grid64, nu, k, include_advection=False)
        lam = nu * (k**2 + np.pi**2 / 4)
        times = np.linspace(0.0, 8.0 / lam, 60)
        fit = fit_decay(semigroup_norms(op, times))
        assert abs(fit.c_fit - lam) < 1e-6

    def test_window_needs_eight_samples(self):
        t = np.linspace(0, 5, 40)
        series = DecaySeries(times=t, norms=np.exp(-2.0 * t))
        with pytest.raises(ValueError):
            fit_decay(series, window=(4.6, 5.0))  # only 4 samples

    def test_explicit_window(self):
        t = np.linspace(0, 10, 101)
        series = DecaySeries(times=t, norms=np.exp(-0.5 * t))
        fit = fit_decay(series, window=(2.0, 8.0))
        assert fit.fit_window[0] >= 2.0 and fit.fit_window[1] <= 8.0
        assert abs(fit.c_fit - 0.5) < 1e-10


def test_loglog_slope_recovers_power_law():
    x = np.logspace(-5, -2, 7)
    assert abs(loglog_slope(x, 3.0 * x**0.5) - 0.5) < 1e-12

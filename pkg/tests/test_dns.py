"""Structural oracles and properties of the nonlinear solver."""

import numpy as np
import pytest
from scipy.linalg import expm, lu_factor, lu_solve

from poiseuille_stab import dns
from poiseuille_stab.calibration import load as load_calibration
from poiseuille_stab.chebyshev import diff_ops, make_grid
from poiseuille_stab.modeop import ModeParams, assemble

CAL = load_calibration()


def make_setup(x_modes, n_intervals, nu=1e-2, **kw):
    grid = make_grid(n_intervals)
    ops = diff_ops(grid)
    cfg = dns.DnsConfig(nu=nu, x_modes=x_modes, n_intervals=n_intervals, **kw)
    return grid, ops, cfg


class TestStreamSolve:
    def test_manufactured_single_mode(self):
        grid, ops, cfg = make_setup(4, 32)
        stepper = dns.Stepper(grid, ops, cfg)
        state = dns.VorticityState(grid, 4)
        y = grid.nodes
        state.set_mode(1, (-(np.pi**2 / 4 + 1) * np.sin(np.pi * (y + 1) / 2)).astype(complex))
        state.mirror_negative_modes()
        vel = stepper.stream_solve(state)
        phi_exact = np.sin(np.pi * (y + 1) / 2)
        assert np.abs(vel.phi_modes[4 + 1] - phi_exact).max() < 1e-10

    def test_zero_vorticity_zero_velocity(self):
        grid, ops, cfg = make_setup(4, 16)
        stepper = dns.Stepper(grid, ops, cfg)
        vel = stepper.stream_solve(dns.VorticityState(grid, 4))
        assert np.abs(vel.u1).max() == 0.0 and np.abs(vel.u2).max() == 0.0

    def test_mean_mode_poisson(self):
        # mean vorticity -2 comes from the stream function 1 - y^2
        grid, ops, cfg = make_setup(4, 24)
        stepper = dns.Stepper(grid, ops, cfg)
        state = dns.VorticityState(grid, 4)
        state.set_mode(0, np.full(grid.n_points, -2.0, dtype=complex))
        vel = stepper.stream_solve(state)
        assert np.abs(vel.phi_modes[4] - (1 - grid.nodes**2)).max() < 1e-10
        assert np.abs(vel.u1_modes[4] - (-2 * grid.nodes)).max() < 1e-9
        assert np.abs(vel.u2_modes[4]).max() == 0.0

    def test_spectral_incompressibility(self):
        grid, ops, cfg = make_setup(6, 24)
        stepper = dns.Stepper(grid, ops, cfg)
        state = dns.VorticityState(grid, 6)
        rng = np.random.default_rng(1)
        y = grid.nodes
        for k in range(1, 5):
            prof = (rng.standard_normal() + 1j * rng.standard_normal()) * np.sin(
                np.pi * (y + 1) / 2
            ) + (rng.standard_normal() + 0j) * np.sin(np.pi * (y + 1))
            state.set_mode(k, prof)
        state.mirror_negative_modes()
        vel = stepper.stream_solve(state)
        kvec = np.arange(-6, 7)[:, None]
        divergence = 1j * kvec * vel.u1_modes + vel.u2_modes @ ops.d1.T
        assert np.abs(divergence).max() < 1e-9


class TestNonlinearTerm:
    def test_quadratic_selection_rule(self):
        # single k=1 mode: the product populates only k = 0 and |k| = 2
        grid, ops, cfg = make_setup(8, 16)
        stepper = dns.Stepper(grid, ops, cfg)
        state = dns.VorticityState(grid, 8)
        y = grid.nodes
        # nonzero phase variation so the mean (k=0) flux Im(w conj(phi)) survives
        state.set_mode(1, np.sin(np.pi * (y + 1) / 2) + 0.5j * np.sin(np.pi * (y + 1)))
        state.mirror_negative_modes()
        out = stepper.nonlinear_term(state, stepper.stream_solve(state))
        for k in range(-8, 9):
            level = np.abs(out[8 + k]).max()
            if abs(k) in (0, 2):
                assert level > 1e-12
            else:
                assert level < 1e-14, f"k={k} leaked {level}"

    def test_zero_state(self):
        grid, ops, cfg = make_setup(8, 16)
        stepper = dns.Stepper(grid, ops, cfg)
        state = dns.VorticityState(grid, 8)
        out = stepper.nonlinear_term(state, stepper.stream_solve(state))
        assert np.abs(out).max() == 0.0

    def test_against_direct_convolution_oracle(self):
        # brute-force convolution over mode pairs, pointwise in y
        grid, ops, cfg = make_setup(8, 16)
        stepper = dns.Stepper(grid, ops, cfg)
        state = dns.VorticityState(grid, 8)
        rng = np.random.default_rng(7)
        y = grid.nodes
        for k in range(1, 9):
            prof = np.zeros(grid.n_points, dtype=complex)
            for m in range(1, 5):
                prof += (rng.standard_normal() + 1j * rng.standard_normal()) * np.sin(
                    m * np.pi * (y + 1) / 2
                )
            state.set_mode(k, prof / (1 + k))
        state.mirror_negative_modes()
        vel = stepper.stream_solve(state)

        k0 = 8
        conv1 = np.zeros_like(state.modes)
        conv2 = np.zeros_like(state.modes)
        for k in range(-k0, k0 + 1):
            for p in range(-k0, k0 + 1):
                q = k - p
                if abs(q) > k0:
                    continue
                conv1[k0 + k] += state.modes[k0 + p] * vel.u1_modes[k0 + q]
                conv2[k0 + k] += state.modes[k0 + p] * vel.u2_modes[k0 + q]
        kvec = np.arange(-k0, k0 + 1)[:, None]
        expected = 1j * kvec * conv1 + conv2 @ ops.d1.T
        cutoff = dns.dealias_cutoff(k0)
        expected[: k0 - cutoff] = 0.0
        expected[k0 + cutoff + 1 :] = 0.0

        out = stepper.nonlinear_term(state, vel)
        scale = np.abs(expected).max()
        assert np.abs(out - expected).max() < 1e-8 * scale


class TestStepOracles:
    def test_mean_only_reduces_to_heat_equation(self):
        # k=0 data: all x-derivatives vanish, so the step is exactly 1-D
        # Crank-Nicolson diffusion; compare with an inline CN oracle
        grid, ops, cfg = make_setup(4, 24, nu=1e-2)
        stepper = dns.Stepper(grid, ops, cfg, dt=0.01)
        state = dns.VorticityState(grid, 4)
        y = grid.nodes
        profile = np.sin(np.pi * (y + 1) / 2) + 0.3 * np.sin(np.pi * (y + 1))
        state.set_mode(0, profile.astype(complex))

        vel = stepper.stream_solve(state)
        assert np.abs(stepper.nonlinear_term(state, vel)).max() < 1e-13

        eye = np.eye(grid.n_points)
        heat = 0.5 * 0.01 * cfg.nu * ops.d2
        left = eye - heat
        left[0], left[-1] = eye[0], eye[-1]
        lu = lu_factor(left)
        right = eye + heat
        oracle = profile.copy()
        for _ in range(100):
            rhs = right @ oracle
            rhs[0] = rhs[-1] = 0.0
            oracle = lu_solve(lu, rhs)
            stepper.step(state)
        assert abs(state.time - 1.0) < 1e-12
        assert np.abs(state.mode(0).real - oracle).max() < 1e-8
        assert np.abs(state.mode(1)).max() == 0.0

    def test_linearized_mode_matches_matrix_exponential(self):
        nu = 1e-2
        grid, ops, cfg = make_setup(2, 32, nu=nu, linearized=True)
        dt = 5e-4
        stepper = dns.Stepper(grid, ops, cfg, dt=dt)
        state = dns.VorticityState(grid, 2)
        y = grid.nodes
        w0 = (np.sin(np.pi * (y + 1)) * (1 + 0.3 * y)).astype(complex)
        state.set_mode(1, w0)
        state.mirror_negative_modes()

        op = assemble(grid, ops, ModeParams(nu=nu, k=1))
        horizon = 1.0 / np.sqrt(nu)
        n_steps = int(round(horizon / dt))
        checkpoints = {n_steps // 4, n_steps // 2, n_steps}
        w_weights = grid.quad_weights[1:-1]
        scale = np.sqrt(np.sum(w_weights * np.abs(w0[1:-1]) ** 2))
        for step in range(1, n_steps + 1):
            stepper.step(state)
            if step in checkpoints:
                exact = expm(-state.time * op.matrix) @ w0[1:-1]
                err = np.sqrt(
                    np.sum(w_weights * np.abs(state.mode(1)[1:-1] - exact) ** 2)
                )
                assert err < 1e-6 * scale, f"t={state.time}: {err / scale}"

    def test_zero_initial_data_stays_zero(self):
        grid, ops, cfg = make_setup(4, 16)
        stepper = dns.Stepper(grid, ops, cfg, dt=0.01)
        state = dns.VorticityState(grid, 4)
        for _ in range(10):
            stepper.step(state)
        assert np.abs(state.modes).max() == 0.0

    def test_reality_and_wall_invariants_along_trajectory(self):
        grid, ops, cfg = make_setup(6, 24, amplitude=0.3, shape="random", seed=5)
        state = dns.initial_state(cfg, grid)
        stepper = dns.Stepper(grid, ops, cfg, dt=0.005)
        for _ in range(50):
            stepper.step(state)
            assert state.reality_gap() < 1e-12
            assert state.wall_gap() < 1e-12

    def test_cfl_cap_enforced(self):
        grid, ops, cfg = make_setup(8, 16)
        stepper = dns.Stepper(grid, ops, cfg, dt=1.0)  # far above 0.5/K
        state = dns.VorticityState(grid, 8)
        with pytest.raises(dns.CflViolation):
            stepper.step(state)


class TestRunProperties:
    def test_quadratic_smallness_and_uinf(self):
        base = dict(x_modes=8, n_intervals=24, shape="sin_cos", t_end=10.0,
                    dt=0.02, cadence=10, c_fit=0.073)
        devs = {}
        for amp in (0.2, 0.1):
            lin = dns.run(dns.DnsConfig(nu=1e-2, amplitude=amp, linearized=True, **base))
            non = dns.run(dns.DnsConfig(nu=1e-2, amplitude=amp, **base))
            assert lin.times.shape == non.times.shape
            devs[amp] = np.abs(non.nonzero_norm - lin.nonzero_norm).max()
            assert np.all(non.uinf_ratio <= CAL["C_u"])
        assert devs[0.2] >= 3.0 * devs[0.1]

    def test_time_step_convergence_second_order(self):
        base = dict(nu=1e-2, x_modes=8, n_intervals=24, amplitude=0.2,
                    shape="sin_cos", t_end=5.0, cadence=1000000, c_fit=0.073)
        finals = {}
        for dt in (0.04, 0.02, 0.01):
            diag = dns.run(dns.DnsConfig(dt=dt, **base))
            finals[dt] = diag.nonzero_norm[-1]
        coarse = abs(finals[0.04] - finals[0.02])
        fine = abs(finals[0.02] - finals[0.01])
        assert coarse <= 4.2 * fine
        assert coarse >= 2.0 * fine  # genuinely second order, not stalled

    def test_mean_mode_fed_only_quadratically(self):
        diag = dns.run(
            dns.DnsConfig(nu=1e-2, x_modes=8, n_intervals=24, amplitude=1e-6,
                          shape="sin_cos", t_end=5.0, dt=0.02, c_fit=0.073)
        )
        assert diag.mean_norm.max() < 1e-10

    def test_zero_amplitude_classified_stable(self):
        diag = dns.run(
            dns.DnsConfig(nu=1e-2, x_modes=4, n_intervals=16, amplitude=0.0,
                          t_end=1.0, dt=0.01, c_fit=0.073)
        )
        assert diag.stable
        assert diag.max_amplification == 0.0

    def test_oversized_dt_classifies_unstable(self):
        diag = dns.run(
            dns.DnsConfig(nu=1e-2, x_modes=8, n_intervals=16, amplitude=0.1,
                          t_end=1.0, dt=0.5, c_fit=0.073)
        )
        assert diag.blew_up and not diag.stable


class TestThresholdSweep:
    def test_stable_up_to_cap(self):
        template = dns.DnsConfig(nu=1e-2, x_modes=8, n_intervals=24, shape="sin_cos",
                                 t_end=20.0, dt=0.02, cadence=50, c_fit=0.073)
        table = dns.threshold_sweep([1e-2], (0.05, 0.5), template, n_bisect=2)
        assert len(table.runs) == 2  # lo and hi, both stable, no bisection
        assert all(r.stable for r in table.runs)
        assert table.a_crit[1e-2] is None
        assert table.notes[1e-2].startswith("stable up to cap")
        assert np.isnan(table.slope)

    def test_bracket_invalid_reported(self):
        # dt far above the advective cap forces the guard, making the low
        # edge classify unstable: the sweep must report, not raise
        template = dns.DnsConfig(nu=1e-2, x_modes=8, n_intervals=16, shape="sin_cos",
                                 t_end=1.0, dt=0.5, c_fit=0.073)
        table = dns.threshold_sweep([1e-2], (0.05, 0.5), template, n_bisect=2)
        assert table.notes[1e-2].startswith("bracket-invalid")
        assert table.a_crit[1e-2] is None

    def test_scaled_amplitude_column(self):
        template = dns.DnsConfig(nu=1e-2, x_modes=4, n_intervals=16, shape="sin_cos",
                                 t_end=1.0, dt=0.01, c_fit=0.073)
        table = dns.threshold_sweep([1e-2], (0.0, 0.1), template, n_bisect=1)
        for row in table.runs:
            assert abs(row.gamma_scaled_amp - row.amplitude / row.nu**0.75) < 1e-15


class TestInitialShapes:
    def test_sin_cos_modes(self):
        grid = make_grid(24)
        cfg = dns.DnsConfig(nu=1e-2, x_modes=4, n_intervals=24, amplitude=0.4)
        state = dns.initial_state(cfg, grid)
        expected = 0.2 * np.sin(np.pi * grid.nodes)
        assert np.abs(state.mode(1) - expected).max() < 1e-15
        assert np.abs(state.mode(-1) - expected).max() < 1e-15
        assert np.abs(state.mode(0)).max() == 0.0
        assert abs(dns.nonzero_norm(state) - 0.4 * np.sqrt(np.pi)) < 1e-12

    def test_random_shape_normalized_and_mean_free(self):
        grid = make_grid(24)
        cfg = dns.DnsConfig(nu=1e-2, x_modes=6, n_intervals=24, amplitude=0.3,
                            shape="random", seed=11)
        state = dns.initial_state(cfg, grid)
        assert abs(dns.nonzero_norm(state) - 0.3 * np.sqrt(np.pi)) < 1e-12
        assert np.abs(state.mode(0)).max() == 0.0
        assert state.reality_gap() == 0.0
        cutoff = dns.dealias_cutoff(6)
        for k in range(cutoff + 1, 7):
            assert np.abs(state.mode(k)).max() == 0.0

    def test_same_seed_reproduces(self):
        grid = make_grid(16)
        cfg = dns.DnsConfig(nu=1e-2, x_modes=4, n_intervals=16, amplitude=0.3,
                            shape="random", seed=3)
        a = dns.initial_state(cfg, grid)
        b = dns.initial_state(cfg, grid)
        assert np.array_equal(a.modes, b.modes)

    def test_unknown_shape_rejected(self):
        grid = make_grid(16)
        cfg = dns.DnsConfig(nu=1e-2, x_modes=4, n_intervals=16, shape="bogus")
        with pytest.raises(ValueError):
            dns.initial_state(cfg, grid)

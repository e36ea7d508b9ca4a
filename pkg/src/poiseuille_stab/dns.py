"""Pseudo-spectral solver for the perturbation vorticity equation.

Evolves

    dw/dt - nu Lap w + (1 - y^2) dx w + 2 dx Lap^{-1} w = div(w u),

on the periodic channel T x (-1, 1) with w = 0 at the walls, in a
Fourier x Chebyshev representation. Time stepping is IMEX: Crank-Nicolson
for the stiff diffusion block per mode, second-order Adams-Bashforth for
advection, the nonlocal coupling and the nonlinear term (plain Euler on
the first step). Quadratic products are formed pointwise in physical x on
a grid padded to 3K points, and mode content above floor(2K/3) produced
by the product is zeroed each step (2/3-rule dealiasing).

Reality (w(-k) = conj(w(k))) and the wall rows are restored exactly every
step: only k >= 0 is marched and the negative modes are mirrored.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from . import semigroup
from .chebyshev import diff_ops, l2_norm, make_grid
from .modeop import ModeParams, assemble

# Frozen stability-classification and step-size rules. The CFL cap is the
# hard precondition on dt; defaults run at half the cap because the
# Adams-Bashforth half of the splitting amplifies undamped top-band modes
# at the cap (measured companion-matrix radii up to 1.023 per step at
# nu <= 1e-3), while at 0.25 every retained mode contracts.
CFL_CAP = 0.5
CFL_DEFAULT = 0.25
T_END_FACTOR = 20.0          # default horizon: 20 enhanced-dissipation times
STABLE_AMPLIFICATION = 2.0   # stable <=> sup_t ratio <= this ...
STABLE_END_FRACTION = 0.1    # ... and end ratio <= this at t = T_end
BLOWUP_FACTOR = 1e6


class CflViolation(RuntimeError):
    """dt exceeded the frozen advective cap during a run."""


@dataclass
class DnsConfig:
    nu: float
    x_modes: int = 16
    n_intervals: int = 48
    amplitude: float = 0.0
    shape: str = "sin_cos"
    seed: int = 1234
    dt: float = 0.0            # 0 -> CFL_DEFAULT / (K * u_max)
    t_end: float = 0.0         # 0 -> T_END_FACTOR / sqrt(nu)
    cadence: int = 20          # diagnostics row every this many steps
    c_prime_factor: float = 0.4
    c_fit: float = 0.0         # 0 -> measured from the k=1 semigroup fit
    linearized: bool = False

    def resolved_t_end(self):
        return self.t_end if self.t_end > 0 else T_END_FACTOR / np.sqrt(self.nu)


def dealias_cutoff(x_modes):
    """Highest mode index kept after a quadratic product."""
    return (2 * x_modes) // 3


def dt_cap(x_modes, u_max):
    """Frozen advective step-size cap 0.5 / (K * max|u_total|)."""
    return CFL_CAP / (x_modes * u_max)


class VorticityState:
    """Full perturbation vorticity: map k in [-K, K] -> Chebyshev profile."""

    def __init__(self, grid, x_modes, modes=None, time=0.0):
        self.grid = grid
        self.x_modes = int(x_modes)
        n_rows = 2 * self.x_modes + 1
        if modes is None:
            modes = np.zeros((n_rows, grid.n_points), dtype=complex)
        if modes.shape != (n_rows, grid.n_points):
            raise ValueError("modes array shape does not match K and the grid")
        self.modes = modes
        self.time = float(time)

    def mode(self, k):
        return self.modes[self.x_modes + k]

    def set_mode(self, k, profile):
        self.modes[self.x_modes + k] = profile

    def copy(self):
        return VorticityState(self.grid, self.x_modes, self.modes.copy(), self.time)

    def mirror_negative_modes(self):
        k0 = self.x_modes
        self.modes[k0] = self.modes[k0].real + 0j
        for k in range(1, self.x_modes + 1):
            self.modes[k0 - k] = np.conj(self.modes[k0 + k])

    def reality_gap(self):
        k0 = self.x_modes
        gaps = [np.abs(self.modes[k0].imag).max()]
        for k in range(1, self.x_modes + 1):
            gaps.append(
                np.abs(self.modes[k0 - k] - np.conj(self.modes[k0 + k])).max()
            )
        return max(gaps)

    def wall_gap(self):
        return float(np.abs(self.modes[:, [0, -1]]).max())


@dataclass
class StreamVelocity:
    """Stream-function modes and the induced velocity, u = (dy phi, -dx phi)."""

    phi_modes: np.ndarray
    u1_modes: np.ndarray
    u2_modes: np.ndarray
    u1: np.ndarray  # physical, on the padded x grid x collocation nodes
    u2: np.ndarray


def _physical_grid_size(x_modes):
    return 3 * x_modes


def to_physical(modes, x_modes):
    """Inverse transform of a [-K, K] mode stack onto 3K physical x points."""
    mx = _physical_grid_size(x_modes)
    half = np.zeros((mx // 2 + 1, modes.shape[1]), dtype=complex)
    half[: x_modes + 1] = modes[x_modes:]
    return np.fft.irfft(half * mx, n=mx, axis=0)


def from_physical(phys, x_modes):
    """Forward transform back to the [-K, K] stack (top modes truncated)."""
    mx = phys.shape[0]
    half = np.fft.rfft(phys, axis=0) / mx
    modes = np.zeros((2 * x_modes + 1, phys.shape[1]), dtype=complex)
    modes[x_modes:] = half[: x_modes + 1]
    modes[:x_modes] = np.conj(half[1 : x_modes + 1][::-1])
    return modes


class Stepper:
    """Owns the factorizations and the Adams-Bashforth history for one run."""

    def __init__(self, grid, ops, cfg, dt=None):
        self.grid = grid
        self.ops = ops
        self.cfg = cfg
        self.dt = None
        n = grid.n_points
        self.helmholtz_lu = []
        for k in range(cfg.x_modes + 1):
            h_int = ops.d2[1:-1, 1:-1] - k**2 * np.eye(n - 2)
            self.helmholtz_lu.append(lu_factor(h_int))
        self.prev_explicit = None
        self._y = grid.nodes
        self._advect = 1.0 - self._y**2
        if dt is not None:
            self.set_dt(dt)

    def set_dt(self, dt):
        """Factor the Crank-Nicolson blocks for a fixed step size."""
        self.dt = float(dt)
        n = self.grid.n_points
        eye = np.eye(n)
        self.cn_left_lu = []
        self.cn_right = []
        for k in range(self.cfg.x_modes + 1):
            heat = 0.5 * dt * self.cfg.nu * (self.ops.d2 - k**2 * eye)
            left = eye - heat
            left[0] = eye[0]
            left[-1] = eye[-1]
            self.cn_left_lu.append(lu_factor(left))
            self.cn_right.append(eye + heat)

    def stream_solve(self, state):
        """Per-mode Dirichlet solve of Lap phi = w; k = 0 is plain Poisson."""
        k0 = state.x_modes
        phi = np.zeros_like(state.modes)
        for k in range(k0 + 1):
            interior = lu_solve(self.helmholtz_lu[k], state.modes[k0 + k][1:-1])
            phi[k0 + k][1:-1] = interior
            if k > 0:
                phi[k0 - k] = np.conj(phi[k0 + k])
        u1 = phi @ self.ops.d1.T
        kvec = np.arange(-k0, k0 + 1)[:, None]
        u2 = -1j * kvec * phi
        return StreamVelocity(
            phi_modes=phi,
            u1_modes=u1,
            u2_modes=u2,
            u1=to_physical(u1, k0),
            u2=to_physical(u2, k0),
        )

    def nonlinear_term(self, state, vel):
        """div(w u) per mode: pointwise products in physical x, dealiased."""
        k0 = state.x_modes
        w_phys = to_physical(state.modes, k0)
        f1 = from_physical(w_phys * vel.u1, k0)
        f2 = from_physical(w_phys * vel.u2, k0)
        kvec = np.arange(-k0, k0 + 1)[:, None]
        out = 1j * kvec * f1 + f2 @ self.ops.d1.T
        cutoff = dealias_cutoff(k0)
        out[: k0 - cutoff] = 0.0
        out[k0 + cutoff + 1 :] = 0.0
        return out

    def explicit_term(self, state, vel, nonlinear):
        kvec = np.arange(-state.x_modes, state.x_modes + 1)[:, None]
        term = -1j * kvec * (self._advect[None, :] * state.modes)
        term -= 2j * kvec * vel.phi_modes
        if nonlinear is not None:
            term = term + nonlinear
        return term

    def step(self, state):
        """Advance one CNAB2 step in place; returns the velocity it used."""
        cfg = self.cfg
        vel = self.stream_solve(state)
        u_max = 1.0 + np.sqrt(vel.u1**2 + vel.u2**2).max()
        if self.dt > dt_cap(cfg.x_modes, u_max) * (1 + 1e-12):
            raise CflViolation(
                f"dt={self.dt:g} above cap {dt_cap(cfg.x_modes, u_max):g} at t={state.time:g}"
            )
        nonlinear = None if cfg.linearized else self.nonlinear_term(state, vel)
        explicit = self.explicit_term(state, vel, nonlinear)
        if self.prev_explicit is None:
            increment = self.dt * explicit
        else:
            increment = self.dt * (1.5 * explicit - 0.5 * self.prev_explicit)
        self.prev_explicit = explicit

        k0 = cfg.x_modes
        for k in range(k0 + 1):
            rhs = self.cn_right[k] @ state.modes[k0 + k] + increment[k0 + k]
            rhs[0] = 0.0
            rhs[-1] = 0.0
            state.modes[k0 + k] = lu_solve(self.cn_left_lu[k], rhs)
        state.mirror_negative_modes()
        state.time += self.dt
        return vel


def stream_solve(state):
    """One-shot stream/velocity solve (factorizations are not reused)."""
    cfg = DnsConfig(nu=1.0, x_modes=state.x_modes, n_intervals=state.grid.n_intervals)
    return Stepper(state.grid, diff_ops(state.grid), cfg).stream_solve(state)


def nonlinear_term(state, vel):
    """One-shot dealiased div(w u) from a state and its velocity."""
    cfg = DnsConfig(nu=1.0, x_modes=state.x_modes, n_intervals=state.grid.n_intervals)
    return Stepper(state.grid, diff_ops(state.grid), cfg).nonlinear_term(state, vel)


def initial_state(cfg, grid):
    """Build w_0 from the configured recipe; both recipes are x-mean-free."""
    state = VorticityState(grid, cfg.x_modes)
    y = grid.nodes
    if cfg.shape == "sin_cos":
        profile = 0.5 * cfg.amplitude * np.sin(np.pi * y)
        state.set_mode(1, profile.astype(complex))
        state.set_mode(-1, profile.astype(complex))
    elif cfg.shape == "random":
        rng = np.random.default_rng(cfg.seed)
        cutoff = dealias_cutoff(cfg.x_modes)
        for k in range(1, cutoff + 1):
            prof = np.zeros(grid.n_points, dtype=complex)
            for m in range(1, 7):
                c = (rng.standard_normal() + 1j * rng.standard_normal()) / (k + m)
                prof += c * np.sin(m * np.pi * (y + 1) / 2)
            state.set_mode(k, prof)
        state.mirror_negative_modes()
        # normalize to the same L2 size as the sin_cos recipe at equal amplitude
        target = cfg.amplitude * np.sqrt(np.pi)
        current = nonzero_norm(state)
        if current > 0:
            state.modes *= target / current
    else:
        raise ValueError(f"unknown initial shape {cfg.shape!r}")
    return state


def nonzero_norm(state):
    """L2(channel) norm of the x-mean-free part, 2 pi sum over k != 0."""
    w = state.grid.quad_weights
    k0 = state.x_modes
    total = 0.0
    for k in range(1, k0 + 1):
        total += 2.0 * float(w @ np.abs(state.modes[k0 + k]) ** 2)
    return float(np.sqrt(2.0 * np.pi * total))


def mean_norm(state):
    return float(
        np.sqrt(2.0 * np.pi) * l2_norm(state.grid, state.modes[state.x_modes])
    )


def gradient_nonzero_norm_sq(state, ops):
    w = state.grid.quad_weights
    k0 = state.x_modes
    dy = state.modes @ ops.d1.T
    total = 0.0
    for k in range(1, k0 + 1):
        row = k0 + k
        total += 2.0 * float(
            w @ (np.abs(1j * k * state.modes[row]) ** 2 + np.abs(dy[row]) ** 2)
        )
    return 2.0 * np.pi * total


def uinf_nonzero(state, stepper):
    """sup over the padded grid of |u_neq| for the mean-free velocity."""
    trimmed = state.copy()
    trimmed.modes[state.x_modes] = 0.0
    vel = stepper.stream_solve(trimmed)
    return float(np.sqrt(vel.u1**2 + vel.u2**2).max())


@dataclass
class RunDiagnostics:
    times: np.ndarray
    nonzero_norm: np.ndarray
    mean_norm: np.ndarray
    uinf_ratio: np.ndarray
    x_norm_sq: np.ndarray
    c_prime: float
    dt: float
    stable: bool
    max_amplification: float
    end_fraction: float
    blew_up: bool = False


def measure_linear_rate(nu, n_intervals, k=1):
    """Fitted decay rate of the k = 1 linear semigroup on this grid."""
    grid = make_grid(n_intervals)
    ops = diff_ops(grid)
    op = assemble(grid, ops, ModeParams(nu=nu, k=k))
    psi = semigroup.psi_bound(op)
    horizon = (np.pi / 2 + 9.0) / psi.psi
    series = semigroup.semigroup_norms(op, np.linspace(0.0, horizon, 60))
    return semigroup.fit_decay(series).c_fit


def run(cfg):
    """Integrate one configuration and collect the decay diagnostics.

    The X-norm accumulator uses the weight exp(c' sqrt(nu) t) with
    c' sqrt(nu) frozen at ``c_prime_factor`` times the measured linear
    decay rate at k = 1. Blow-up (norm beyond 1e6 x initial) and CFL
    violations end the run early and classify it unstable.
    """
    grid = make_grid(cfg.n_intervals)
    ops = diff_ops(grid)
    state = initial_state(cfg, grid)

    c_fit = cfg.c_fit if cfg.c_fit > 0 else measure_linear_rate(cfg.nu, cfg.n_intervals)
    c_prime_rate = cfg.c_prime_factor * c_fit  # this is c' * sqrt(nu)

    stepper = Stepper(grid, ops, cfg)
    vel0_umax = 1.0
    if cfg.amplitude != 0.0:
        vel0 = stepper.stream_solve(state)
        vel0_umax = 1.0 + np.sqrt(vel0.u1**2 + vel0.u2**2).max()
    t_end = cfg.resolved_t_end()
    dt = cfg.dt if cfg.dt > 0 else CFL_DEFAULT / (cfg.x_modes * vel0_umax)
    n_steps = max(1, int(np.ceil(t_end / dt - 1e-12)))
    dt = t_end / n_steps
    stepper.set_dt(dt)
    n0 = nonzero_norm(state)
    norm_floor = max(n0, 1e-300)

    times, nn_rows, mean_rows, uinf_rows, xnorm_rows = [], [], [], [], []
    sup_term = 0.0
    int_l2 = 0.0
    int_grad = 0.0
    peak = n0
    blew_up = False

    def snapshot():
        nn = nonzero_norm(state)
        times.append(state.time)
        nn_rows.append(nn)
        mean_rows.append(mean_norm(state))
        uinf_rows.append(uinf_nonzero(state, stepper) / nn if nn > 0 else 0.0)
        xnorm_rows.append(
            sup_term + np.sqrt(cfg.nu) * int_l2 + cfg.nu * int_grad
        )

    def weighted_terms():
        g = np.exp(2.0 * c_prime_rate * state.time)
        return g * nonzero_norm(state) ** 2, g * gradient_nonzero_norm_sq(state, ops)

    prev_l2, prev_grad = weighted_terms()
    sup_term = prev_l2
    snapshot()

    for step_index in range(1, n_steps + 1):
        try:
            stepper.step(state)
        except CflViolation:
            blew_up = True
            break
        cur_l2, cur_grad = weighted_terms()
        int_l2 += 0.5 * dt * (prev_l2 + cur_l2)
        int_grad += 0.5 * dt * (prev_grad + cur_grad)
        sup_term = max(sup_term, cur_l2)
        prev_l2, prev_grad = cur_l2, cur_grad

        nn = nonzero_norm(state)
        peak = max(peak, nn)
        if nn > BLOWUP_FACTOR * norm_floor or not np.isfinite(nn):
            blew_up = True
            snapshot()
            break
        if step_index % cfg.cadence == 0 or step_index == n_steps:
            snapshot()

    max_amp = float(peak / n0) if n0 > 0 else 0.0
    end_frac = float(nn_rows[-1] / n0) if n0 > 0 else 0.0
    stable = bool(
        not blew_up
        and max_amp <= STABLE_AMPLIFICATION
        and end_frac <= STABLE_END_FRACTION
    )
    return RunDiagnostics(
        times=np.array(times),
        nonzero_norm=np.array(nn_rows),
        mean_norm=np.array(mean_rows),
        uinf_ratio=np.array(uinf_rows),
        x_norm_sq=np.array(xnorm_rows),
        c_prime=c_prime_rate / np.sqrt(cfg.nu),
        dt=dt,
        stable=stable,
        max_amplification=max_amp,
        end_fraction=end_frac,
        blew_up=blew_up,
    )


def fitted_nonzero_rate(diag):
    """Exponential decay rate of the mean-free norm, via the shared fitter."""
    n0 = diag.nonzero_norm[0]
    if n0 <= 0:
        raise ValueError("run started with no mean-free content")
    series = semigroup.DecaySeries(
        times=diag.times, norms=np.maximum(diag.nonzero_norm / n0, 1e-300)
    )
    return semigroup.fit_decay(series)


@dataclass(frozen=True)
class ThresholdRun:
    nu: float
    amplitude: float
    gamma_scaled_amp: float
    stable: bool
    max_amplification: float
    end_fraction: float


def classify(cfg):
    diag = run(cfg)
    return (
        ThresholdRun(
            nu=cfg.nu,
            amplitude=cfg.amplitude,
            gamma_scaled_amp=cfg.amplitude / cfg.nu**0.75,
            stable=diag.stable,
            max_amplification=diag.max_amplification,
            end_fraction=diag.end_fraction,
        ),
        diag,
    )


@dataclass
class SweepTable:
    runs: list
    a_crit: dict          # nu -> critical amplitude, or None if capped/invalid
    slope: float          # log A_crit vs log nu regression, nan if < 2 points
    notes: dict = field(default_factory=dict)


def threshold_sweep(nu_list, bracket_scaled, cfg_template, n_bisect=8):
    """Bisect the stable/unstable amplitude boundary per viscosity.

    ``bracket_scaled`` = (lo, hi) in units of nu^{3/4}. The low edge must
    classify stable; if the high edge is already stable the row is
    recorded as stable-up-to-cap and no bisection happens. Invalid
    brackets are reported per nu without aborting the sweep.
    """
    runs = []
    a_crit = {}
    notes = {}
    for nu in nu_list:
        scale = nu**0.75
        lo, hi = bracket_scaled[0] * scale, bracket_scaled[1] * scale
        template = replace(cfg_template, nu=nu)
        if template.c_fit <= 0:
            # one linear-rate measurement per nu, shared by every bisection run
            template = replace(template, c_fit=measure_linear_rate(nu, template.n_intervals))
        row_lo, _ = classify(replace(template, amplitude=lo))
        runs.append(row_lo)
        if not row_lo.stable:
            a_crit[nu] = None
            notes[nu] = "bracket-invalid: low edge unstable"
            continue
        row_hi, _ = classify(replace(template, amplitude=hi))
        runs.append(row_hi)
        if row_hi.stable:
            a_crit[nu] = None
            notes[nu] = f"stable up to cap {hi:g}"
            continue
        a_lo, a_hi = lo, hi
        for _ in range(n_bisect):
            mid = 0.5 * (a_lo + a_hi)
            row, _ = classify(replace(template, amplitude=mid))
            runs.append(row)
            if row.stable:
                a_lo = mid
            else:
                a_hi = mid
        a_crit[nu] = 0.5 * (a_lo + a_hi)
        notes[nu] = "boundary bisected"
    found = {n: a for n, a in a_crit.items() if a is not None}
    if len(found) >= 2:
        slope = semigroup.loglog_slope(list(found.keys()), list(found.values()))
    else:
        slope = float("nan")
    return SweepTable(runs=runs, a_crit=a_crit, slope=slope, notes=notes)

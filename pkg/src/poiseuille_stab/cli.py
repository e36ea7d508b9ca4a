"""Batch front-end: subcommands wiring the library to configs and CSVs.

Every subcommand reads a ``key = value`` config, writes one CSV (or
JSON-lines report) plus a manifest sidecar, and exits 0 on success, 2 on
a config error, 3 when at least one row carries a flagged numerical
failure (the CSV is still written). Identical configs produce
byte-identical CSVs: all randomness is seeded, all floats serialized via
repr, and sweep rows are emitted in sorted-key order no matter how the
worker pool schedules them.
"""

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, config as cfgmod, dns, layers, semigroup
from .chebyshev import diff_ops, make_grid
from .config import ConfigError
from .modeop import ModeParams, assemble, resolvent_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FLAGGED = 3

SEMIGROUP_HORIZON_DECADES = 9.0  # sample until exp(pi/2 - 9) of the initial norm


def _pool_map(jobs, func, items):
    if jobs <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


def _mode_pairs(cfg):
    nus = cfgmod.get_float_list(cfg, "nus")
    ks = cfgmod.get_int_list(cfg, "ks")
    for nu in nus:
        if not 0.0 < nu <= 1.0:
            raise ConfigError(f"nu must lie in (0, 1], got {nu}")
    for k in ks:
        if abs(k) < 1:
            raise ConfigError("k = 0 is not admitted: the mode operator requires |k| >= 1")
    return [(nu, k) for nu in sorted(nus) for k in sorted(ks)]


def _operator(nu, k, n, diffusion_only=False):
    grid = make_grid(n)
    ops = diff_ops(grid)
    return assemble(grid, ops, ModeParams(nu=nu, k=k), include_advection=not diffusion_only)


def cmd_spectrum(cfg, out_dir, jobs):
    pairs = _mode_pairs(cfg)
    n = cfgmod.get_int(cfg, "n", 64)
    diffusion_only = cfgmod.get_bool(cfg, "diffusion_only", False)

    def task(pair):
        nu, k = pair
        ev = semigroup.spectrum(_operator(nu, k, n, diffusion_only))
        return [(k, nu, float(s.real), float(s.imag)) for s in ev]

    rows = [row for chunk in _pool_map(jobs, task, pairs) for row in chunk]
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    path = os.path.join(out_dir, "spectrum.csv")
    cfgmod.write_csv(path, ["k", "nu", "re_sigma", "im_sigma"], rows)
    resolved = {"nus": cfg["nus"], "ks": cfg["ks"], "n": n, "diffusion_only": diffusion_only}
    return [path], resolved, EXIT_OK


def cmd_psi_sweep(cfg, out_dir, jobs):
    pairs = _mode_pairs(cfg)
    n = cfgmod.get_int(cfg, "n", 64)

    def task(pair):
        nu, k = pair
        res = semigroup.psi_bound(_operator(nu, k, n))
        return (nu, k, res.psi, res.mu_star)

    rows = _pool_map(jobs, task, pairs)
    rows.sort(key=lambda r: (r[0], r[1]))
    path = os.path.join(out_dir, "psi_sweep.csv")
    cfgmod.write_csv(path, ["nu", "k", "psi", "mu_star"], rows)
    return [path], {"nus": cfg["nus"], "ks": cfg["ks"], "n": n}, EXIT_OK


def cmd_resolvent_sweep(cfg, out_dir, jobs):
    pairs = _mode_pairs(cfg)
    n = cfgmod.get_int(cfg, "n", 64)
    mu_min = cfgmod.get_float(cfg, "mu_min", -2.0)
    mu_max = cfgmod.get_float(cfg, "mu_max", 3.0)
    n_mu = cfgmod.get_int(cfg, "n_mu", 101)
    if n_mu < 3:
        raise ConfigError("n_mu must be >= 3")

    def task(pair):
        nu, k = pair
        report = resolvent_sweep(_operator(nu, k, n), mu_min * abs(k), mu_max * abs(k), n_mu)
        rows = []
        for i, mu in enumerate(report.mu_grid):
            rows.append(
                (
                    nu,
                    k,
                    float(mu),
                    float(report.sigma_min[i]),
                    float(report.resolvent_norm[i]),
                    float(report.scaled_norm[i]),
                )
            )
        return rows, bool(report.flagged.any())

    results = _pool_map(jobs, task, pairs)
    rows = [row for chunk, _ in results for row in chunk]
    flagged = any(flag for _, flag in results)
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    path = os.path.join(out_dir, "resolvent_sweep.csv")
    cfgmod.write_csv(
        path, ["nu", "k", "mu", "sigma_min", "resolvent_norm", "scaled_norm"], rows
    )
    resolved = {
        "nus": cfg["nus"], "ks": cfg["ks"], "n": n,
        "mu_min": mu_min, "mu_max": mu_max, "n_mu": n_mu,
    }
    return [path], resolved, EXIT_FLAGGED if flagged else EXIT_OK


def cmd_semigroup(cfg, out_dir, jobs):
    pairs = _mode_pairs(cfg)
    n = cfgmod.get_int(cfg, "n", 64)
    n_times = cfgmod.get_int(cfg, "n_times", 60)
    diffusion_only = cfgmod.get_bool(cfg, "diffusion_only", False)
    if n_times < 2:
        raise ConfigError("n_times must be >= 2")

    def task(pair):
        nu, k = pair
        op = _operator(nu, k, n, diffusion_only)
        psi = semigroup.psi_bound(op).psi
        horizon = (np.pi / 2 + SEMIGROUP_HORIZON_DECADES) / psi
        times = np.linspace(0.0, horizon, n_times)
        series = semigroup.semigroup_norms(op, times)
        bound = semigroup.gp_envelope(psi, times)
        return [
            (nu, k, float(t), float(nm), float(b))
            for t, nm, b in zip(series.times, series.norms, bound)
        ]

    rows = [row for chunk in _pool_map(jobs, task, pairs) for row in chunk]
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    path = os.path.join(out_dir, "semigroup.csv")
    cfgmod.write_csv(path, ["nu", "k", "t", "norm", "gp_bound"], rows)
    resolved = {
        "nus": cfg["nus"], "ks": cfg["ks"], "n": n, "n_times": n_times,
        "diffusion_only": diffusion_only,
    }
    return [path], resolved, EXIT_OK


def cmd_lemma_suite(cfg, out_dir, jobs):
    seed = cfgmod.resolve_seed(cfg)
    n_fields = cfgmod.get_int(cfg, "n_fields", 20)
    n_y2 = cfgmod.get_int(cfg, "n_y2", 6)
    n_delta = cfgmod.get_int(cfg, "n_delta", 5)
    inject_violation = cfgmod.get_bool(cfg, "inject_violation", False)
    if n_fields < 1 or n_y2 < 1 or n_delta < 1:
        raise ConfigError("empty lemma corpus: n_fields, n_y2, n_delta must be >= 1")
    from .calibration import load as load_calibration

    cal = load_calibration()
    c_hardy, c_p = cal["C_hardy"], cal["C_P"]
    # hand-broken identity fixture: inflate the energy-identity lhs by 1%
    breakage = 1.01 if inject_violation else 1.0

    records = []
    any_fail = False
    geoms = layers.geometry_sweep(n_y2=n_y2, n_delta=n_delta)
    for geom in geoms:
        pb = layers.check_p_bounds(geom)
        checks = {
            "p_eq": pb.eq_rel_gap <= 1e-12,
            "p_l2_out": pb.ratio_l2_out <= c_p,
            "p_l1_out": pb.ratio_l1_out <= c_p,
            "p_l2_weighted": pb.ratio_l2_weighted <= c_p,
        }
        if not np.isnan(pb.ratio_l2_in):
            checks["p_l2_in"] = pb.ratio_l2_in <= c_p
        for name, ok in checks.items():
            any_fail |= not ok
            records.append(
                {"check": name, "y2": geom.y2, "delta": geom.delta, "pass": bool(ok)}
            )
    for i, geom in enumerate(geoms[:: max(1, len(geoms) // 4)]):
        for pair in layers.field_corpus(seed + i, n_fields, geom):
            ident = layers.check_energy_identity(pair, geom.y1, geom.y2)
            gap = abs(ident.lhs * breakage - ident.rhs)
            ok_ident = gap <= 1e-8 * (abs(ident.lhs) + abs(ident.rhs))
            key = layers.check_energy_key(pair, geom)
            ok_key = key.slack >= -1e-8 * abs(key.rhs) and not key.unresolved
            hardy = layers.check_hardy(pair, geom)
            ok_hardy = hardy.ratio <= c_hardy and not hardy.unresolved
            for name, ok in (
                ("energy_identity", ok_ident),
                ("energy_key", ok_key),
                ("hardy", ok_hardy),
            ):
                any_fail |= not ok
                records.append(
                    {
                        "check": name,
                        "y2": geom.y2,
                        "delta": geom.delta,
                        "k": pair.k,
                        "pass": bool(ok),
                    }
                )

    path = os.path.join(out_dir, "lemma_suite.jsonl")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for rec in records:
            handle.write(json.dumps(rec, sort_keys=True) + "\n")
    resolved = {
        "seed": seed, "n_fields": n_fields, "n_y2": n_y2, "n_delta": n_delta,
        "inject_violation": inject_violation,
    }
    return [path], resolved, EXIT_FLAGGED if any_fail else EXIT_OK


def _dns_config(cfg):
    nu = cfgmod.get_float(cfg, "nu")
    if not 0.0 < nu <= 1.0:
        raise ConfigError(f"nu must lie in (0, 1], got {nu}")
    shape = cfgmod.get_str(cfg, "shape", "sin_cos")
    if shape not in ("sin_cos", "random"):
        raise ConfigError(f"unknown shape {shape!r}")
    return dns.DnsConfig(
        nu=nu,
        x_modes=cfgmod.get_int(cfg, "K", 16),
        n_intervals=cfgmod.get_int(cfg, "N", 48),
        amplitude=cfgmod.get_float(cfg, "amplitude", 0.0),
        shape=shape,
        seed=cfgmod.resolve_seed(cfg),
        dt=cfgmod.get_float(cfg, "dt", 0.0),
        t_end=cfgmod.get_float(cfg, "t_end", 0.0),
        cadence=cfgmod.get_int(cfg, "cadence", 20),
        c_prime_factor=cfgmod.get_float(cfg, "c_prime_factor", 0.4),
        c_fit=cfgmod.get_float(cfg, "c_fit", 0.0),
        linearized=cfgmod.get_bool(cfg, "linearized", False),
    )


def _resolved_dns(dc):
    return {
        "nu": dc.nu, "K": dc.x_modes, "N": dc.n_intervals,
        "amplitude": dc.amplitude, "shape": dc.shape, "seed": dc.seed,
        "dt": dc.dt, "t_end": dc.resolved_t_end(), "cadence": dc.cadence,
        "c_prime_factor": dc.c_prime_factor, "c_fit": dc.c_fit,
        "linearized": dc.linearized,
    }


def cmd_dns(cfg, out_dir, jobs):
    dc = _dns_config(cfg)
    diag = dns.run(dc)
    rows = [
        (float(t), float(a), float(b), float(c), float(d))
        for t, a, b, c, d in zip(
            diag.times, diag.nonzero_norm, diag.mean_norm, diag.uinf_ratio, diag.x_norm_sq
        )
    ]
    path = os.path.join(out_dir, "dns_diagnostics.csv")
    cfgmod.write_csv(path, ["t", "nonzero_norm", "mean_norm", "uinf_ratio", "xnorm_sq"], rows)
    resolved = _resolved_dns(dc)
    resolved.update(
        {
            "stable": diag.stable,
            "max_amplification": diag.max_amplification,
            "end_fraction": diag.end_fraction,
            "c_prime": diag.c_prime,
            "resolved_dt": diag.dt,
        }
    )
    return [path], resolved, EXIT_FLAGGED if diag.blew_up else EXIT_OK


def cmd_threshold(cfg, out_dir, jobs):
    nus = cfgmod.get_float_list(cfg, "nus")
    for nu in nus:
        if not 0.0 < nu <= 1.0:
            raise ConfigError(f"nu must lie in (0, 1], got {nu}")
    lo = cfgmod.get_float(cfg, "amp_lo_scaled", 0.05)
    hi = cfgmod.get_float(cfg, "amp_hi_scaled", 20.0)
    if not 0.0 <= lo < hi:
        raise ConfigError("need 0 <= amp_lo_scaled < amp_hi_scaled")
    n_bisect = cfgmod.get_int(cfg, "n_bisect", 8)
    template = _dns_config({**cfg, "nu": cfg["nus"].split(",")[0].strip(), "amplitude": "0"})
    table = dns.threshold_sweep(sorted(nus), (lo, hi), template, n_bisect=n_bisect)
    rows = [
        (
            r.nu, r.amplitude, r.gamma_scaled_amp, r.stable,
            r.max_amplification, r.end_fraction,
        )
        for r in table.runs
    ]
    rows.sort(key=lambda r: (r[0], r[1]))
    path = os.path.join(out_dir, "threshold.csv")
    cfgmod.write_csv(
        path,
        ["nu", "amplitude", "gamma_scaled_amp", "stable", "max_amplification", "end_fraction"],
        rows,
    )
    resolved = _resolved_dns(template)
    del resolved["nu"], resolved["amplitude"]
    resolved.update(
        {
            "nus": cfg["nus"], "amp_lo_scaled": lo, "amp_hi_scaled": hi,
            "n_bisect": n_bisect, "a_crit_slope": table.slope,
        }
    )
    for nu in sorted(table.notes):
        resolved[f"note_{nu:g}"] = table.notes[nu]
    invalid = any(note.startswith("bracket-invalid") for note in table.notes.values())
    return [path], resolved, EXIT_FLAGGED if invalid else EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "psi-sweep": cmd_psi_sweep,
    "resolvent-sweep": cmd_resolvent_sweep,
    "semigroup": cmd_semigroup,
    "lemma-suite": cmd_lemma_suite,
    "dns": cmd_dns,
    "threshold": cmd_threshold,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="poiseuille-stab",
        description="channel-flow stability sweeps: spectra, resolvents, semigroup decay, lemma checks, DNS",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="key = value config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="worker pool size for sweep rows")
    args = parser.parse_args(argv)

    started = time.monotonic()
    try:
        cfg = cfgmod.read_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        outputs, resolved, code = COMMANDS[args.command](cfg, args.out, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    manifest = os.path.join(args.out, f"{args.command.replace('-', '_')}.manifest.txt")
    cfgmod.write_manifest(
        manifest, args.command, {k: cfgmod.format_cell(v) for k, v in resolved.items()},
        outputs, started, __version__,
    )
    return code


if __name__ == "__main__":
    sys.exit(main())

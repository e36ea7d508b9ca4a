"""Turn the stability tool's CSVs into diagnostic figures.

Strictly a consumer: every slope, envelope and marker is recomputed from
CSV columns alone, never by re-running solvers. Input schemas are the
producer's frozen headers; unknown columns are ignored, missing ones are
fatal (SchemaError names the first offender).
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

SCHEMAS = {
    "decay": ("nu", "k", "t", "norm", "gp_bound"),
    "psi-scaling": ("nu", "k", "psi"),
    "resolvent-profile": ("nu", "k", "mu", "resolvent_norm"),
    "threshold": ("nu", "amplitude", "stable"),
}

FIT_THRESHOLD = 0.5  # decay-rate annotations start once the norm is below this


class SchemaError(Exception):
    """Input CSV does not carry the frozen schema."""


def _parse_cell(name, raw):
    if name == "stable":
        if raw == "true":
            return 1.0
        if raw == "false":
            return 0.0
        raise SchemaError(f"column 'stable' holds {raw!r}, expected true/false")
    try:
        return float(raw)
    except ValueError as exc:
        raise SchemaError(f"column {name!r} holds non-numeric {raw!r}") from exc


def load_columns(paths, required):
    """Read and concatenate CSVs, keeping only the required columns."""
    data = {name: [] for name in required}
    for path in paths:
        try:
            with open(path, encoding="utf-8") as handle:
                lines = [line.rstrip("\n") for line in handle]
        except OSError as exc:
            raise SchemaError(f"cannot read {path}: {exc}") from exc
        if not lines:
            raise SchemaError(f"{path}: empty file, no header")
        header = lines[0].split(",")
        for name in required:
            if name not in header:
                raise SchemaError(f"{path}: missing required column {name!r}")
        index = {name: header.index(name) for name in required}
        for line in lines[1:]:
            if not line:
                continue
            cells = line.split(",")
            for name in required:
                data[name].append(_parse_cell(name, cells[index[name]]))
    if not data[required[0]]:
        raise SchemaError("no data rows in input")
    return {name: np.array(values) for name, values in data.items()}


def _series_keys(cols):
    pairs = sorted({(float(nu), float(k)) for nu, k in zip(cols["nu"], cols["k"])})
    for nu, k in pairs:
        mask = (cols["nu"] == nu) & (cols["k"] == k)
        yield (nu, k), mask


def _render_decay(cols, ax):
    n_series = 0
    rates = {}
    for (nu, k), mask in _series_keys(cols):
        t = cols["t"][mask]
        norm = cols["norm"][mask]
        bound = cols["gp_bound"][mask]
        order = np.argsort(t)
        t, norm, bound = t[order], norm[order], bound[order]
        label = f"nu={nu:g}, k={k:g}"
        tail = norm < FIT_THRESHOLD
        if tail.sum() >= 2:
            rate = float(-np.polyfit(t[tail], np.log(norm[tail]), 1)[0])
            rates[(nu, k)] = rate
            label += f" (rate {rate:.3g})"
        (line,) = ax.semilogy(t, norm, label=label)
        ax.semilogy(t, bound, linestyle="--", linewidth=0.8, color=line.get_color())
        n_series += 1
    ax.set_xlabel("t")
    ax.set_ylabel("semigroup norm")
    ax.set_title("operator-norm decay with Gearhart-Pruess envelopes (dashed)")
    ax.legend(fontsize=8)
    return {"series": n_series, "envelopes": n_series, "rates": rates}


def _render_psi_scaling(cols, ax):
    slopes = {}
    for k in sorted({float(k) for k in cols["k"]}):
        mask = cols["k"] == k
        nu = cols["nu"][mask]
        shifted = cols["psi"][mask] - nu * k**2
        order = np.argsort(nu)
        nu, shifted = nu[order], shifted[order]
        slope = float(np.polyfit(np.log10(nu), np.log10(shifted), 1)[0])
        slopes[k] = slope
        ax.loglog(nu, shifted, marker="o", label=f"k={k:g}: slope {slope:.6f}")
    ax.set_xlabel("nu")
    ax.set_ylabel("psi - nu k^2")
    ax.set_title("pseudospectral bound vs viscosity")
    ax.legend(fontsize=8)
    return {"slopes": slopes}


def _render_resolvent_profile(cols, ax):
    n_series = 0
    for (nu, k), mask in _series_keys(cols):
        mu = cols["mu"][mask]
        rnorm = cols["resolvent_norm"][mask]
        order = np.argsort(mu)
        ax.semilogy(mu[order], rnorm[order], label=f"nu={nu:g}, k={k:g}")
        n_series += 1
    ax.set_xlabel("mu")
    ax.set_ylabel("resolvent norm")
    ax.set_title("resolvent norm along the imaginary axis")
    ax.legend(fontsize=8)
    return {"series": n_series}


def _render_threshold(cols, ax):
    stable = cols["stable"] == 1.0
    n_stable = int(stable.sum())
    n_unstable = int((~stable).sum())
    pos = cols["amplitude"] > 0
    if (stable & pos).any():
        ax.loglog(cols["nu"][stable & pos], cols["amplitude"][stable & pos],
                  "o", mfc="none", label="stable")
    if (~stable & pos).any():
        ax.loglog(cols["nu"][~stable & pos], cols["amplitude"][~stable & pos],
                  "x", label="unstable")
    # slope-3/4 guide anchored at the data's geometric center
    if pos.any():
        nu0 = np.exp(np.mean(np.log(cols["nu"][pos])))
        a0 = np.exp(np.mean(np.log(cols["amplitude"][pos])))
        nus = np.array([cols["nu"][pos].min(), cols["nu"][pos].max()])
        ax.loglog(nus, a0 * (nus / nu0) ** 0.75, ":", linewidth=0.8,
                  label="slope 3/4 guide")
    ax.set_xlabel("nu")
    ax.set_ylabel("initial amplitude")
    ax.set_title("threshold sweep classification")
    ax.legend(fontsize=8)
    return {"stable": n_stable, "unstable": n_unstable}


_RENDERERS = {
    "decay": _render_decay,
    "psi-scaling": _render_psi_scaling,
    "resolvent-profile": _render_resolvent_profile,
    "threshold": _render_threshold,
}


def render(kind, inputs, out_path):
    """Render one figure kind from CSV inputs; returns figure metadata.

    All validation happens before the output file is opened, so a schema
    failure never leaves a partial image behind.
    """
    if kind not in SCHEMAS:
        raise SchemaError(f"unknown figure kind {kind!r}")
    cols = load_columns(inputs, SCHEMAS[kind])
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    try:
        meta = _RENDERERS[kind](cols, ax)
        fig.tight_layout()
        fig.savefig(out_path, dpi=150)
    finally:
        plt.close(fig)
    return meta

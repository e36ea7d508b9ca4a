"""Plain-text key-value configs, run manifests and frozen CSV formatting.

Config files hold one ``key = value`` per line with ``#`` comments. CSV
cells are written with ``repr`` so floats round-trip exactly: identical
configs therefore reproduce byte-identical CSVs, and consumers recover
the same doubles the producer held.
"""

import os
import time


class ConfigError(Exception):
    """Invalid or missing configuration; maps to exit code 2."""


def read_config(path):
    values = {}
    try:
        with open(path, encoding="utf-8") as handle:
            for lineno, raw in enumerate(handle, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, value = line.split("=", 1)
                values[key.strip()] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return values


def get_str(cfg, key, default=None):
    if key in cfg:
        return cfg[key]
    if default is None:
        raise ConfigError(f"missing required key {key!r}")
    return default


def get_float(cfg, key, default=None):
    raw = cfg.get(key)
    if raw is None:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: not a number: {raw!r}") from exc


def get_int(cfg, key, default=None):
    value = get_float(cfg, key, default)
    if value != int(value):
        raise ConfigError(f"key {key!r}: expected an integer, got {value}")
    return int(value)


def get_bool(cfg, key, default=False):
    raw = cfg.get(key)
    if raw is None:
        return default
    lowered = raw.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"key {key!r}: expected a boolean, got {raw!r}")


def get_float_list(cfg, key):
    raw = cfg.get(key, "").strip()
    items = [piece for piece in raw.split(",") if piece.strip()]
    if not items:
        raise ConfigError(f"key {key!r}: empty list")
    try:
        return [float(piece) for piece in items]
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: not a number list: {raw!r}") from exc


def get_int_list(cfg, key):
    values = get_float_list(cfg, key)
    if any(v != int(v) for v in values):
        raise ConfigError(f"key {key!r}: expected integers")
    return [int(v) for v in values]


def resolve_seed(cfg, default=1234):
    """Config seed, overridden by POISEUILLE_STAB_SEED when set."""
    env = os.environ.get("POISEUILLE_STAB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"POISEUILLE_STAB_SEED is not an integer: {env!r}") from exc
    return get_int(cfg, "seed", default)


def format_cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        # builtin repr is the shortest exact round-trip form; numpy scalars
        # are normalized first so the cell never carries a type wrapper
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(format_cell(cell) for cell in row) + "\n")


def write_manifest(path, command, resolved, outputs, started, version):
    """Sidecar record: resolved config plus provenance for reruns."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"command = {command}\n")
        handle.write(f"version = {version}\n")
        handle.write(f"duration_s = {time.monotonic() - started:.3f}\n")
        for key in sorted(resolved):
            handle.write(f"{key} = {resolved[key]}\n")
        for out in outputs:
            handle.write(f"output = {out}\n")

"""Frozen calibration constants.

The analysis guarantees several bounds only up to unspecified absolute
constants. Each constant is measured once by the brute-force sweeps in
``scripts/calibrate.py`` (dense SVDs, high-resolution quadrature, random
field corpora), multiplied by a 1.2 safety factor and frozen into
``data/calibration.txt``. Tests assert against the frozen values; they
never re-tune them.

Keys: C_resolvent, C_hardy, C_P, C_u.
"""

from importlib import resources


def load(path=None):
    if path is None:
        text = (
            resources.files("poiseuille_stab").joinpath("data/calibration.txt").read_text()
        )
    else:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    values = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, value = line.split("=", 1)
        values[key.strip()] = float(value.strip())
    return values

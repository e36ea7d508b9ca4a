"""Regenerate the golden CSV fixtures under tests/data with the primary CLI.

The fixtures are real outputs of poiseuille-stab on small configurations
(plus two deliberately broken files for the schema tests). Rerun after
any change to the producer's CSV schemas.
"""

import os
import pathlib
import subprocess
import sys
import tempfile

HERE = pathlib.Path(__file__).resolve().parent
DATA = HERE.parent / "tests" / "data"

CONFIGS = {
    "psi-sweep": ("psi_sweep.csv", "nus = 1e-2, 1e-3, 1e-4, 1e-5\nks = 1\nn = 64\n"),
    "semigroup": ("semigroup.csv", "nus = 1e-2, 1e-3, 1e-4\nks = 1\nn = 64\nn_times = 40\n"),
    "resolvent-sweep": (
        "resolvent_sweep.csv",
        "nus = 1e-2, 1e-4\nks = 1\nn = 64\nmu_min = 0\nmu_max = 1\nn_mu = 51\n",
    ),
    "threshold": (
        "threshold.csv",
        # default horizon 20/sqrt(nu) so the end-fraction rule can resolve
        "nus = 1e-2, 1e-3\namp_lo_scaled = 0.05\namp_hi_scaled = 5\nn_bisect = 2\n"
        "K = 4\nN = 16\nshape = sin_cos\nc_fit = 0.073\n",
    ),
}


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    for command, (product, text) in CONFIGS.items():
        with tempfile.TemporaryDirectory() as tmp:
            cfg = os.path.join(tmp, "cfg")
            with open(cfg, "w", encoding="utf-8") as handle:
                handle.write(text)
            subprocess.run(
                [sys.executable, "-m", "poiseuille_stab.cli", command,
                 "--config", cfg, "--out", tmp],
                check=True,
            )
            os.replace(os.path.join(tmp, product), DATA / product)
            print(f"wrote {DATA / product}")

    # broken fixtures: a renamed column and a header-only file
    good = (DATA / "psi_sweep.csv").read_text().splitlines()
    bad = ["nu,k,psivalue,mu_star"] + good[1:]
    (DATA / "bad_schema.csv").write_text("\n".join(bad) + "\n")
    (DATA / "empty.csv").write_text("nu,k,psi,mu_star\n")
    print(f"wrote {DATA / 'bad_schema.csv'} and {DATA / 'empty.csv'}")


if __name__ == "__main__":
    main()

"""Slow Liouvillian eigenvalue against the splitting: exact cubic root, perturbative estimate and fitted power law."""

from __future__ import annotations

import warnings

import numpy as np

from _common import parse_args, pyplot
from qmpemba.generator import reduced_from_rates
from qmpemba.lepe import exact_eigenvalues, lepe_spectrum
from qmpemba.model import BathSpec, ValidityWarning, v_model_rates
from qmpemba.textio import write_csv


def main() -> None:
    args = parse_args(__doc__.splitlines()[0], "scaling")
    rates = v_model_rates(1.0, BathSpec())
    deltas = np.logspace(-5, -2, 31)
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        for delta in deltas:
            gen = reduced_from_rates(rates, delta)
            exact = abs(exact_eigenvalues(gen.L)[0])
            lepe = abs(lepe_spectrum(gen).eigenvalues[0])
            rows.append((delta, exact, lepe, abs(lepe - exact) / exact))
    rows = np.array(rows)
    write_csv(args.out / "scaling.csv", ["delta", "lambda1_exact", "lambda1_lepe", "rel_error"], rows)
    fit = rows[:, 0] <= 1e-3
    slope = np.polyfit(np.log(rows[fit, 0]), np.log(rows[fit, 1]), 1)[0]
    print(f"log-log slope of |lambda1| over delta in [1e-5, 1e-3]: {slope:.4f}")
    for delta, exact, lepe, err in rows[::10]:
        print(f"delta = {delta:.1e}: exact {exact:.6e}, perturbative {lepe:.6e}, relative error {err:.2e}")

    plt = pyplot() if args.plot else None
    if plt is None:
        return
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(rows[:, 0], rows[:, 1], "k-", label="exact")
    ax.loglog(rows[:, 0], rows[:, 2], "r--", label="perturbative")
    ax.set_xlabel("delta / nu")
    ax.set_ylabel("|lambda1| / nu")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out / "scaling.png", dpi=150)


if __name__ == "__main__":
    main()

"""Trace distance to the Gibbs state for the Mpemba, near-Mpemba, ground and maximally mixed preparations.

Prints the starting distances, the Mpemba bounds and the acceleration relative to the ground state.
"""

from __future__ import annotations

from _common import parse_args, pyplot
from qmpemba.cli import cmd_mpemba
from qmpemba.config import parse_config
from qmpemba.textio import read_csv


def main() -> None:
    args = parse_args(__doc__.splitlines()[0], "mpemba")
    cfg = parse_config("[preparation]\nc2 = -0.24\nepsilon = 1e-3\n[grid]\nstop = 1e9\nper_decade = 30\n")
    report = cmd_mpemba(cfg, args.out)
    for key, value in sorted(report.results.items()):
        print(f"{key}: {value}")
    for w in report.warnings:
        print(f"warning: {w}")

    plt = pyplot() if args.plot else None
    if plt is None:
        return
    _, header, data = read_csv(args.out / "distances.csv")
    t = data[1:, 0]
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, column in zip(header[1:], data[1:, 1:].T):
        ax.loglog(t, column, label=name)
    ax.set_xlabel("nu t")
    ax.set_ylabel("trace distance to Gibbs")
    ax.set_ylim(1e-8, 1)
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out / "mpemba.png", dpi=150)


if __name__ == "__main__":
    main()

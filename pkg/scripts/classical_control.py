"""Fully secular (classical) control: Mpemba-constrained populations vs the maximally mixed start.

The classical eigenvalues stay within an order of magnitude of each other, so the
anomalous relaxation is a modest effect rather than a hyper-acceleration.
"""

from __future__ import annotations

from _common import parse_args, pyplot
from qmpemba.cli import cmd_classical
from qmpemba.config import parse_config
from qmpemba.textio import read_csv


def main() -> None:
    args = parse_args(__doc__.splitlines()[0], "classical")
    cfg = parse_config("[model]\nkind = classical\n[classical]\ndelta = 0.25\nc22 = -0.2703\n")
    report = cmd_classical(cfg, args.out)
    for key, value in sorted(report.results.items()):
        print(f"{key}: {value}")

    plt = pyplot() if args.plot else None
    if plt is None:
        return
    _, header, data = read_csv(args.out / "distances.csv")
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, column in zip(header[1:], data[1:, 1:].T):
        ax.loglog(data[1:, 0], column, label=name)
    ax.set_xlabel("nu t")
    ax.set_ylabel("trace distance to equilibrium")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out / "classical.png", dpi=150)


if __name__ == "__main__":
    main()

"""Shared plumbing for the experiment scripts: output directories and optional plotting."""

from __future__ import annotations

import argparse
from pathlib import Path


def parse_args(description: str, default_out: str) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--out", type=Path, default=Path("results") / default_out, help="output directory")
    parser.add_argument("--plot", action="store_true", help="also render PNG figures (needs matplotlib)")
    return parser.parse_args()


def pyplot():
    """matplotlib.pyplot with a non-interactive backend, or None when matplotlib is missing."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; skipping figures")
        return None
    return plt

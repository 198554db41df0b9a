"""Closed-form V-model dynamics for ground-state and Mpemba preparations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lepe import LepeSpectrum

__all__ = [
    "AnalyticSolution",
    "coherence_ground_prep",
    "population_ground_prep",
    "mpemba_trajectory",
    "plateau_value",
    "plateau_window",
    "timescales",
    "Timescales",
]


def _slow_rate(k, phi, delta):
    return phi * delta**2 / (k * (k + phi))


def coherence_ground_prep(t, k: float, phi: float, delta: float):
    """Re sigma_32(t) after preparing the ground state."""
    t = np.asarray(t, dtype=float)
    amp = (phi - k) / (2 * (phi + k))
    return amp * (np.exp(-_slow_rate(k, phi, delta) * t) - np.exp(-(phi + k) * t))


def population_ground_prep(t, k: float, phi: float, delta: float):
    """Mean excited population P(t) after preparing the ground state."""
    t = np.asarray(t, dtype=float)
    amp = (phi - k) / (2 * (phi + k))
    slow = np.exp(-_slow_rate(k, phi, delta) * t)
    return (phi - k) / (2 * phi) - amp * ((k / phi) * slow + np.exp(-(phi + k) * t))


def mpemba_trajectory(t, c2: float, k: float, phi: float):
    """Reduced state (P, R, I) of shape (len(t), 3) from the Mpemba preparation with coefficient c2.

    Only the fast mode is present: R(t) = c2 exp(-(phi+k) t), P(t) = R(t) + P_inf, I(t) = 0.
    Physicality of c2 is the caller's responsibility (see ``mpemba.make_mpemba_state``).
    """
    t = np.asarray(t, dtype=float)
    fast = c2 * np.exp(-(phi + k) * t)
    return np.stack([fast + (phi - k) / (2 * phi), fast, np.zeros_like(fast)], axis=-1)


def plateau_value(k: float, phi: float) -> float:
    """Quasi-stationary coherence (= population) between the two timescales."""
    return (phi - k) / (2 * (phi + k))


@dataclass(frozen=True)
class AnalyticSolution:
    kind: str  # "ground" or "mpemba"
    k: float
    phi: float
    delta: float
    c2: float | None = None

    def __post_init__(self):
        if self.kind not in ("ground", "mpemba"):
            raise ValueError(f"unknown preparation kind {self.kind!r}")
        if self.kind == "mpemba" and self.c2 is None:
            raise ValueError("an Mpemba solution needs c2")

    @property
    def tau1(self) -> float:
        return 1.0 / _slow_rate(self.k, self.phi, self.delta)

    @property
    def tau2(self) -> float:
        return 1.0 / (self.k + self.phi)

    @property
    def initial_state(self) -> np.ndarray:
        return self(np.zeros(1))[0]

    def __call__(self, t) -> np.ndarray:
        if self.kind == "mpemba":
            return mpemba_trajectory(t, self.c2, self.k, self.phi)
        P = population_ground_prep(t, self.k, self.phi, self.delta)
        R = coherence_ground_prep(t, self.k, self.phi, self.delta)
        return np.stack([P, R, np.zeros_like(P)], axis=-1)


def plateau_window(sol: AnalyticSolution) -> tuple[float, float, float]:
    """(start, end, geometric midpoint) of tau2 << t << tau1, taken as [10 tau2, tau1 / 10]."""
    lo, hi = 10 * sol.tau2, sol.tau1 / 10
    if lo >= hi:
        raise ValueError("timescales are not separated; no plateau window exists")
    return lo, hi, math.sqrt(lo * hi)


@dataclass(frozen=True)
class Timescales:
    tau1: float
    tau2: float
    tau3: float
    acceleration: float


def timescales(spectrum: LepeSpectrum) -> Timescales:
    """Mode lifetimes 1/|lambda_n| in mode order; acceleration = tau1 / tau2."""
    lam = np.abs(spectrum.eigenvalues)
    t1, t2, t3 = (1.0 / lam[j] for j in range(3))
    return Timescales(tau1=t1, tau2=t2, tau3=t3, acceleration=t1 / t2)

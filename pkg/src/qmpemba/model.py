"""System, bath and rate definitions for the V model and its variants.

Natural units throughout: hbar = k_B = 1 and energies are usually given
relative to the excited-manifold energy nu = 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "ValidityWarning",
    "SystemSpec",
    "VModelParams",
    "BathSpec",
    "Rates",
    "spectral_density",
    "bose_einstein",
    "transition_rate",
    "rate_k",
    "phi",
    "v_model_rates",
    "lambda_model_params",
    "aggregate_baths",
    "v_model_system",
    "lambda_model_system",
]

DELTA_VALIDITY_THRESHOLD = 1e-2
GAMMA_WEAK_COUPLING_THRESHOLD = 0.05


class ValidityWarning(UserWarning):
    """Parameters fall outside the regime where the perturbative treatment holds."""


@dataclass(frozen=True)
class SystemSpec:
    """Level energies (energy basis) and one real symmetric coupling operator per bath.

    A single coupling matrix is shared by every bath it is paired with.
    """

    energies: tuple[float, ...]
    couplings: tuple[np.ndarray, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        energies = tuple(float(e) for e in self.energies)
        if any(b < a for a, b in zip(energies, energies[1:])):
            raise ValueError(f"energies must be sorted non-decreasing, got {energies}")
        n = len(energies)
        couplings = []
        for s in self.couplings:
            s = np.array(s, dtype=float)
            if s.shape != (n, n):
                raise ValueError(f"coupling shape {s.shape} does not match {n} levels")
            if not np.allclose(s, s.T, atol=0.0):
                raise ValueError("coupling matrices must be symmetric")
            s.setflags(write=False)
            couplings.append(s)
        if not couplings:
            raise ValueError("at least one coupling operator is required")
        labels = tuple(self.labels) or tuple(str(i + 1) for i in range(n))
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "couplings", tuple(couplings))
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return len(self.energies)

    @property
    def hamiltonian(self) -> np.ndarray:
        return np.diag(self.energies)

    def coupling_for(self, bath_index: int) -> np.ndarray:
        if len(self.couplings) == 1:
            return self.couplings[0]
        return self.couplings[bath_index]


@dataclass(frozen=True)
class VModelParams:
    """Excited-manifold energy ``nu`` and small splitting ``delta`` (both energy units)."""

    nu: float = 1.0
    delta: float = 1e-4
    validity_threshold: float = DELTA_VALIDITY_THRESHOLD

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not self.delta > 0:
            raise ValueError(
                f"delta must be strictly positive (the generator is singular at delta=0), got {self.delta}"
            )
        if self.delta / self.nu > self.validity_threshold:
            warnings.warn(
                f"delta/nu = {self.delta / self.nu:g} exceeds {self.validity_threshold:g}; "
                "the clustered rates and the perturbative eigenvalues lose accuracy",
                ValidityWarning,
                stacklevel=2,
            )

    @property
    def in_regime(self) -> bool:
        return self.delta / self.nu <= self.validity_threshold


@dataclass(frozen=True)
class BathSpec:
    """Bosonic Ohmic bath: J(w) = gamma * w * exp(-w / omega_c)."""

    temperature: float = 2.0
    gamma: float = 0.005
    omega_c: float = math.inf

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.omega_c > 0:
            raise ValueError(f"omega_c must be positive, got {self.omega_c}")
        if self.gamma > GAMMA_WEAK_COUPLING_THRESHOLD:
            warnings.warn(
                f"gamma = {self.gamma:g} is not small; weak-coupling dynamics may be inaccurate",
                ValidityWarning,
                stacklevel=2,
            )

    @property
    def beta(self) -> float:
        return 1.0 / self.temperature


@dataclass(frozen=True)
class Rates:
    """Clustered decay rate ``k`` and the combination ``phi`` entering the reduced equations."""

    k: float
    phi: float
    # Optional Boltzmann factor exp(-nu/T); only defined for a single temperature.
    boltzmann: float | None = field(default=None, compare=False)


def spectral_density(omega, bath: BathSpec):
    """Ohmic spectral density ``gamma * omega * exp(-omega / omega_c)``."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise ValueError("spectral density is defined for omega >= 0")
    if math.isinf(bath.omega_c):
        out = bath.gamma * w
    else:
        out = bath.gamma * w * np.exp(-w / bath.omega_c)
    return float(out) if out.ndim == 0 else out


def bose_einstein(omega, temperature: float):
    """Bose-Einstein occupation ``1 / (exp(omega/T) - 1)``.

    Written as ``exp(-x) / (1 - exp(-x))`` so the T -> 0 limit returns 0 without overflow.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise ValueError("Bose-Einstein occupation diverges for omega <= 0")
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    x = w / temperature
    out = np.exp(-x) / -np.expm1(-x)
    return float(out) if out.ndim == 0 else out


def transition_rate(omega: float, bath: BathSpec) -> float:
    """Full-Fourier bath rate at Bohr frequency ``omega`` (real part only).

    Downhill (omega > 0): 2 J(w) [n(w) + 1]; uphill (omega < 0): 2 J(|w|) n(|w|).
    At omega = 0 the Ohmic limit 2 gamma T is used.
    """
    if omega == 0:
        return 2.0 * bath.gamma * bath.temperature
    w = abs(omega)
    n = bose_einstein(w, bath.temperature)
    j = spectral_density(w, bath)
    return 2.0 * j * (n + 1.0) if omega > 0 else 2.0 * j * n


def rate_k(params: VModelParams | float, bath: BathSpec) -> float:
    """Clustered rate k = 2 J(nu) [n_B(nu) + 1], evaluated at the manifold energy nu."""
    nu = params.nu if isinstance(params, VModelParams) else float(params)
    return transition_rate(nu, bath)


def phi(k: float, nu: float, temperature: float) -> float:
    """phi = (1 + 2 exp(-nu/T)) k."""
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    return (1.0 + 2.0 * math.exp(-nu / temperature)) * k


def v_model_rates(params: VModelParams | float, bath: BathSpec) -> Rates:
    nu = params.nu if isinstance(params, VModelParams) else float(params)
    k = rate_k(nu, bath)
    return Rates(k=k, phi=phi(k, nu, bath.temperature), boltzmann=math.exp(-nu / bath.temperature))


def lambda_model_params(params: VModelParams | float, bath: BathSpec) -> Rates:
    """Rates that let the V-model engine run the Lambda model unchanged.

    The substitution is k -> k exp(-beta nu) and phi = (2 + exp(-beta nu)) k, with
    P = (sigma_11 + sigma_22)/2 and the coherence sigma_12 playing the role of sigma_32.
    """
    nu = params.nu if isinstance(params, VModelParams) else float(params)
    k = rate_k(nu, bath)
    b = math.exp(-nu / bath.temperature)
    return Rates(k=k * b, phi=(2.0 + b) * k)


def aggregate_baths(baths: Sequence[BathSpec], nu: float, *, model: str = "v") -> Rates:
    """Sum rates of several baths coupling through the same system operator.

    Additivity of the weak-coupling dissipator means the reduced equations keep the
    single-bath form with k = sum_j k_j and phi = sum_j phi_j.
    """
    if not baths:
        raise ValueError("at least one bath is required")
    per_bath = {"v": v_model_rates, "lambda": lambda_model_params}[model]
    parts = [per_bath(nu, b) for b in baths]
    if len(parts) == 1:
        return parts[0]
    return Rates(k=math.fsum(r.k for r in parts), phi=math.fsum(r.phi for r in parts))


def v_model_system(nu: float = 1.0, delta: float = 1e-4) -> SystemSpec:
    """H_S = (nu - delta)|2><2| + nu|3><3| with S = |1><2| + |1><3| + h.c."""
    s = np.array([[0, 1, 1], [1, 0, 0], [1, 0, 0]], dtype=float)
    return SystemSpec(energies=(0.0, nu - delta, nu), couplings=(s,), labels=("1", "2", "3"))


def lambda_model_system(nu: float = 1.0, delta: float = 1e-4) -> SystemSpec:
    """H_S = delta|2><2| + nu|3><3| with S = |1><3| + |2><3| + h.c."""
    s = np.array([[0, 0, 1], [0, 0, 1], [1, 1, 0]], dtype=float)
    return SystemSpec(energies=(0.0, delta, nu), couplings=(s,), labels=("1", "2", "3"))

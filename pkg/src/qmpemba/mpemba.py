"""Mpemba initial states of the V model: construction, bounds and physicality checks.

A Mpemba state carries no weight on the slow mode. In the V model it has equal
excited populations P_inf + c2 and a real 2-3 coherence c2, so the coherence
stores exactly the population still to relax.

The admissible interval returned by ``c2_bounds`` combines the ground-population
(normalisation) condition with the purity condition Tr rho^2 <= 1. Purity alone
does not imply positivity: on the negative side the state is positive only for
c2 >= -P_inf / 2 (see ``c2_positive_bounds``). States between the two lower
limits are accepted with a ``PhysicalityWarning`` unless ``strict=True``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PhysicalityError",
    "PhysicalityWarning",
    "PhysicalityReport",
    "MpembaState",
    "steady_population",
    "c2_bounds",
    "c2_positive_bounds",
    "check_physical",
    "make_mpemba_state",
    "mpemba_matrix",
    "perturb_state",
]

EIGENVALUE_TOL = 1e-12


class PhysicalityError(ValueError):
    pass


class PhysicalityWarning(UserWarning):
    pass


def steady_population(k: float, phi: float) -> float:
    return (phi - k) / (2 * phi)


def c2_bounds(k: float, phi: float) -> tuple[float, float]:
    """(c2_min, c2_max) from the normalisation and purity conditions."""
    lo = (3 * k - phi - math.sqrt((5 * phi - 3 * k) * (phi + k))) / (8 * phi)
    hi = k / (2 * phi)
    return lo, hi


def c2_positive_bounds(k: float, phi: float) -> tuple[float, float]:
    """Interval of c2 for which the Mpemba density matrix is positive semidefinite."""
    return -steady_population(k, phi) / 2, k / (2 * phi)


@dataclass(frozen=True)
class PhysicalityReport:
    trace_deviation: float
    hermiticity_deviation: float
    min_eigenvalue: float
    purity: float
    tol: float = EIGENVALUE_TOL

    @property
    def normalized(self) -> bool:
        return self.trace_deviation <= self.tol

    @property
    def hermitian(self) -> bool:
        return self.hermiticity_deviation <= self.tol

    @property
    def positive(self) -> bool:
        return self.min_eigenvalue >= -self.tol

    @property
    def purity_ok(self) -> bool:
        return self.purity <= 1.0 + self.tol

    @property
    def failed(self) -> tuple[str, ...]:
        checks = {
            "normalization": self.normalized,
            "hermiticity": self.hermitian,
            "positivity": self.positive,
            "purity": self.purity_ok,
        }
        return tuple(name for name, ok in checks.items() if not ok)

    @property
    def ok(self) -> bool:
        return not self.failed


def check_physical(rho, tol: float = EIGENVALUE_TOL) -> PhysicalityReport:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {rho.shape}")
    herm = 0.5 * (rho + rho.conj().T)
    return PhysicalityReport(
        trace_deviation=float(abs(np.trace(rho) - 1.0)),
        hermiticity_deviation=float(np.max(np.abs(rho - rho.conj().T))),
        min_eigenvalue=float(np.linalg.eigvalsh(herm).min()),
        purity=float(np.real(np.trace(herm @ herm))),
        tol=tol,
    )


@dataclass(frozen=True)
class MpembaState:
    c2: float
    rho0: np.ndarray
    k: float
    phi: float

    @property
    def report(self) -> PhysicalityReport:
        return check_physical(self.rho0)

    @property
    def reduced(self) -> np.ndarray:
        """(P, Re sigma_32, Im sigma_32) of the initial state."""
        return np.array([self.rho0[1, 1].real, self.rho0[2, 1].real, self.rho0[2, 1].imag])


def mpemba_matrix(c2, k, phi) -> np.ndarray:
    """The Mpemba-family density matrix for any c2, without bound checks."""
    p = steady_population(k, phi) + c2
    rho = np.diag([1 - 2 * p, p, p]).astype(complex)
    rho[1, 2] = rho[2, 1] = c2
    return rho


def _enforce_positivity(report: PhysicalityReport, strict: bool, what: str):
    if report.positive:
        return
    msg = f"{what} is not positive semidefinite (min eigenvalue {report.min_eigenvalue:.6g})"
    if strict:
        raise PhysicalityError(msg)
    warnings.warn(msg, PhysicalityWarning, stacklevel=3)


def make_mpemba_state(c2: float, k: float, phi: float, *, strict: bool = False) -> MpembaState:
    lo, hi = c2_bounds(k, phi)
    if c2 > hi + EIGENVALUE_TOL:
        raise PhysicalityError(
            f"c2 = {c2:g} exceeds c2_max = {hi:.6g}: ground population 1 - 2(P_inf + c2) would be negative "
            "(normalization/positivity)"
        )
    if c2 < lo - EIGENVALUE_TOL:
        raise PhysicalityError(f"c2 = {c2:g} is below c2_min = {lo:.6g}: Tr rho^2 would exceed 1 (purity)")
    state = MpembaState(c2=float(c2), rho0=mpemba_matrix(c2, k, phi), k=k, phi=phi)
    _enforce_positivity(state.report, strict, f"Mpemba state with c2 = {c2:g}")
    return state


def perturb_state(state: MpembaState, epsilon: float = 1e-3, *, strict: bool = False) -> np.ndarray:
    """sigma_M(0) + epsilon c2 (|2><3| + |3><2|)."""
    rho = state.rho0.copy()
    rho[1, 2] += epsilon * state.c2
    rho[2, 1] += epsilon * state.c2
    report = check_physical(rho)
    if not report.purity_ok:
        raise PhysicalityError(f"perturbed state violates Tr rho^2 <= 1 (purity {report.purity:.6g})")
    _enforce_positivity(report, strict, f"perturbed Mpemba state (epsilon = {epsilon:g})")
    return rho

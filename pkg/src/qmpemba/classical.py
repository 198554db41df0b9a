"""Fully secular (incoherent) limit of the V model.

Only level populations evolve. With p1 eliminated by normalisation the dynamics of
(p2, p3) is a 2x2 affine system with two real, negative eigenvalues of comparable
size, which is the classical control for the quantum hyper-acceleration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import BathSpec, transition_rate

__all__ = [
    "ClassicalGenerator",
    "ClassicalBounds",
    "classical_eigenvalues",
    "classical_equilibrium",
    "classical_coefficients",
    "classical_mpemba_state",
    "classical_mpemba_bounds",
    "classical_trajectory",
    "populations_to_density",
]


@dataclass(frozen=True)
class ClassicalGenerator:
    """Downhill rates k21 (at nu - delta) and k31 (at nu); uphill rates follow detailed balance."""

    k21: float
    k31: float
    beta: float
    nu: float = 1.0
    delta: float = 0.0

    @classmethod
    def from_bath(cls, nu: float, delta: float, bath: BathSpec) -> "ClassicalGenerator":
        return cls(
            k21=transition_rate(nu - delta, bath),
            k31=transition_rate(nu, bath),
            beta=bath.beta,
            nu=nu,
            delta=delta,
        )

    @property
    def boltzmann2(self) -> float:
        return math.exp(-(self.nu - self.delta) * self.beta)

    @property
    def boltzmann3(self) -> float:
        return math.exp(-self.nu * self.beta)

    @property
    def k12(self) -> float:
        return self.k21 * self.boltzmann2

    @property
    def k13(self) -> float:
        return self.k31 * self.boltzmann3

    @property
    def L(self) -> np.ndarray:
        a, e = self.boltzmann2, self.boltzmann3
        return np.array(
            [
                [-self.k21 * (1 + a), -self.k21 * a],
                [-self.k31 * e, -self.k31 * (1 + e)],
            ]
        )

    @property
    def d(self) -> np.ndarray:
        return np.array([self.k12, self.k13])


def classical_eigenvalues(gen: ClassicalGenerator) -> tuple[float, float]:
    """Exact eigenvalues (lambda1, lambda2) with |lambda2| > |lambda1|."""
    a, e = gen.boltzmann2, gen.boltzmann3
    s = gen.k21 * (1 + a) + gen.k31 * (1 + e)
    disc = s * s - 4 * gen.k21 * gen.k31 * (1 + a + e)
    root = math.sqrt(max(disc, 0.0))
    lam_fast = -(s + root) / 2
    # Product of the roots is k21 k31 (1 + a + e); avoids cancellation in the slow root.
    lam_slow = gen.k21 * gen.k31 * (1 + a + e) / lam_fast
    return lam_slow, lam_fast


def classical_equilibrium(gen: ClassicalGenerator) -> np.ndarray:
    """Boltzmann populations (p_inf2, p_inf3)."""
    a, e = gen.boltzmann2, gen.boltzmann3
    z = 1 + a + e
    return np.array([a / z, e / z])


def _b_and_v(gen: ClassicalGenerator, j: int):
    L = gen.L
    B = np.array([np.eye(2)[j], L[j]])
    v = np.array([0.0, gen.d[j]])
    return B, v


def classical_coefficients(gen: ClassicalGenerator, p0) -> np.ndarray:
    """Coefficients indexed [mode, level] for levels (2, 3); solved exactly, no expansion in delta."""
    p0 = np.asarray(p0, dtype=float)
    if np.any(p0 < -1e-12) or p0.sum() > 1 + 1e-12:
        raise ValueError(f"initial populations {p0} are not physical")
    lam = np.array(classical_eigenvalues(gen))
    if abs(lam[0] - lam[1]) <= 1e-14 * abs(lam[1]):
        raise np.linalg.LinAlgError("degenerate eigenvalues: Vandermonde system is singular")
    Lam = np.vstack([np.ones(2), lam])
    p_inf = classical_equilibrium(gen)
    out = np.zeros((2, 2))
    for j in range(2):
        B, v = _b_and_v(gen, j)
        out[:, j] = np.linalg.solve(Lam, B @ p0 + v - np.array([p_inf[j], 0.0]))
    return out


def _fast_direction(gen: ClassicalGenerator, j: int) -> np.ndarray:
    """Population change per unit c_{2,j} along the fast eigenvector."""
    _, lam2 = classical_eigenvalues(gen)
    L = gen.L
    # (L - lam2) r = 0 from the first row.
    r = np.array([-L[0, 1], L[0, 0] - lam2])
    return r / r[j]


def classical_mpemba_state(gen: ClassicalGenerator, c2: float, level: int = 2) -> np.ndarray:
    """Initial (p2, p3) with c_{1,2} = c_{1,3} = 0 and c_{2,level} = c2."""
    j = level - 2
    return classical_equilibrium(gen) + c2 * _fast_direction(gen, j)


@dataclass(frozen=True)
class ClassicalBounds:
    lower: float
    upper: float
    # Name of the constraint saturated at each end.
    lower_active: str
    upper_active: str
    constraints: dict

    @property
    def empty(self) -> bool:
        return self.lower > self.upper

    def __contains__(self, c2: float) -> bool:
        return self.lower <= c2 <= self.upper


def classical_mpemba_bounds(gen: ClassicalGenerator, level: int = 2) -> ClassicalBounds:
    """Admissible c_{2,level} for Mpemba states: 0 <= p2, p3 <= 1 and p2 + p3 <= 1.

    Each condition gives an interval; the admissible set is their intersection. An
    empty intersection is reported through ``ClassicalBounds.empty``.
    """
    j = level - 2
    p_inf = classical_equilibrium(gen)
    u = _fast_direction(gen, j)

    def interval(base, slope, lo, hi):
        if slope == 0:
            return (-math.inf, math.inf) if lo <= base <= hi else (math.inf, -math.inf)
        a, b = (lo - base) / slope, (hi - base) / slope
        return (min(a, b), max(a, b))

    constraints = {
        "0<=p2<=1": interval(p_inf[0], u[0], 0.0, 1.0),
        "0<=p3<=1": interval(p_inf[1], u[1], 0.0, 1.0),
        "p2+p3<=1": interval(p_inf.sum(), u.sum(), -math.inf, 1.0),
    }
    lower_name = max(constraints, key=lambda n: constraints[n][0])
    upper_name = min(constraints, key=lambda n: constraints[n][1])
    return ClassicalBounds(
        lower=constraints[lower_name][0],
        upper=constraints[upper_name][1],
        lower_active=lower_name,
        upper_active=upper_name,
        constraints=constraints,
    )


def classical_trajectory(gen: ClassicalGenerator, coefficients, times) -> np.ndarray:
    """(p2(t), p3(t)) of shape (len(times), 2)."""
    t = np.asarray(times, dtype=float)
    lam = np.array(classical_eigenvalues(gen))
    modes = np.exp(np.multiply.outer(t, lam))
    return classical_equilibrium(gen) + modes @ np.asarray(coefficients)


def populations_to_density(p) -> np.ndarray:
    """Diagonal density matrices from (..., 2) arrays of (p2, p3)."""
    p = np.asarray(p, dtype=float)
    rho = np.zeros(p.shape[:-1] + (3, 3))
    rho[..., 0, 0] = 1.0 - p[..., 0] - p[..., 1]
    rho[..., 1, 1] = p[..., 0]
    rho[..., 2, 2] = p[..., 1]
    return rho

"""Dynamical generators: the reduced three-component affine system and the full Redfield superoperator."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import BathSpec, Rates, SystemSpec, transition_rate

__all__ = [
    "SingularGeneratorError",
    "Layout",
    "V_LAYOUT",
    "LAMBDA_LAYOUT",
    "ReducedState",
    "ReducedGenerator",
    "FullGenerator",
    "build_reduced",
    "reduced_from_rates",
    "lift",
    "project",
    "build_full_redfield",
    "steady_state",
    "full_steady_state",
    "real_affine_system",
    "from_real_coordinates",
    "gibbs_state",
]

BASIS = ("P", "sigma32_R", "sigma32_I")


class SingularGeneratorError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class Layout:
    """Where the reduced coordinates live inside a 3x3 density matrix.

    ``pair`` are the two quasi-degenerate levels (P is their mean population),
    ``single`` the remaining level and ``coherence`` the (row, col) entry whose
    real/imaginary parts are the reduced coherence coordinates.
    """

    pair: tuple[int, int]
    single: int
    coherence: tuple[int, int]


V_LAYOUT = Layout(pair=(1, 2), single=0, coherence=(2, 1))
# The Lambda model's sigma_21 obeys the same equation as the V model's sigma_32.
LAMBDA_LAYOUT = Layout(pair=(0, 1), single=2, coherence=(1, 0))


@dataclass(frozen=True)
class ReducedState:
    P: float
    sigma32_R: float = 0.0
    sigma32_I: float = 0.0

    @classmethod
    def from_vector(cls, x) -> "ReducedState":
        x = np.real_if_close(np.asarray(x))
        return cls(float(np.real(x[0])), float(np.real(x[1])), float(np.real(x[2])))

    def to_vector(self) -> np.ndarray:
        return np.array([self.P, self.sigma32_R, self.sigma32_I])

    def to_density_matrix(self, layout: Layout = V_LAYOUT) -> np.ndarray:
        return lift(self.to_vector(), layout)

    @classmethod
    def from_density_matrix(cls, rho, layout: Layout = V_LAYOUT) -> "ReducedState":
        return cls.from_vector(project(rho, layout))


def lift(x, layout: Layout = V_LAYOUT) -> np.ndarray:
    """Density matrix(es) with equal pair populations from reduced vector(s) of shape (..., 3)."""
    x = np.asarray(x, dtype=float)
    rho = np.zeros(x.shape[:-1] + (3, 3), dtype=complex)
    a, b = layout.pair
    r, c = layout.coherence
    rho[..., a, a] = x[..., 0]
    rho[..., b, b] = x[..., 0]
    rho[..., layout.single, layout.single] = 1.0 - 2.0 * x[..., 0]
    rho[..., r, c] = x[..., 1] + 1j * x[..., 2]
    rho[..., c, r] = x[..., 1] - 1j * x[..., 2]
    return rho


def project(rho, layout: Layout = V_LAYOUT) -> np.ndarray:
    rho = np.asarray(rho)
    a, b = layout.pair
    r, c = layout.coherence
    P = 0.5 * np.real(rho[..., a, a] + rho[..., b, b])
    coh = rho[..., r, c]
    return np.stack([P, np.real(coh), np.imag(coh)], axis=-1)


@dataclass(frozen=True)
class ReducedGenerator:
    """Affine system dx/dt = L x + d over x = (P, sigma32_R, sigma32_I).

    ``L0`` is the degenerate (delta = 0) part and ``L1`` the splitting-induced part.
    """

    L: np.ndarray
    L0: np.ndarray
    L1: np.ndarray
    d: np.ndarray
    k: float
    phi: float
    delta: float
    nu: float = 1.0
    boltzmann: float | None = None
    layout: Layout = V_LAYOUT
    basis: tuple[str, ...] = field(default=BASIS)

    @property
    def dim(self) -> int:
        return self.L.shape[0]

    def with_delta(self, delta: float) -> "ReducedGenerator":
        return build_reduced(self.k, self.phi, delta, nu=self.nu, boltzmann=self.boltzmann, layout=self.layout)


def build_reduced(
    k: float,
    phi: float,
    delta: float,
    *,
    nu: float = 1.0,
    boltzmann: float | None = None,
    layout: Layout = V_LAYOUT,
) -> ReducedGenerator:
    """Reduced Unified-QME generator.

    Rows encode
        dP/dt   = -k R - phi P + (phi - k)/2
        dR/dt   = -k R - phi P + delta I + (phi - k)/2
        dI/dt   = -k I - delta R
    """
    L0 = np.array([[-phi, -k, 0.0], [-phi, -k, 0.0], [0.0, 0.0, -k]])
    L1 = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, delta], [0.0, -delta, 0.0]])
    d = np.array([(phi - k) / 2, (phi - k) / 2, 0.0])
    arrays = [L0 + L1, L0, L1, d]
    for a in arrays:
        a.setflags(write=False)
    return ReducedGenerator(
        *arrays, k=float(k), phi=float(phi), delta=float(delta), nu=float(nu), boltzmann=boltzmann, layout=layout
    )


def reduced_from_rates(rates: Rates, delta: float, *, nu: float = 1.0, layout: Layout = V_LAYOUT) -> ReducedGenerator:
    return build_reduced(rates.k, rates.phi, delta, nu=nu, boltzmann=rates.boltzmann, layout=layout)


def steady_state(gen: ReducedGenerator) -> ReducedState:
    """x_inf = -L^{-1} d."""
    if gen.delta == 0 or abs(np.linalg.det(gen.L)) < 1e-300:
        raise SingularGeneratorError(
            "reduced generator is singular at delta = 0: the long-time state depends on the initial condition"
        )
    return ReducedState.from_vector(-np.linalg.solve(gen.L, gen.d))


@dataclass(frozen=True)
class FullGenerator:
    """Superoperator acting on the row-major vectorised density matrix."""

    matrix: np.ndarray
    system: SystemSpec
    baths: tuple[BathSpec, ...]

    @property
    def dim(self) -> int:
        return self.system.dim

    def apply(self, rho: np.ndarray) -> np.ndarray:
        n = self.dim
        return (self.matrix @ np.asarray(rho, dtype=complex).reshape(n * n)).reshape(n, n)


def _left(a: np.ndarray) -> np.ndarray:
    return np.kron(a, np.eye(a.shape[0]))


def _right(b: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(b.shape[0]), b.T)


def build_full_redfield(system: SystemSpec, baths: Sequence[BathSpec]) -> FullGenerator:
    """Nonsecular Born-Markov Redfield superoperator, Lamb shifts dropped.

    In the energy basis, d rho/dt = -i[H, rho] - sum_baths [S, X rho - rho X^dag] with
    X_ab = S_ab * G(E_b - E_a) / 2 and G the full-Fourier bath rate at that Bohr frequency.
    """
    baths = tuple(baths)
    if not baths:
        raise ValueError("at least one bath is required")
    if system.dim > 4:
        raise ValueError("dense superoperators are limited to N <= 4 levels")
    E = np.asarray(system.energies)
    H = np.diag(E).astype(complex)
    M = -1j * (_left(H) - _right(H))
    for j, bath in enumerate(baths):
        S = system.coupling_for(j).astype(complex)
        X = np.zeros_like(S)
        for a, b in zip(*np.nonzero(S)):
            X[a, b] = S[a, b] * transition_rate(E[b] - E[a], bath) / 2.0
        Xd = X.conj().T
        M = M - _left(S @ X) + np.kron(S, Xd.T) + np.kron(X, S.T) - _right(Xd @ S)
    M.setflags(write=False)
    return FullGenerator(matrix=M, system=system, baths=baths)


def _real_coordinates(n: int) -> np.ndarray:
    """Matrix taking row-major vec(rho) to (diagonal, Re rho_ab, Im rho_ab for a < b) for Hermitian rho."""
    T = np.zeros((n * n, n * n), dtype=complex)
    row = 0
    for a in range(n):
        T[row, a * n + a] = 1
        row += 1
    for a in range(n):
        for b in range(a + 1, n):
            T[row, a * n + b] = T[row, b * n + a] = 0.5
            T[row + 1, a * n + b], T[row + 1, b * n + a] = -0.5j, 0.5j
            row += 2
    return T


def real_affine_system(gen: FullGenerator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(A, b, T) with dz/dt = A z + b for the real coordinates z of rho, rho_00 eliminated via the trace.

    ``T`` maps row-major vec(rho) to the full real coordinate vector (rho_00 first).
    """
    n = gen.dim
    T = _real_coordinates(n)
    M = np.real(T @ gen.matrix @ np.linalg.inv(T))
    diag = np.zeros(n * n - 1)
    diag[: n - 1] = 1.0
    return M[1:, 1:] - np.outer(M[1:, 0], diag), M[1:, 0], T


def from_real_coordinates(z: np.ndarray, n: int) -> np.ndarray:
    """Density matrices from trace-eliminated real coordinates of shape (..., n*n - 1)."""
    z = np.asarray(z, dtype=float)
    y = np.concatenate([1.0 - z[..., : n - 1].sum(axis=-1, keepdims=True), z], axis=-1)
    rho = np.zeros(z.shape[:-1] + (n, n), dtype=complex)
    for a in range(n):
        rho[..., a, a] = y[..., a]
    col = n
    for a in range(n):
        for b in range(a + 1, n):
            rho[..., a, b] = y[..., col] + 1j * y[..., col + 1]
            rho[..., b, a] = y[..., col] - 1j * y[..., col + 1]
            col += 2
    return rho


def full_steady_state(gen: FullGenerator) -> np.ndarray:
    """Trace-one fixed point of the full generator, solved in real trace-eliminated coordinates."""
    A, b, _ = real_affine_system(gen)
    return from_real_coordinates(-np.linalg.solve(A, b), gen.dim)


def gibbs_state(system: SystemSpec, temperature: float) -> np.ndarray:
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    E = np.asarray(system.energies)
    w = np.exp(-(E - E.min()) / temperature)
    return np.diag(w / w.sum()).astype(complex)

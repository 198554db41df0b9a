"""Exact propagation, trace distances, equilibration times and crossing detection.

Propagation always goes through the spectral decomposition of the generator. The
slow and fast rates differ by up to seven orders of magnitude, so any time stepper
would be dominated by stiffness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .generator import (
    FullGenerator,
    Layout,
    ReducedGenerator,
    ReducedState,
    V_LAYOUT,
    from_real_coordinates,
    lift,
    project,
    real_affine_system,
)
from .mpemba import PhysicalityReport, check_physical

__all__ = [
    "HorizonExceeded",
    "Trajectory",
    "DistanceCurve",
    "propagate",
    "propagation_matrices",
    "trace_distance",
    "distance_curve",
    "log_time_grid",
    "equilibration_time",
    "detect_crossing",
    "crossing_times",
]

# Eigenvector matrices worse conditioned than this are treated as defective.
DEFECTIVE_COND = 1e8
TRAJECTORY_TOL = 1e-9


class HorizonExceeded(RuntimeError):
    """The distance never fell below the threshold on the supplied grid."""

    def __init__(self, final_distance: float, threshold: float):
        self.final_distance = float(final_distance)
        self.threshold = float(threshold)
        super().__init__(
            f"distance never fell below {threshold:g} on the grid (final value {final_distance:.6g})"
        )


@dataclass(frozen=True)
class Trajectory:
    """States on a strictly increasing time grid.

    ``states`` is (n, 3) for reduced trajectories and (n, N, N) for density matrices.
    """

    times: np.ndarray
    states: np.ndarray
    provenance: str
    layout: Layout = V_LAYOUT
    fallback: bool = False

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or len(t) != len(self.states):
            raise ValueError("times and states must have matching length")
        if len(t) > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def reduced(self) -> bool:
        return self.states.ndim == 2

    @property
    def density_matrices(self) -> np.ndarray:
        return lift(self.states, self.layout) if self.reduced else self.states

    @property
    def reduced_states(self) -> np.ndarray:
        """(P, Re sigma, Im sigma) per time; density trajectories are projected through ``layout``."""
        return self.states if self.reduced else project(self.states, self.layout)

    def check_physical(self, tol: float = TRAJECTORY_TOL) -> list[PhysicalityReport]:
        return [check_physical(rho, tol) for rho in self.density_matrices]

    def is_physical(self, tol: float = TRAJECTORY_TOL) -> bool:
        return all(r.ok for r in self.check_physical(tol))


@dataclass(frozen=True)
class DistanceCurve:
    times: np.ndarray
    D: np.ndarray
    label: str = ""
    reference: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if np.shape(self.times) != np.shape(self.D):
            raise ValueError("times and D must have the same shape")

    def is_nonincreasing(self, tol: float = TRAJECTORY_TOL) -> bool:
        return bool(np.all(np.diff(self.D) <= tol))


def _as_initial(gen, state0) -> np.ndarray:
    if isinstance(state0, ReducedState):
        state0 = state0.to_vector()
    x = np.asarray(state0)
    if isinstance(gen, ReducedGenerator):
        if x.shape == (3, 3):
            x = project(x, gen.layout)
        if x.shape != (3,):
            raise ValueError(f"reduced propagation needs a 3-vector or 3x3 matrix, got shape {x.shape}")
        return np.real(x).astype(float)
    n = gen.dim
    if x.shape != (n, n):
        raise ValueError(f"full propagation needs an {n}x{n} density matrix, got shape {x.shape}")
    return x.astype(complex)


@dataclass(frozen=True)
class _Spectral:
    eigenvalues: np.ndarray
    V: np.ndarray
    Vinv: np.ndarray


def _spectral(M: np.ndarray) -> _Spectral | None:
    w, V = np.linalg.eig(M)
    if np.linalg.cond(V) > DEFECTIVE_COND:
        return None
    scale = np.max(np.abs(w)) if w.size else 1.0
    w = np.where(np.abs(w) < 1e-13 * scale, 0.0, w)
    return _Spectral(w, V, np.linalg.inv(V))


def propagation_matrices(M: np.ndarray, times) -> tuple[np.ndarray, bool]:
    """exp(M t) for every t, shape (n, d, d), plus a flag set when expm was used instead of eig."""
    t = np.asarray(times, dtype=float)
    sp = _spectral(M)
    if sp is None:
        return np.stack([expm(M * s) for s in t]), True
    phases = np.exp(np.multiply.outer(t, sp.eigenvalues))
    return np.einsum("ij,tj,jk->tik", sp.V, phases, sp.Vinv), False


def _affine_propagate(A: np.ndarray, b: np.ndarray, z0: np.ndarray, times: np.ndarray) -> tuple[np.ndarray, bool]:
    """z(t) for dz/dt = A z + b; eigendecomposition around the fixed point, expm of the homogeneous embedding otherwise."""
    n = len(z0)
    sp = None
    try:
        z_inf = -np.linalg.solve(A, b)
        if np.all(np.isfinite(z_inf)) and np.linalg.cond(A) < 1e14:
            sp = _spectral(A)
    except np.linalg.LinAlgError:
        pass
    if sp is not None:
        modes = sp.Vinv @ (z0 - z_inf)
        phases = np.exp(np.multiply.outer(times, sp.eigenvalues))
        return z_inf + np.real((phases * modes) @ sp.V.T), False
    H = np.zeros((n + 1, n + 1))
    H[:n, :n] = A
    H[:n, n] = b
    U, _ = propagation_matrices(H, times)
    return np.real(U @ np.append(z0, 1.0))[:, :n], True


def _full_propagate(gen: FullGenerator, rho0: np.ndarray, times: np.ndarray) -> tuple[np.ndarray, bool]:
    # Real coordinates with rho_00 eliminated: Hermiticity and unit trace hold by construction.
    n = gen.dim
    A, b, T = real_affine_system(gen)
    y0 = np.real(T @ rho0.reshape(n * n))
    z, fallback = _affine_propagate(A, b, y0[1:], times)
    return from_real_coordinates(z, n), fallback


def propagate(gen: FullGenerator | ReducedGenerator, state0, times, *, layout: Layout | None = None) -> Trajectory:
    """Exact solution on ``times`` (dimensionless nu * t).

    ``layout`` only matters for full generators: it says how their density matrices
    project onto reduced coordinates (V model by default).
    """
    times = np.asarray(times, dtype=float)
    x0 = _as_initial(gen, state0)
    if isinstance(gen, ReducedGenerator):
        states, fallback = _affine_propagate(np.asarray(gen.L, dtype=float), np.asarray(gen.d, dtype=float), x0, times)
        return Trajectory(times, states, _provenance("oracle-reduced", fallback), gen.layout, fallback)
    states, fallback = _full_propagate(gen, x0, times)
    return Trajectory(times, states, _provenance("oracle-redfield", fallback), layout or V_LAYOUT, fallback)


def _provenance(source: str, fallback: bool) -> str:
    return f"{source}+expm" if fallback else source


def trace_distance(a, b) -> np.ndarray | float:
    """Half the sum of absolute eigenvalues of a - b; broadcasts over leading axes."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-2:] != b.shape[-2:] or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"dimension mismatch: {a.shape[-2:]} vs {b.shape[-2:]}")
    diff = a - b
    herm = 0.5 * (diff + np.conj(np.swapaxes(diff, -1, -2)))
    out = 0.5 * np.abs(np.linalg.eigvalsh(herm)).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def distance_curve(traj: Trajectory, reference, label: str = "") -> DistanceCurve:
    ref = np.asarray(reference)
    return DistanceCurve(traj.times, trace_distance(traj.density_matrices, ref), label, ref)


def log_time_grid(stop: float, start: float = 0.1, per_decade: int = 40, include_zero: bool = True) -> np.ndarray:
    """Logarithmic grid from ``start`` to ``stop``, optionally preceded by t = 0."""
    if not 0 < start < stop:
        raise ValueError("need 0 < start < stop")
    n = max(2, int(math.ceil(per_decade * math.log10(stop / start))) + 1)
    grid = np.geomspace(start, stop, n)
    return np.concatenate([[0.0], grid]) if include_zero else grid


def equilibration_time(curve: DistanceCurve, threshold: float = 1e-4) -> float:
    """First time D drops below ``threshold``, interpolating log D linearly between bracketing samples."""
    t, D = np.asarray(curve.times), np.asarray(curve.D)
    below = np.nonzero(D < threshold)[0]
    if below.size == 0:
        raise HorizonExceeded(D[-1], threshold)
    i = below[0]
    if i == 0:
        return float(t[0])
    d0, d1 = D[i - 1], D[i]
    if d1 > 0:
        frac = (math.log(d0) - math.log(threshold)) / (math.log(d0) - math.log(d1))
    else:
        frac = (d0 - threshold) / (d0 - d1)
    return float(t[i - 1] + frac * (t[i] - t[i - 1]))


def crossing_times(a: DistanceCurve, b: DistanceCurve) -> list[float]:
    """Every time where sign(D_a - D_b) flips, linearly interpolated. Exact ties are skipped."""
    if not np.array_equal(a.times, b.times):
        raise ValueError("curves must share a time grid")
    diff = np.asarray(a.D) - np.asarray(b.D)
    idx = np.nonzero(diff != 0)[0]
    out = []
    for i, j in zip(idx[:-1], idx[1:]):
        if np.sign(diff[i]) != np.sign(diff[j]):
            ti, tj = a.times[i], a.times[j]
            out.append(float(ti + diff[i] / (diff[i] - diff[j]) * (tj - ti)))
    return out


def detect_crossing(a: DistanceCurve, b: DistanceCurve) -> float | None:
    times = crossing_times(a, b)
    return times[0] if times else None

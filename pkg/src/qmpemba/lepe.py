"""Perturbative Liouvillian eigenvalues and the mode-coefficient linear system.

The generator is split as L = L0 + L1, with L0 the degenerate part. Eigenvalues of
L are estimated as the (cheap, block-wise) eigenvalues of L0 plus a leading-order
Newton correction: the exact characteristic polynomial of L evaluated at the
unperturbed root, divided by the slope of the unperturbed polynomial. Mode coefficients c_{n,i}
follow from the Vandermonde system

    B^(i) x(0) + v^(i) = Lambda c^(i) + x_inf^(i)

where row m of B^(i) is row i of L^m and v^(i) collects the matching powers of L
acting on the inhomogeneous term d.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.sparse.csgraph import connected_components

from .generator import BASIS, ReducedGenerator, ReducedState, steady_state
from .model import DELTA_VALIDITY_THRESHOLD, ValidityWarning

__all__ = [
    "DegenerateRootError",
    "IllConditionedError",
    "InconsistentConstraintsError",
    "LepeSpectrum",
    "CoefficientSystem",
    "characteristic_polynomial",
    "v_model_charpoly",
    "zeroth_eigenvalues",
    "correct_eigenvalue",
    "lepe_spectrum",
    "exact_eigenvalues",
    "build_coefficient_system",
    "solve_coefficients",
    "mode_coefficients",
    "reconstruct",
    "invert_to_initial",
]

CORRECTION_VALIDITY_RATIO = 0.1
VANDERMONDE_MAX_COND = 1e13


class DegenerateRootError(ValueError):
    pass


class IllConditionedError(np.linalg.LinAlgError):
    pass


class InconsistentConstraintsError(ValueError):
    pass


def _element_index(i) -> int:
    if isinstance(i, str):
        return BASIS.index(i)
    return int(i)


def _maybe_real(x, tol=1e-12):
    x = np.asarray(x)
    if np.iscomplexobj(x) and np.all(np.abs(x.imag) <= tol * np.maximum(1.0, np.abs(x.real))):
        return x.real.copy()
    return x


def characteristic_polynomial(L: np.ndarray) -> np.poly1d:
    """det(lambda I - L) from sums of principal minors (no eigensolver involved).

    Minors are LU determinants, which keep the constant term accurate when rows of L
    nearly coincide, as they do for the V model at small splitting.
    """
    L = np.asarray(L)
    n = L.shape[0]
    coeffs = [1.0]
    for m in range(1, n + 1):
        total = sum(np.linalg.det(L[np.ix_(idx, idx)]) for idx in combinations(range(n), m))
        coeffs.append((-1) ** m * total)
    return np.poly1d(_maybe_real(np.array(coeffs)))


def v_model_charpoly(k: float, phi: float, delta: float) -> np.poly1d:
    """f(lam) = delta^2 (phi + lam) + lam (k + lam)(k + phi + lam)."""
    return np.poly1d([1.0, 2 * k + phi, k * (k + phi) + delta**2, delta**2 * phi])


def _sorted_by_magnitude(values) -> np.ndarray:
    values = np.asarray(values)
    keys = np.lexsort((np.imag(values), np.real(values), np.abs(values)))
    return values[keys]


def _block_eigenvalues(block: np.ndarray) -> np.ndarray:
    if block.shape == (1, 1):
        return block[0].astype(complex)
    if block.shape == (2, 2):
        tr = block[0, 0] + block[1, 1]
        det = block[0, 0] * block[1, 1] - block[0, 1] * block[1, 0]
        disc = np.sqrt(complex(tr * tr / 4 - det))
        # Larger-magnitude root first, the other from det/root to avoid cancellation.
        big = tr / 2 + disc if np.real(tr) * np.real(disc) >= 0 else tr / 2 - disc
        small = det / big if big != 0 else 0.0
        return np.array([small, big], dtype=complex)
    return np.linalg.eigvals(block).astype(complex)


def zeroth_eigenvalues(L0) -> np.ndarray:
    """Eigenvalues of the degenerate generator, block by block.

    Blocks are the connected components of the coupling pattern of ``L0``, taken in
    order of their lowest index; inside a block eigenvalues are ordered by magnitude.
    For the V model this yields (0, -(phi + k), -k).
    """
    if isinstance(L0, ReducedGenerator):
        L0 = L0.L0
    L0 = np.asarray(L0)
    pattern = (np.abs(L0) + np.abs(L0.T)) > 0
    _, labels = connected_components(pattern, directed=False)
    seen: list[int] = []
    for lab in labels:
        if lab not in seen:
            seen.append(lab)
    out = []
    for lab in seen:
        idx = np.flatnonzero(labels == lab)
        out.extend(_sorted_by_magnitude(_block_eigenvalues(L0[np.ix_(idx, idx)])))
    return _maybe_real(np.array(out))


def correct_eigenvalue(f: np.poly1d, lambda0, delta: float | None = None, *, f0: np.poly1d | None = None):
    """Leading-order shift with f(lambda0 + shift) = 0.

    The shift is -f(lambda0) / f0'(lambda0), where f0 is the characteristic polynomial
    of the unperturbed generator. Since f(lambda0) is already of the order of the
    perturbation, using f0' instead of f' drops only higher orders. Without ``f0`` the
    slope of ``f`` itself is used (a plain Newton step).
    """
    if delta is not None and delta == 0:
        return 0.0 * lambda0
    f = np.poly1d(f)
    slope_poly = np.poly1d(f0) if f0 is not None else f
    fp = slope_poly.deriv()(lambda0)
    scale = np.max(np.abs(slope_poly.coeffs)) * max(1.0, abs(lambda0)) ** (slope_poly.order - 1)
    if abs(fp) <= 1e-14 * scale:
        raise DegenerateRootError(
            f"zeroth-order eigenvalue {lambda0} is a repeated root; the first-order correction is undefined"
        )
    return -f(lambda0) / fp


@dataclass(frozen=True)
class LepeSpectrum:
    """Perturbed eigenvalues in mode order (mode n pairs lambda0[n] with corrections[n]).

    Mode order follows the block structure of L0, so for the V model mode 0 is the
    slow splitting-controlled mode, mode 1 is -(phi + k) and mode 2 is -k.
    ``order`` gives the permutation sorting modes by increasing |lambda|.
    """

    lambda0: np.ndarray
    corrections: np.ndarray
    eigenvalues: np.ndarray
    valid: np.ndarray
    in_regime: bool
    closed_form_lambda1: float | None = None
    temperature_form_lambda1: float | None = None

    @property
    def all_valid(self) -> bool:
        return bool(np.all(self.valid)) and self.in_regime

    @property
    def order(self) -> np.ndarray:
        v = self.eigenvalues
        return np.lexsort((np.imag(v), np.real(v), np.abs(v)))

    @property
    def by_magnitude(self) -> np.ndarray:
        return self.eigenvalues[self.order]

    @property
    def slowest(self):
        return self.by_magnitude[0]


def _validity(lambda0: np.ndarray, corr: np.ndarray) -> np.ndarray:
    mags = np.abs(lambda0)
    nonzero = mags[mags > 0]
    gap = nonzero.min() if nonzero.size else np.inf
    ref = np.where(mags > 0, mags, gap)
    return np.abs(corr) < CORRECTION_VALIDITY_RATIO * ref


def lepe_spectrum(gen: ReducedGenerator, *, validity_threshold: float = DELTA_VALIDITY_THRESHOLD) -> LepeSpectrum:
    lam0 = zeroth_eigenvalues(gen.L0)
    for a in range(len(lam0)):
        for b in range(a + 1, len(lam0)):
            if abs(lam0[a] - lam0[b]) <= 1e-14 * max(1.0, abs(lam0[a])):
                raise DegenerateRootError(f"zeroth-order eigenvalue {lam0[a]} is repeated (modes {a} and {b})")
    f = characteristic_polynomial(gen.L)
    f0 = characteristic_polynomial(gen.L0)
    corr = _maybe_real(np.array([correct_eigenvalue(f, l0, gen.delta, f0=f0) for l0 in lam0]))
    in_regime = gen.delta / gen.nu <= validity_threshold
    if not in_regime:
        warnings.warn(
            f"delta/nu = {gen.delta / gen.nu:g} is outside the perturbative regime",
            ValidityWarning,
            stacklevel=2,
        )
    k, phi, dl = gen.k, gen.phi, gen.delta
    closed = -phi * dl**2 / (k * (k + phi))
    temp = None
    if gen.boltzmann is not None:
        b = gen.boltzmann
        temp = -(dl**2) * (1 + 2 * b) / (2 * k * (1 + b))
    return LepeSpectrum(
        lambda0=lam0,
        corrections=corr,
        eigenvalues=lam0 + corr,
        valid=_validity(lam0, corr),
        in_regime=in_regime,
        closed_form_lambda1=closed,
        temperature_form_lambda1=temp,
    )


def exact_eigenvalues(L: np.ndarray) -> np.ndarray:
    """Dense eigenvalues of L, each polished with a Newton step on the characteristic polynomial."""
    L = np.asarray(L)
    f = characteristic_polynomial(L)
    fp = f.deriv()
    lam = np.linalg.eigvals(L).astype(complex)
    for _ in range(2):
        d = fp(lam)
        step = np.where(d != 0, f(lam) / np.where(d != 0, d, 1), 0)
        lam = lam - step
    return _maybe_real(_sorted_by_magnitude(lam))


@dataclass(frozen=True)
class CoefficientSystem:
    Lambda: np.ndarray
    B: np.ndarray
    v: np.ndarray
    x_inf: np.ndarray
    element: int
    limit: bool

    @property
    def nodes(self) -> np.ndarray:
        return self.Lambda[1]


def _vandermonde(nodes) -> np.ndarray:
    nodes = np.asarray(nodes)
    return np.vander(nodes, N=len(nodes), increasing=True).T


def build_coefficient_system(gen: ReducedGenerator, spectrum: LepeSpectrum, i, *, limit: bool = False) -> CoefficientSystem:
    """Linear map from initial conditions to mode coefficients of element ``i``.

    With ``limit=True`` the splitting is set to zero in B and v and the nodes are the
    zeroth-order eigenvalues, which is the delta -> 0 form of the system.
    """
    i = _element_index(i)
    n = gen.dim
    L = gen.L0 if limit else gen.L
    nodes = spectrum.lambda0 if limit else spectrum.eigenvalues
    B = np.zeros((n, n))
    v = np.zeros(n)
    P = np.eye(n)
    for m in range(n):
        B[m] = P[i]
        if m > 0:
            v[m] = (np.linalg.matrix_power(L, m - 1) @ gen.d)[i]
        P = P @ L
    x_inf = np.zeros(n)
    x_inf[0] = steady_state(gen).to_vector()[i]
    return CoefficientSystem(Lambda=_vandermonde(nodes), B=B, v=v, x_inf=x_inf, element=i, limit=limit)


def solve_coefficients(system: CoefficientSystem, x0) -> np.ndarray:
    """Coefficients (c_1,i, c_2,i, c_3,i) of element i for the initial state ``x0``."""
    x0 = x0.to_vector() if isinstance(x0, ReducedState) else np.asarray(x0, dtype=float)
    cond = np.linalg.cond(system.Lambda)
    if not np.isfinite(cond) or cond > VANDERMONDE_MAX_COND:
        nodes = system.nodes
        gap = min(abs(a - b) for j, a in enumerate(nodes) for b in nodes[j + 1 :])
        raise IllConditionedError(
            f"Vandermonde matrix is near-singular (cond={cond:.3g}); smallest eigenvalue gap {gap:.3g}"
        )
    rhs = system.B @ x0 + system.v - system.x_inf
    return _maybe_real(np.linalg.solve(system.Lambda, rhs))


@dataclass(frozen=True)
class CoefficientReport:
    """Coefficients indexed [mode, element], at the working splitting and in the delta -> 0 limit."""

    at_delta: np.ndarray
    limit: np.ndarray


def mode_coefficients(gen: ReducedGenerator, x0, spectrum: LepeSpectrum | None = None) -> CoefficientReport:
    spectrum = spectrum or lepe_spectrum(gen)
    at_delta = np.column_stack(
        [solve_coefficients(build_coefficient_system(gen, spectrum, i), x0) for i in range(gen.dim)]
    )
    limit = np.column_stack(
        [solve_coefficients(build_coefficient_system(gen, spectrum, i, limit=True), x0) for i in range(gen.dim)]
    )
    return CoefficientReport(at_delta=at_delta, limit=limit)


def reconstruct(gen: ReducedGenerator, spectrum: LepeSpectrum, coefficients: np.ndarray, times, *, limit=False):
    """x_i(t) = x_inf,i + sum_n c_{n,i} exp(lambda_n t); returns shape (len(times), dim)."""
    t = np.asarray(times, dtype=float)
    nodes = spectrum.lambda0 if limit else spectrum.eigenvalues
    modes = np.exp(np.multiply.outer(t, nodes))
    x_inf = steady_state(gen).to_vector()
    return np.real(x_inf + modes @ np.asarray(coefficients))


def invert_to_initial(
    gen: ReducedGenerator,
    c2: float,
    *,
    c3: float = 0.0,
    limit: bool = True,
    spectrum: LepeSpectrum | None = None,
    element="sigma32_R",
) -> ReducedState:
    """Initial state with no weight on the slow mode (c_{1,i} = 0 for every element).

    The remaining freedom is fixed by c_{2,e} = c2 and c_{3,e} = c3 for element ``e``.
    """
    spectrum = spectrum or lepe_spectrum(gen)
    e = _element_index(element)
    rows, rhs = [], []
    for i in range(gen.dim):
        sys = build_coefficient_system(gen, spectrum, i, limit=limit)
        Linv = np.linalg.inv(sys.Lambda)
        A = Linv @ sys.B
        b = Linv @ (sys.v - sys.x_inf)
        rows.append(A[0])
        rhs.append(-b[0])
        if i == e:
            rows.extend([A[1], A[2]])
            rhs.extend([c2 - b[1], c3 - b[2]])
    A = np.real_if_close(np.array(rows))
    y = np.real_if_close(np.array(rhs))
    x, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = np.abs(A @ x - y).max()
    if resid > 1e-9 * max(1.0, np.abs(y).max()):
        raise InconsistentConstraintsError(f"constraints admit no initial state (residual {resid:.3g})")
    return ReducedState.from_vector(np.real(x))

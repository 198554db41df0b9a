"""Acceptance criteria 1-10. Each test prints one PASS/FAIL line in the terminal summary."""

import math
import time
import warnings

import mpmath
import numpy as np
import pytest

from qmpemba.analysis import (
    DistanceCurve,
    crossing_times,
    distance_curve,
    equilibration_time,
    log_time_grid,
    propagate,
    trace_distance,
)
from qmpemba.classical import (
    ClassicalGenerator,
    classical_coefficients,
    classical_eigenvalues,
    classical_mpemba_state,
    classical_trajectory,
    populations_to_density,
)
from qmpemba.closedform import plateau_value, timescales
from qmpemba.generator import LAMBDA_LAYOUT, gibbs_state, reduced_from_rates
from qmpemba.lepe import build_coefficient_system, exact_eigenvalues, lepe_spectrum, mode_coefficients
from qmpemba.model import (
    BathSpec,
    Rates,
    ValidityWarning,
    aggregate_baths,
    lambda_model_params,
    rate_k,
    v_model_rates,
    v_model_system,
)
from qmpemba.mpemba import PhysicalityWarning, c2_bounds, check_physical, make_mpemba_state
from qmpemba.validation import run_battery

from conftest import K, PHI, PLATEAU

DELTA = 1e-4
TAU1_DERIVED = 3689900.617967468


@pytest.fixture(scope="module")
def gibbs():
    return gibbs_state(v_model_system(1.0, DELTA), 2.0)


@pytest.fixture(scope="module")
def redfield_curves(canonical_full, gibbs):
    grid = log_time_grid(1e9, per_decade=30)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PhysicalityWarning)
        rho_m = make_mpemba_state(-0.24, K, PHI).rho0
    starts = {"M": rho_m, "G": np.diag([1.0, 0, 0]).astype(complex)}
    return {name: distance_curve(propagate(canonical_full, rho, grid), gibbs, name) for name, rho in starts.items()}


def test_criterion_01_slow_timescale(canonical_gen):
    k, phi = canonical_gen.k, canonical_gen.phi
    tau1_formula = k * (k + phi) / (phi * DELTA**2)
    assert 2.8e6 <= tau1_formula <= 4.6e6
    assert tau1_formula == pytest.approx(TAU1_DERIVED, rel=1e-12)
    assert abs(tau1_formula - 3e6) / TAU1_DERIVED < 0.25
    tau1_lepe = timescales(lepe_spectrum(canonical_gen)).tau1
    assert tau1_lepe == pytest.approx(tau1_formula, rel=1e-12)
    tau1_exact = 1 / abs(exact_eigenvalues(canonical_gen.L)[0])
    assert tau1_exact == pytest.approx(tau1_formula, rel=10 * (DELTA / k) ** 2)


def test_criterion_02_fast_timescale(canonical_gen, redfield_curves):
    tau2 = timescales(lepe_spectrum(canonical_gen)).tau2
    assert tau2 == pytest.approx(1 / (PHI + K), rel=(DELTA / K) ** 2)
    assert round(tau2, 1) == 12.2
    t_eq = equilibration_time(redfield_curves["M"], 1e-4)
    assert 10 <= t_eq <= 150


def test_criterion_03_c2_bounds():
    lower, upper = c2_bounds(K, PHI)
    assert round(lower, 3) == round(-0.2431, 3)
    assert round(upper, 3) == round(0.226, 3)
    assert lower == pytest.approx(-0.2431, abs=5e-4)
    assert upper == pytest.approx(0.226, abs=5e-4)


def test_criterion_04_plateau(canonical_full):
    b = math.exp(-1 / 2.0)
    assert b / (2 * (1 + b)) == pytest.approx(PLATEAU, rel=1e-14)
    assert plateau_value(K, PHI) == pytest.approx(PLATEAU, rel=1e-13)
    # Plateau window: tau2 << t << tau1.
    t = np.geomspace(200.0, 2000.0, 30)
    reduced = propagate(canonical_full, np.diag([1.0, 0, 0]).astype(complex), t).reduced_states
    assert np.abs(reduced[:, 0] - PLATEAU).max() < 1e-3
    assert np.abs(reduced[:, 1] - PLATEAU).max() < 1e-3
    hot_rates = [v_model_rates(1.0, BathSpec(temperature=T)) for T in (1e2, 1e4, 1e6)]
    hot = [plateau_value(r.k, r.phi) for r in hot_rates]
    assert np.all(np.diff(hot) > 0)
    assert hot[-1] == pytest.approx(0.25, abs=1e-6)


def test_criterion_05_eigenvalue_scaling(canonical_rates):
    deltas = np.logspace(-5, -3, 9)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        slow = [abs(exact_eigenvalues(reduced_from_rates(canonical_rates, d).L)[0]) for d in deltas]
    slope = np.polyfit(np.log(deltas), np.log(slow), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.02)
    gen = reduced_from_rates(canonical_rates, DELTA)
    lam_lepe = lepe_spectrum(gen).eigenvalues[0]
    lam_exact = exact_eigenvalues(gen.L)[0]
    assert abs(lam_lepe - lam_exact) / abs(lam_exact) < 1e-3


def test_criterion_06_mpemba_hyper_acceleration(redfield_curves):
    M, G = redfield_curves["M"], redfield_curves["G"]
    ratio = equilibration_time(M, 1e-4) / equilibration_time(G, 1e-4)
    assert ratio < 1e-4
    assert M.D[0] > G.D[0], f"D_M(0) = {M.D[0]:.4f} does not exceed D_G(0) = {G.D[0]:.4f}"
    assert crossing_times(M, G), "no crossing between the Mpemba and ground-state curves"


def test_criterion_07_coefficient_closure(canonical_gen):
    k, phi, dl = canonical_gen.k, canonical_gen.phi, DELTA
    spectrum = lepe_spectrum(canonical_gen)
    closed_B1 = [[1, 0, 0], [-phi, -k, 0], [phi * (k + phi), k * (k + phi), -dl * k]]
    closed_B2 = [[0, 1, 0], [-phi, -k, dl], [phi * (k + phi), k * (k + phi) - dl**2, -2 * dl * k]]
    closed_v = [0, (phi - k) / 2, (k**2 - phi**2) / 2]
    s1 = build_coefficient_system(canonical_gen, spectrum, "P")
    s2 = build_coefficient_system(canonical_gen, spectrum, "sigma32_R")
    np.testing.assert_allclose(s1.B, closed_B1, rtol=0, atol=1e-12)
    np.testing.assert_allclose(s2.B, closed_B2, rtol=0, atol=1e-12)
    np.testing.assert_allclose(s1.v, closed_v, rtol=0, atol=1e-12)
    np.testing.assert_allclose(s2.v, closed_v, rtol=0, atol=1e-12)
    np.testing.assert_allclose(s1.x_inf, [(phi - k) / (2 * phi), 0, 0], rtol=0, atol=1e-12)
    np.testing.assert_allclose(s2.x_inf, [0, 0, 0], rtol=0, atol=1e-12)

    rep = mode_coefficients(canonical_gen, np.zeros(3), spectrum)
    a = (phi - k) / (2 * (phi + k))
    np.testing.assert_allclose(rep.limit[:, 0], [-k * (phi - k) / (2 * phi * (phi + k)), -a, 0.0], rtol=0, atol=1e-12)
    np.testing.assert_allclose(rep.limit[:, 1], [a, -a, 0.0], rtol=0, atol=1e-12)
    # The third-mode weights are second order in the splitting.
    c31 = dl**2 * (phi - k) / (2 * k * phi * (phi + k))
    c32 = -(dl**2) * (phi - k) / (2 * k**2 * (phi + k))
    assert abs(rep.at_delta[2, 0]) < 10 * abs(c31)
    assert abs(rep.at_delta[2, 1]) < 10 * abs(c32)


def lambda_oracle(k: float, b: float, delta: float, y0, times) -> np.ndarray:
    """Lambda-model equations solved directly over (s11, s22, Re s12, Im s12), s33 = 1 - s11 - s22.

    The 5x5 homogeneous embedding is exponentiated in 40-digit arithmetic: double
    precision expm loses about 1e-12 at t ~ 1e7 on this non-normal matrix.
    """
    with mpmath.workdps(40):
        k, kb, delta = mpmath.mpf(k), mpmath.mpf(k) * mpmath.mpf(b), mpmath.mpf(delta)
        H = mpmath.matrix(
            [
                [-kb - k, -k, -kb, 0, k],
                [-k, -kb - k, -kb, 0, k],
                [-kb / 2 - k, -kb / 2 - k, -kb, delta, k],
                [0, 0, -delta, -kb, 0],
                [0, 0, 0, 0, 0],
            ]
        )
        start = mpmath.matrix([*y0, 1])
        return np.array([[float(v) for v in (mpmath.expm(H * mpmath.mpf(t)) * start)[:4]] for t in times])


def test_criterion_08_lambda_and_multibath_identities():
    bath = BathSpec()
    k, b = rate_k(1.0, bath), math.exp(-1 / bath.temperature)
    gen = reduced_from_rates(lambda_model_params(1.0, bath), DELTA, layout=LAMBDA_LAYOUT)
    times = np.concatenate([[0.0], np.geomspace(0.1, 1e8, 50)])
    starts = ([0.0, 0.0, 0.0, 0.0], [0.5, 0.5, 0.0, 0.0], [0.3, 0.3, 0.2, -0.1], [0.1, 0.1, -0.05, 0.05])
    for s11, s22, re, im in starts:
        oracle = lambda_oracle(k, b, DELTA, [s11, s22, re, im], times)
        engine = propagate(gen, [(s11 + s22) / 2, re, im], times).states
        np.testing.assert_allclose(engine[:, 0], (oracle[:, 0] + oracle[:, 1]) / 2, rtol=0, atol=1e-12)
        np.testing.assert_allclose(engine[:, 1:], oracle[:, 2:], rtol=0, atol=1e-12)

    for n in (2, 3, 5, 8):
        single = v_model_rates(1.0, bath)
        summed = Rates(k=math.fsum([single.k] * n), phi=math.fsum([single.phi] * n))
        agg = aggregate_baths([bath] * n, 1.0)
        assert agg == summed
        g_many, g_one = reduced_from_rates(agg, DELTA), reduced_from_rates(summed, DELTA)
        np.testing.assert_array_equal(g_many.L, g_one.L)
        np.testing.assert_array_equal(g_many.d, g_one.d)
        np.testing.assert_array_equal(
            propagate(g_many, np.zeros(3), times).states, propagate(g_one, np.zeros(3), times).states
        )


def test_criterion_09_classical_control(canonical_gen):
    k = 0.04
    np.testing.assert_allclose(classical_eigenvalues(ClassicalGenerator(k21=k, k31=k, beta=0.0)), (-k, -3 * k), rtol=1e-14)
    np.testing.assert_allclose(
        classical_eigenvalues(ClassicalGenerator(k21=0.02, k31=0.05, beta=500.0)), (-0.02, -0.05), rtol=1e-14
    )

    secular_point = ClassicalGenerator.from_bath(1.0, 0.25, BathSpec())
    p0 = classical_mpemba_state(secular_point, -0.2703)
    c = classical_coefficients(secular_point, p0)
    assert c[1, 0] == pytest.approx(-0.2703, rel=1e-12)
    assert round(c[1, 1], 4) == -0.2644
    assert check_physical(populations_to_density(p0)).ok
    t = log_time_grid(1e4, start=0.01)
    ref = populations_to_density(classical_trajectory(secular_point, np.zeros((2, 2)), t[-1:]))[0]
    curves = {}
    for name, start in (("M", p0), ("E", np.array([1 / 3, 1 / 3]))):
        rho = populations_to_density(classical_trajectory(secular_point, classical_coefficients(secular_point, start), t))
        curves[name] = DistanceCurve(t, trace_distance(rho, ref), name)
    assert curves["M"].D[0] > curves["E"].D[0]
    assert crossing_times(curves["M"], curves["E"])

    for T in (0.5, 1.0, 2.0, 5.0, 10.0):
        for delta in (0.0, 0.1, 0.25, 0.5):
            lam = classical_eigenvalues(ClassicalGenerator.from_bath(1.0, delta, BathSpec(temperature=T)))
            assert abs(lam[1] / lam[0]) < 10
    assert timescales(lepe_spectrum(canonical_gen)).acceleration > 1e5


def test_criterion_10_property_suite():
    start = time.perf_counter()
    results = run_battery()
    elapsed = time.perf_counter() - start
    failed = [r.line for r in results if r.status == "fail"]
    assert not failed, "\n".join(failed)
    names = {r.name for r in results if r.status == "pass"}
    for required in (
        "generator.trace_preservation",
        "analysis.positivity_along_trajectories",
        "analysis.trace_distance_monotone",
        "analysis.semigroup_restart",
        "lepe.vandermonde_row_completeness",
    ):
        assert required in names
    assert elapsed < 60

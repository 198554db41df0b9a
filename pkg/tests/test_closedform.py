import math

import numpy as np
import pytest

from qmpemba.analysis import propagate
from qmpemba.closedform import (
    AnalyticSolution,
    coherence_ground_prep,
    mpemba_trajectory,
    plateau_value,
    plateau_window,
    population_ground_prep,
    timescales,
)
from qmpemba.generator import build_reduced, reduced_from_rates
from qmpemba.lepe import lepe_spectrum
from qmpemba.model import BathSpec, v_model_rates

from conftest import K, P_INF, PHI, PLATEAU

DELTA = 1e-4


class TestGroundPreparation:
    def test_initial_values(self):
        assert coherence_ground_prep(0.0, K, PHI, DELTA) == 0.0
        assert population_ground_prep(0.0, K, PHI, DELTA) == pytest.approx(0.0, abs=1e-16)

    def test_coherence_plateau(self):
        sol = AnalyticSolution("ground", K, PHI, DELTA)
        _, _, mid = plateau_window(sol)
        # Frozen from (phi - k)/(2(phi + k)), not from a rounded phi.
        assert coherence_ground_prep(mid, K, PHI, DELTA) == pytest.approx(PLATEAU, rel=2e-3)
        assert population_ground_prep(mid, K, PHI, DELTA) == pytest.approx(PLATEAU, rel=2e-3)

    def test_long_time_limits(self):
        assert coherence_ground_prep(1e12, K, PHI, DELTA) == pytest.approx(0.0, abs=1e-15)
        assert population_ground_prep(1e12, K, PHI, DELTA) == pytest.approx(P_INF, rel=1e-14)

    def test_plateau_formula(self):
        b = math.exp(-0.5)
        assert plateau_value(K, PHI) == pytest.approx(b / (2 * (1 + b)), rel=1e-14)
        assert plateau_value(K, PHI) == pytest.approx(PLATEAU, rel=1e-14)

    def test_matches_reduced_propagation(self):
        g = build_reduced(K, PHI, DELTA)
        sol = AnalyticSolution("ground", K, PHI, DELTA)
        t = np.concatenate([[0.0], np.geomspace(1e-2, 5 * sol.tau1, 400)])
        exact = propagate(g, np.zeros(3), t).states
        err = np.abs(sol(t)[:, :2] - exact[:, :2]).max(axis=0)
        assert err.max() <= 1e-3

    def test_degrades_at_larger_splitting(self):
        def err(delta):
            g = build_reduced(K, PHI, delta)
            sol = AnalyticSolution("ground", K, PHI, delta)
            t = np.concatenate([[0.0], np.geomspace(1e-2, 5 * sol.tau1, 400)])
            return np.abs(sol(t)[:, :2] - propagate(g, np.zeros(3), t).states[:, :2]).max()

        assert err(1e-4) < err(1e-2) < err(5e-2)
        assert err(5e-2) > 1e-2


class TestMpembaTrajectory:
    def test_initial_state(self):
        x = mpemba_trajectory(0.0, -0.24, K, PHI)
        np.testing.assert_allclose(x, [P_INF - 0.24, -0.24, 0.0], rtol=1e-14)
        assert x[0] == pytest.approx(0.0340686, abs=1e-7)

    def test_long_time(self):
        np.testing.assert_allclose(mpemba_trajectory(1e6, -0.24, K, PHI), [P_INF, 0, 0], atol=1e-15)

    def test_single_exponential(self):
        t = np.linspace(0, 100, 50)
        gap = np.abs(mpemba_trajectory(t, -0.24, K, PHI)[:, 0] - P_INF)
        slopes = np.diff(np.log(gap)) / np.diff(t)
        np.testing.assert_allclose(slopes, -(K + PHI), rtol=1e-9)

    def test_fit_over_fast_window(self):
        sol = AnalyticSolution("mpemba", K, PHI, DELTA, c2=-0.24)
        t = np.linspace(sol.tau2, 10 * sol.tau2, 100)
        gap = np.abs(sol(t)[:, 0] - P_INF)
        rate = -np.polyfit(t, np.log(gap), 1)[0]
        assert rate == pytest.approx(K + PHI, rel=1e-6)

    def test_needs_c2(self):
        with pytest.raises(ValueError):
            AnalyticSolution("mpemba", K, PHI, DELTA)


class TestTimescales:
    def test_canonical(self, canonical_gen):
        ts = timescales(lepe_spectrum(canonical_gen))
        assert ts.tau1 == pytest.approx(3689900.617967468, rel=1e-12)
        assert ts.tau2 == pytest.approx(12.245933120185456, rel=1e-5)
        assert ts.acceleration == pytest.approx(301316.41106917848, rel=1e-5)

    def test_order_of_magnitude_statements(self, canonical_gen):
        # Slow lifetime "about 3e6" within 25 percent; fast lifetime "about 20" within a factor of two.
        ts = timescales(lepe_spectrum(canonical_gen))
        assert abs(ts.tau1 / 3e6 - 1) <= 0.25
        assert 10 <= ts.tau2 <= 40

    def test_acceleration_is_roughly_k_over_delta_squared(self, canonical_gen):
        ts = timescales(lepe_spectrum(canonical_gen))
        exact = K * (K + PHI) ** 2 / (PHI * DELTA**2)
        assert ts.acceleration == pytest.approx(exact, rel=1e-4)
        assert 0.1 < ts.acceleration / (K / DELTA) ** 2 < 10

    def test_halving_splitting(self, canonical_gen):
        a = timescales(lepe_spectrum(canonical_gen))
        b = timescales(lepe_spectrum(canonical_gen.with_delta(DELTA / 2)))
        assert b.tau1 == pytest.approx(4 * a.tau1, rel=1e-12)
        assert b.tau2 == pytest.approx(a.tau2, rel=1e-6)

    def test_analytic_solution_timescales(self):
        sol = AnalyticSolution("ground", K, PHI, DELTA)
        assert sol.tau1 == pytest.approx(3689900.617967468, rel=1e-12)
        assert sol.tau2 == pytest.approx(1 / (K + PHI), rel=1e-15)

    def test_no_plateau_when_timescales_merge(self):
        with pytest.raises(ValueError):
            plateau_window(AnalyticSolution("ground", K, PHI, 0.02))


class TestPlateauTemperatureDependence:
    @pytest.mark.parametrize("T", [0.3, 1.0, 2.0, 10.0, 100.0])
    def test_plateau_equals_boltzmann_form(self, T):
        r = v_model_rates(1.0, BathSpec(temperature=T))
        b = math.exp(-1.0 / T)
        assert plateau_value(r.k, r.phi) == pytest.approx(b / (2 * (1 + b)), rel=1e-13)

    def test_hot_plateau_approaches_quarter(self):
        r = v_model_rates(1.0, BathSpec(temperature=1e6))
        assert plateau_value(r.k, r.phi) == pytest.approx(0.25, abs=1e-6)

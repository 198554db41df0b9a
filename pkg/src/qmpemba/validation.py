"""Invariant battery run by ``qmpemba validate``.

Each check returns a ``CheckResult``; failures are results, not exceptions. The
``mutate`` hook rewrites every reduced generator the battery builds, which lets
tests inject a known bug and see which invariants catch it.
"""

from __future__ import annotations

import dataclasses
import math
import time
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import analysis, classical, closedform, generator, lepe, model, mpemba
from .textio import csv_text

__all__ = ["CheckResult", "ValidationConfig", "run_battery", "flip_splitting_sign", "format_results"]

PASS, FAIL, SKIP = "pass", "fail", "skipped"


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str
    detail: str = ""
    seconds: float = 0.0

    @property
    def line(self) -> str:
        label = {PASS: "PASS", FAIL: "FAIL", SKIP: "SKIP"}[self.status]
        return f"{label}  {self.name}: {self.detail}"


@dataclass(frozen=True)
class ValidationConfig:
    nu: float = 1.0
    temperature: float = 2.0
    gamma: float = 0.005
    delta: float = 1e-4
    mpemba_c2: float = -0.24
    threshold: float = 1e-4
    temperatures: tuple[float, ...] = (0.5, 1.0, 2.0, 5.0, 10.0)

    @property
    def bath(self) -> model.BathSpec:
        return model.BathSpec(temperature=self.temperature, gamma=self.gamma)

    @property
    def in_regime(self) -> bool:
        return self.delta / self.nu <= model.DELTA_VALIDITY_THRESHOLD


def flip_splitting_sign(gen: generator.ReducedGenerator) -> generator.ReducedGenerator:
    """Mutation: negate the splitting-induced block L1."""
    return dataclasses.replace(gen, L=gen.L0 - gen.L1, L1=-gen.L1)


class _Battery:
    def __init__(self, cfg: ValidationConfig, mutate):
        self.cfg = cfg
        self.mutate = mutate or (lambda g: g)
        self.rates = model.v_model_rates(cfg.nu, cfg.bath)

    def reduced(self, delta=None, rates=None) -> generator.ReducedGenerator:
        rates = rates or self.rates
        delta = self.cfg.delta if delta is None else delta
        return self.mutate(generator.reduced_from_rates(rates, delta, nu=self.cfg.nu))

    def canonical(self, gen) -> generator.ReducedGenerator:
        return generator.build_reduced(gen.k, gen.phi, gen.delta, nu=gen.nu, boltzmann=gen.boltzmann)

    def full(self):
        system = model.v_model_system(self.cfg.nu, self.cfg.delta)
        return system, generator.build_full_redfield(system, [self.cfg.bath])

    def horizon(self) -> float:
        k, phi = self.rates.k, self.rates.phi
        return 10 * k * (k + phi) / (phi * self.cfg.delta**2)

    # model

    def rates_monotone_in_temperature(self):
        T = np.linspace(0.2, 20, 200)
        ks = [model.rate_k(self.cfg.nu, model.BathSpec(temperature=t, gamma=self.cfg.gamma)) for t in T]
        return bool(np.all(np.diff(ks) > 0)), f"k increases over T in [{T[0]:g}, {T[-1]:g}]"

    def phi_over_k_range(self):
        ratios = []
        for t in (0.05, 0.5, 2.0, 50.0, 1e4):
            r = model.v_model_rates(self.cfg.nu, model.BathSpec(temperature=t, gamma=self.cfg.gamma))
            ratios.append(r.phi / r.k)
        ok = all(1 < x < 3 for x in ratios) and abs(ratios[0] - 1) < 1e-6 and abs(ratios[-1] - 3) < 1e-3
        return ok, f"phi/k from {ratios[0]:.8f} (cold) to {ratios[-1]:.6f} (hot)"

    def multibath_equals_summed(self):
        n = 4
        one = model.aggregate_baths([dataclasses.replace(self.cfg.bath, gamma=n * self.cfg.gamma)], self.cfg.nu)
        many = model.aggregate_baths([self.cfg.bath] * n, self.cfg.nu)
        rel = max(abs(one.k - many.k) / one.k, abs(one.phi - many.phi) / one.phi)
        return rel <= 4 * np.finfo(float).eps, f"relative difference {rel:.2g} for {n} equal baths"

    def lambda_commutes_with_aggregation(self):
        baths = [model.BathSpec(temperature=t, gamma=g) for t, g in ((1.0, 0.002), (3.0, 0.004))]
        agg = model.aggregate_baths(baths, self.cfg.nu, model="lambda")
        parts = [model.lambda_model_params(self.cfg.nu, b) for b in baths]
        k = math.fsum(p.k for p in parts)
        phi = math.fsum(p.phi for p in parts)
        rel = max(abs(agg.k - k) / k, abs(agg.phi - phi) / phi)
        return rel <= 4 * np.finfo(float).eps, f"relative difference {rel:.2g}"

    # generator

    def full_trace_preservation(self):
        system, full = self.full()
        times = analysis.log_time_grid(self.horizon(), per_decade=10)
        traj = analysis.propagate(full, np.diag([1.0, 0, 0]).astype(complex), times)
        rho = traj.states
        tr = np.max(np.abs(np.trace(rho, axis1=1, axis2=2) - 1))
        herm = np.max(np.abs(rho - np.conj(np.swapaxes(rho, 1, 2))))
        return tr < 1e-12 and herm < 1e-12, f"max |Tr rho - 1| = {tr:.2g}, max hermiticity defect = {herm:.2g}"

    def steady_state_near_gibbs(self):
        gen = self.reduced()
        x_inf = generator.steady_state(gen).to_vector()
        gibbs = generator.project(generator.gibbs_state(model.v_model_system(self.cfg.nu, self.cfg.delta), self.cfg.temperature))
        err = np.max(np.abs(x_inf - gibbs))
        return err <= 10 * self.cfg.delta / self.cfg.nu, f"max deviation {err:.3g} for delta/nu = {self.cfg.delta / self.cfg.nu:g}"

    # lepe

    def lepe_matches_exact(self):
        if not self.cfg.in_regime:
            return None, "out of regime"
        worst = 0.0
        for t in self.cfg.temperatures:
            rates = model.v_model_rates(self.cfg.nu, model.BathSpec(temperature=t, gamma=self.cfg.gamma))
            gen = self.reduced(rates=rates)
            spec = lepe.lepe_spectrum(gen)
            exact = lepe.exact_eigenvalues(gen.L)
            approx = spec.by_magnitude
            rel = np.abs(approx - exact) / np.abs(exact)
            worst = max(worst, float(np.max(rel / (self.cfg.delta / rates.k) ** 2)))
        return worst <= 10.0, f"max relative error / (delta/k)^2 = {worst:.3g} over T in {self.cfg.temperatures}"

    def lepe_error_scaling(self):
        if not self.cfg.in_regime:
            return None, "out of regime"
        deltas = np.array([1e-5, 1e-4, 1e-3])
        errs = []
        for dl in deltas:
            gen = self.reduced(delta=dl)
            exact = lepe.exact_eigenvalues(gen.L)[0]
            errs.append(abs(lepe.lepe_spectrum(gen).slowest - exact) / abs(exact))
        slope = np.polyfit(np.log(deltas), np.log(errs), 1)[0]
        return abs(slope - 2) <= 0.1, f"log-log slope of the slow-eigenvalue error = {slope:.4f}"

    def b_matrix_identity(self):
        gen = self.reduced()
        spec = lepe.lepe_spectrum(gen)
        worst = 0.0
        for i in range(3):
            sys = lepe.build_coefficient_system(gen, spec, i)
            for m in range(3):
                worst = max(worst, float(np.max(np.abs(sys.B[m] - np.linalg.matrix_power(gen.L, m)[i]))))
        return worst == 0.0, f"max entry difference {worst:.2g}"

    def vandermonde_completeness(self):
        gen = self.reduced()
        spec = lepe.lepe_spectrum(gen)
        x0 = np.array([0.1, -0.05, 0.02])
        worst = 0.0
        for i in range(3):
            sys = lepe.build_coefficient_system(gen, spec, i)
            c = lepe.solve_coefficients(sys, x0)
            worst = max(worst, abs(c.sum() + sys.x_inf[0] - x0[i]))
        return worst <= 1e-13, f"max |sum_n c_n,i + x_inf,i - x_i(0)| = {worst:.2g}"

    def reconstruction(self):
        if not self.cfg.in_regime:
            return None, "out of regime"
        gen = self.reduced()
        theory = self.canonical(gen)
        spec = lepe.lepe_spectrum(theory)
        x0 = np.zeros(3)
        coeffs = lepe.mode_coefficients(theory, x0, spec).at_delta
        times = np.linspace(0, 5 / abs(spec.slowest), 2001)
        rebuilt = lepe.reconstruct(theory, spec, coeffs, times)
        exact = analysis.propagate(gen, x0, times).states
        err = np.max(np.abs(rebuilt - exact), axis=0)
        return float(err.max()) <= 1e-4, "max error (P, R, I) = (" + ", ".join(f"{e:.2g}" for e in err) + ")"

    # closedform

    def ground_prep_matches_oracle(self):
        if not self.cfg.in_regime:
            return None, "out of regime"
        gen = self.reduced()
        sol = closedform.AnalyticSolution("ground", gen.k, gen.phi, gen.delta)
        times = np.concatenate([[0.0], np.geomspace(1e-2, 5 * sol.tau1, 600)])
        exact = analysis.propagate(gen, np.zeros(3), times).states
        err = np.max(np.abs(sol(times)[:, :2] - exact[:, :2]), axis=0)
        return float(err.max()) <= 1e-3, f"max error P = {err[0]:.3g}, R = {err[1]:.3g} over [0, 5 tau1]"

    def plateau_equality(self):
        worst = 0.0
        for t in self.cfg.temperatures:
            r = model.v_model_rates(self.cfg.nu, model.BathSpec(temperature=t, gamma=self.cfg.gamma))
            b = math.exp(-self.cfg.nu / t)
            worst = max(worst, abs(closedform.plateau_value(r.k, r.phi) - b / (2 * (1 + b))))
        hot = model.v_model_rates(self.cfg.nu, model.BathSpec(temperature=1e8, gamma=self.cfg.gamma))
        hot_gap = abs(closedform.plateau_value(hot.k, hot.phi) - 0.25)
        return worst <= 1e-15 and hot_gap <= 1e-6, f"max mismatch {worst:.2g}, |plateau - 1/4| at T = 1e8: {hot_gap:.2g}"

    def mpemba_single_exponential(self):
        k, phi = self.rates.k, self.rates.phi
        tau2 = 1 / (k + phi)
        t = np.linspace(tau2, 10 * tau2, 200)
        x = closedform.mpemba_trajectory(t, self.cfg.mpemba_c2, k, phi)
        rate = -np.polyfit(t, np.log(np.abs(x[:, 0] - mpemba.steady_population(k, phi))), 1)[0]
        rel = abs(rate - (k + phi)) / (k + phi)
        return rel <= 1e-6, f"fitted rate {rate:.10g} vs phi + k = {k + phi:.10g}"

    # mpemba

    def mpemba_slow_weight_vanishes(self):
        gen = self.reduced()
        k, phi = gen.k, gen.phi
        lo, hi = mpemba.c2_positive_bounds(k, phi)
        worst = 0.0
        for c2 in np.linspace(lo, hi, 7)[1:-1]:
            state = mpemba.make_mpemba_state(c2, k, phi, strict=True)
            c1 = lepe.mode_coefficients(gen, state.reduced).limit[0]
            worst = max(worst, float(np.max(np.abs(c1))))
        return worst <= 10 * self.cfg.delta, f"max |c_1,i| = {worst:.2g} for delta = {self.cfg.delta:g}"

    def positivity_bounds_tight(self):
        k, phi = self.rates.k, self.rates.phi
        lo, hi = mpemba.c2_positive_bounds(k, phi)
        edge = [mpemba.check_physical(mpemba.mpemba_matrix(c, k, phi)).min_eigenvalue for c in (lo, hi)]
        outside = [mpemba.check_physical(mpemba.mpemba_matrix(c, k, phi)).positive for c in (lo - 1e-3, hi + 1e-3)]
        ok = all(abs(e) <= 1e-10 for e in edge) and not any(outside)
        return ok, f"min eigenvalue at ({lo:.6f}, {hi:.6f}) = ({edge[0]:.2g}, {edge[1]:.2g}); outside rejected: {not any(outside)}"

    def storage_relation(self):
        gen = self.reduced()
        x = lepe.invert_to_initial(gen, self.cfg.mpemba_c2, limit=True).to_vector()
        p_inf = mpemba.steady_population(gen.k, gen.phi)
        lhs = x[1] - (x[0] - p_inf)
        rhs = -gen.delta * x[2] / gen.k
        return abs(lhs - rhs) <= 1e-12, f"|R(0) - (P(0) - P_inf) + delta I(0)/k| = {abs(lhs - rhs):.2g}"

    # classical

    def classical_ratio_bounded(self):
        worst = 0.0
        for t in np.geomspace(0.5, 10, 9):
            for dl in np.linspace(0, 0.5, 11):
                gen = classical.ClassicalGenerator.from_bath(self.cfg.nu, dl, model.BathSpec(temperature=t, gamma=self.cfg.gamma))
                l1, l2 = classical.classical_eigenvalues(gen)
                worst = max(worst, l2 / l1)
        quantum = closedform.timescales(lepe.lepe_spectrum(self.reduced())).acceleration
        return worst < 10 and quantum > 1e5, f"classical max |l2/l1| = {worst:.3f}; quantum tau1/tau2 = {quantum:.3g}"

    def classical_detailed_balance(self):
        gen = classical.ClassicalGenerator.from_bath(self.cfg.nu, 0.25, self.cfg.bath)
        p2, p3 = classical.classical_equilibrium(gen)
        p1 = 1 - p2 - p3
        flux = max(abs(gen.k12 * p1 - gen.k21 * p2), abs(gen.k13 * p1 - gen.k31 * p3))
        resid = np.max(np.abs(gen.L @ np.array([p2, p3]) + gen.d))
        return flux <= 1e-17 and resid <= 1e-17, f"max net flux {flux:.2g}, stationarity residual {resid:.2g}"

    def classical_probability_conservation(self):
        gen = classical.ClassicalGenerator.from_bath(self.cfg.nu, 0.25, self.cfg.bath)
        p0 = np.array([1 / 3, 1 / 3])
        t = analysis.log_time_grid(2000, per_decade=20)
        p = classical.classical_trajectory(gen, classical.classical_coefficients(gen, p0), t)
        rho = classical.populations_to_density(p)
        err = np.max(np.abs(np.trace(rho, axis1=1, axis2=2) - 1))
        pos = bool(np.all(p >= -1e-15)) and bool(np.all(p.sum(axis=1) <= 1 + 1e-15))
        return err <= 1e-15 and pos, f"max |p1 + p2 + p3 - 1| = {err:.2g}, populations in [0, 1]: {pos}"

    # analysis

    def _initial_states(self):
        k, phi = self.rates.k, self.rates.phi
        lo, hi = mpemba.c2_positive_bounds(k, phi)
        states = {"ground": np.diag([1.0, 0, 0]).astype(complex), "mixed": np.eye(3, dtype=complex) / 3}
        for c2 in (0.9 * lo, 0.9 * hi):
            states[f"mpemba({c2:.4f})"] = mpemba.make_mpemba_state(c2, k, phi, strict=True).rho0
        return states

    def positivity_along_trajectories(self):
        times = analysis.log_time_grid(self.horizon(), per_decade=15)
        _, full = self.full()
        bad = []
        for label, rho0 in self._initial_states().items():
            for gname, gen in (("reduced", self.reduced()), ("redfield", full)):
                if not analysis.propagate(gen, rho0, times).is_physical():
                    bad.append(f"{label}/{gname}")
        return not bad, "all trajectories physical" if not bad else "violations: " + ", ".join(bad)

    def monotonicity(self):
        times = analysis.log_time_grid(self.horizon(), per_decade=25)
        system, full = self.full()
        gibbs = generator.gibbs_state(system, self.cfg.temperature)
        gen = self.reduced()
        own = generator.lift(generator.steady_state(gen).to_vector(), gen.layout)
        worst = -np.inf
        for rho0 in self._initial_states().values():
            for g, ref in ((gen, own), (full, gibbs)):
                curve = analysis.distance_curve(analysis.propagate(g, rho0, times), ref)
                worst = max(worst, float(np.max(np.diff(curve.D))))
        return worst <= 1e-9, f"largest increase of D between samples = {worst:.2g}"

    def semigroup(self):
        gen = self.reduced()
        _, full = self.full()
        times = np.array([0.0, 3.0, 40.0, 1e4, 1e6])
        worst = 0.0
        for g, x0 in ((gen, np.zeros(3)), (full, np.diag([1.0, 0, 0]).astype(complex))):
            whole = analysis.propagate(g, x0, times + 250.0).states
            mid = analysis.propagate(g, x0, [250.0]).states[0]
            restarted = analysis.propagate(g, mid, times).states
            worst = max(worst, float(np.max(np.abs(whole - restarted))))
        return worst <= 1e-12, f"max restart discrepancy {worst:.2g}"

    def _mpemba_curves(self):
        system, full = self.full()
        gibbs = generator.gibbs_state(system, self.cfg.temperature)
        k, phi = self.rates.k, self.rates.phi
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", mpemba.PhysicalityWarning)
            state = mpemba.make_mpemba_state(self.cfg.mpemba_c2, k, phi)
            near = mpemba.perturb_state(state, 1e-3)
        times = analysis.log_time_grid(self.horizon(), per_decade=40)
        curves = {}
        for label, rho0 in (("M", state.rho0), ("N", near), ("G", np.diag([1.0, 0, 0]).astype(complex))):
            curves[label] = analysis.distance_curve(analysis.propagate(full, rho0, times), gibbs, label)
        return curves, state

    def mpemba_acceleration(self):
        curves, _ = self._mpemba_curves()
        tm = analysis.equilibration_time(curves["M"], self.cfg.threshold)
        tg = analysis.equilibration_time(curves["G"], self.cfg.threshold)
        return tm / tg < 1e-4, f"t_eq(M) = {tm:.4g}, t_eq(G) = {tg:.4g}, ratio = {tm / tg:.3g}"

    def near_mpemba_lingers(self):
        curves, state = self._mpemba_curves()
        t, dn, dm = curves["N"].times, curves["N"].D, curves["M"].D
        slow = lepe.exact_eigenvalues(self.reduced().L)[0]
        window = (t > 0.2 / abs(slow)) & (t < 2 / abs(slow))
        rate = np.polyfit(t[window], np.log(dn[window]), 1)[0]
        tracks = abs(dn[0] - dm[0]) <= 2e-3 * abs(state.c2)
        rel = abs(rate - slow) / abs(slow)
        return rel <= 1e-2 and tracks, f"late-time slope {rate:.6g} vs lambda_1 = {slow:.6g}; |D_N(0) - D_M(0)| = {abs(dn[0] - dm[0]):.2g}"

    # cli

    def csv_determinism(self):
        data = np.array([[0.0, 1 / 3, -0.0], [1e-300, 2.5e17, math.pi]])
        a = csv_text(["a", "b", "c"], data, {"k": self.rates.k})
        b = csv_text(["a", "b", "c"], data.copy(), {"k": self.rates.k})
        roundtrip = np.array([[float(v) for v in line.split(",")] for line in a.splitlines()[2:]])
        ok = a == b and "\r" not in a and np.array_equal(roundtrip, data)
        return ok, "identical bytes and exact round trip" if ok else "CSV output is not reproducible"


CHECKS: tuple[tuple[str, str], ...] = (
    ("model.rate_monotone_in_temperature", "rates_monotone_in_temperature"),
    ("model.phi_over_k_range", "phi_over_k_range"),
    ("model.multibath_equals_summed_coupling", "multibath_equals_summed"),
    ("model.lambda_map_commutes_with_aggregation", "lambda_commutes_with_aggregation"),
    ("generator.trace_preservation", "full_trace_preservation"),
    ("generator.steady_state_near_gibbs", "steady_state_near_gibbs"),
    ("lepe.matches_exact_eigenvalues", "lepe_matches_exact"),
    ("lepe.error_scaling", "lepe_error_scaling"),
    ("lepe.b_matrix_identity", "b_matrix_identity"),
    ("lepe.vandermonde_row_completeness", "vandermonde_completeness"),
    ("lepe.reconstruction", "reconstruction"),
    ("closedform.ground_prep_matches_oracle", "ground_prep_matches_oracle"),
    ("closedform.plateau_equality", "plateau_equality"),
    ("closedform.mpemba_single_exponential", "mpemba_single_exponential"),
    ("mpemba.slow_weight_vanishes", "mpemba_slow_weight_vanishes"),
    ("mpemba.positivity_bounds_tight", "positivity_bounds_tight"),
    ("mpemba.storage_relation", "storage_relation"),
    ("classical.eigenvalue_ratio_bounded", "classical_ratio_bounded"),
    ("classical.detailed_balance", "classical_detailed_balance"),
    ("classical.probability_conservation", "classical_probability_conservation"),
    ("analysis.positivity_along_trajectories", "positivity_along_trajectories"),
    ("analysis.trace_distance_monotone", "monotonicity"),
    ("analysis.semigroup_restart", "semigroup"),
    ("analysis.mpemba_acceleration", "mpemba_acceleration"),
    ("analysis.near_mpemba_lingers", "near_mpemba_lingers"),
    ("cli.csv_determinism", "csv_determinism"),
)


def run_battery(
    config: ValidationConfig | None = None,
    *,
    mutate: Callable[[generator.ReducedGenerator], generator.ReducedGenerator] | None = None,
    only: tuple[str, ...] | None = None,
) -> list[CheckResult]:
    cfg = config or ValidationConfig()
    battery = _Battery(cfg, mutate)
    results = []
    for name, method in CHECKS:
        if only is not None and name not in only:
            continue
        start = time.perf_counter()
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", model.ValidityWarning)
                ok, detail = getattr(battery, method)()
            status = SKIP if ok is None else (PASS if ok else FAIL)
        except Exception as exc:  # a crashing check is a failed check
            status, detail = FAIL, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, status, detail, time.perf_counter() - start))
    return results


def format_results(results: list[CheckResult]) -> str:
    lines = [r.line for r in results]
    counts = {s: sum(r.status == s for r in results) for s in (PASS, FAIL, SKIP)}
    lines.append(f"{counts[PASS]} passed, {counts[FAIL]} failed, {counts[SKIP]} skipped")
    return "\n".join(lines)

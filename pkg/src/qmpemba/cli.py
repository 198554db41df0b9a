"""Command-line harness: ``qmpemba {simulate,mpemba,classical,sweep,validate}``.

Exit codes: 0 success, 1 configuration error, 2 physicality error, 3 validity-regime
warning promoted by ``--strict``.
"""

from __future__ import annotations

import argparse
import itertools
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, classical, closedform, generator, lepe, model, mpemba, textio
from .config import ConfigError, ExperimentConfig, load_config
from .validation import ValidationConfig, format_results, run_battery

EXIT_OK, EXIT_CONFIG, EXIT_PHYSICALITY, EXIT_VALIDITY = 0, 1, 2, 3

SIMULATE_COLUMNS = (
    "nu_t",
    "P_analytic",
    "sigma32R_analytic",
    "P_oracle",
    "sigma32R_oracle",
    "sigma32I_oracle",
    "abs_err_P",
    "abs_err_sigma32R",
)
CLASSICAL_COLUMNS = (
    "nu_t",
    "p2_analytic",
    "p3_analytic",
    "p2_oracle",
    "p3_oracle",
    "sigma32R_oracle",
    "sigma32I_oracle",
    "abs_err_p2",
    "abs_err_p3",
)
SWEEP_COLUMNS = (
    "delta",
    "temperature",
    "gamma",
    "k",
    "phi",
    "lambda1_exact",
    "lambda1_lepe",
    "rel_err",
    "acceleration",
    "in_regime",
)


@dataclass
class RunReport:
    command: str
    config: dict
    rates: dict = field(default_factory=dict)
    spectrum: dict = field(default_factory=dict)
    coefficients: dict = field(default_factory=dict)
    timescales: dict = field(default_factory=dict)
    equilibration_times: dict = field(default_factory=dict)
    crossings: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    validity_breach: bool = False
    exit_code: int = EXIT_OK

    def to_dict(self) -> dict:
        return asdict(self)


# building blocks


def _rates(cfg: ExperimentConfig) -> model.Rates:
    if cfg.model == "lambda":
        return model.lambda_model_params(cfg.nu, cfg.bath)
    if cfg.model == "multibath":
        return model.aggregate_baths(cfg.bath_list, cfg.nu)
    return model.v_model_rates(cfg.nu, cfg.bath)


def _layout(cfg: ExperimentConfig) -> generator.Layout:
    return generator.LAMBDA_LAYOUT if cfg.model == "lambda" else generator.V_LAYOUT


def _system(cfg: ExperimentConfig) -> model.SystemSpec:
    if cfg.model == "lambda":
        return model.lambda_model_system(cfg.nu, cfg.delta)
    return model.v_model_system(cfg.nu, cfg.delta)


@dataclass(frozen=True)
class _Setup:
    rates: model.Rates
    reduced: generator.ReducedGenerator
    full: generator.FullGenerator
    system: model.SystemSpec
    spectrum: lepe.LepeSpectrum
    layout: generator.Layout


def _setup(cfg: ExperimentConfig, report: RunReport) -> _Setup:
    if cfg.model == "classical":
        raise ConfigError(f"[model] kind = classical is handled by the 'classical' command, not '{report.command}'")
    rates = _rates(cfg)
    layout = _layout(cfg)
    reduced = generator.reduced_from_rates(rates, cfg.delta, nu=cfg.nu, layout=layout)
    system = _system(cfg)
    full = generator.build_full_redfield(system, cfg.bath_list)
    with warnings.catch_warnings(record=True) as log:
        warnings.simplefilter("always")
        spectrum = lepe.lepe_spectrum(reduced)
    report.warnings.extend(str(w.message) for w in log)
    report.rates = {"k": rates.k, "phi": rates.phi, "boltzmann": rates.boltzmann}
    report.spectrum = {
        "lambda0": spectrum.lambda0,
        "corrections": spectrum.corrections,
        "eigenvalues": spectrum.eigenvalues,
        "exact": lepe.exact_eigenvalues(reduced.L),
        "valid": spectrum.valid,
        "in_regime": spectrum.in_regime,
        "closed_form_lambda1": spectrum.closed_form_lambda1,
    }
    ts = closedform.timescales(spectrum)
    report.timescales = asdict(ts)
    if not spectrum.all_valid:
        report.validity_breach = True
        report.warnings.append(
            "perturbative eigenvalue estimates are outside their validity regime "
            f"(delta/nu = {cfg.delta / cfg.nu:g}, per-mode validity {list(map(bool, spectrum.valid))})"
        )
    return _Setup(rates, reduced, full, system, spectrum, layout)


def _meta(cfg: ExperimentConfig, setup: _Setup, command: str) -> dict:
    lam = setup.spectrum.eigenvalues
    return {
        "command": command,
        "model": cfg.model,
        "k": setup.rates.k,
        "phi": setup.rates.phi,
        "lambda_1": float(np.real(lam[0])),
        "lambda_2": float(np.real(lam[1])),
        "lambda_3": float(np.real(lam[2])),
        "units": "energies in nu, time as nu*t",
    }


def _time_grid(cfg: ExperimentConfig, slowest_rate: float, report: RunReport) -> np.ndarray:
    tau_slow = 1.0 / abs(slowest_rate) if slowest_rate else math.inf
    stop = cfg.grid_stop if cfg.grid_stop is not None else 10 * tau_slow
    if not math.isfinite(stop):
        raise ConfigError("[grid] stop: required when the slowest rate vanishes")
    if stop < 5 * tau_slow:
        report.warnings.append(f"horizon {stop:.4g} is shorter than five slow lifetimes (5 tau1 = {5 * tau_slow:.4g})")
    return analysis.log_time_grid(stop, start=min(cfg.grid_start, stop / 10), per_decade=cfg.per_decade)


def _physical_or_raise(rho, strict: bool, what: str, report: RunReport):
    rep = mpemba.check_physical(rho, tol=1e-9)
    hard = [f for f in rep.failed if f in ("normalization", "hermiticity", "purity")]
    if hard:
        raise mpemba.PhysicalityError(f"{what} fails {', '.join(hard)}")
    if rep.failed:
        msg = f"{what} fails {', '.join(rep.failed)} (min eigenvalue {rep.min_eigenvalue:.6g})"
        if strict:
            raise mpemba.PhysicalityError(msg)
        report.warnings.append(msg)


def _mpemba_state(cfg: ExperimentConfig, setup: _Setup, strict: bool, report: RunReport) -> mpemba.MpembaState:
    k, phi = setup.rates.k, setup.rates.phi
    lo, hi = mpemba.c2_bounds(k, phi)
    plo, phi_ = mpemba.c2_positive_bounds(k, phi)
    report.results["c2_bounds"] = {"purity_normalization": [lo, hi], "positive_semidefinite": [plo, phi_]}
    try:
        with warnings.catch_warnings(record=True) as log:
            warnings.simplefilter("always")
            state = mpemba.make_mpemba_state(cfg.c2, k, phi, strict=strict)
    except mpemba.PhysicalityError as exc:
        raise mpemba.PhysicalityError(
            f"{exc}; admissible c2 interval [{lo:.6g}, {hi:.6g}], positive semidefinite for [{plo:.6g}, {phi_:.6g}]"
        ) from None
    report.warnings.extend(str(w.message) for w in log)
    return state


def _initial_state(cfg: ExperimentConfig, setup: _Setup, strict: bool, report: RunReport) -> np.ndarray:
    layout = setup.layout
    kind = cfg.preparation
    if kind == "ground":
        return generator.lift(np.zeros(3), layout)
    if kind == "maximally-mixed":
        return np.eye(3, dtype=complex) / 3
    if kind == "steady":
        return generator.lift(generator.steady_state(setup.reduced).to_vector(), layout)
    if kind in ("mpemba", "perturbed-mpemba"):
        state = _mpemba_state(cfg, setup, strict, report)
        rho = state.rho0
        if kind == "perturbed-mpemba":
            with warnings.catch_warnings(record=True) as log:
                warnings.simplefilter("always")
                rho = mpemba.perturb_state(state, cfg.epsilon, strict=strict)
            report.warnings.extend(str(w.message) for w in log)
        return generator.lift(generator.project(rho), layout)
    rho = textio.read_matrix(cfg.matrix_path)
    if rho.shape != (3, 3):
        raise ConfigError(f"[preparation] path: expected a 3x3 matrix, got {rho.shape}")
    _physical_or_raise(rho, strict, f"explicit initial state {cfg.matrix_path}", report)
    return rho


# commands


def cmd_simulate(cfg: ExperimentConfig, out: Path, strict: bool = False) -> RunReport:
    report = RunReport("simulate", cfg.to_dict())
    setup = _setup(cfg, report)
    rho0 = _initial_state(cfg, setup, strict, report)
    x0 = generator.project(rho0, setup.layout)
    times = _time_grid(cfg, np.real(setup.spectrum.slowest), report)

    k, phi = setup.rates.k, setup.rates.phi
    coeffs = lepe.mode_coefficients(setup.reduced, x0, setup.spectrum)
    report.coefficients = {"basis": list(generator.BASIS), "at_delta": coeffs.at_delta, "limit": coeffs.limit}
    if cfg.preparation == "ground":
        analytic = closedform.AnalyticSolution("ground", k, phi, cfg.delta)(times)
        source = "closed form, ground preparation"
    elif cfg.preparation == "mpemba":
        analytic = closedform.AnalyticSolution("mpemba", k, phi, cfg.delta, cfg.c2)(times)
        source = "closed form, Mpemba preparation"
    else:
        analytic = lepe.reconstruct(setup.reduced, setup.spectrum, coeffs.at_delta, times)
        source = "perturbative eigenvalues with solved mode coefficients"
    oracle = analysis.propagate(setup.full, rho0, times, layout=setup.layout)
    xo = oracle.reduced_states
    err = np.abs(analytic[:, :2] - xo[:, :2])
    data = np.column_stack([times, analytic[:, 0], analytic[:, 1], xo[:, 0], xo[:, 1], xo[:, 2], err[:, 0], err[:, 1]])
    path = textio.write_csv(out / "trajectory.csv", SIMULATE_COLUMNS, data, _meta(cfg, setup, "simulate"))
    report.outputs.append(str(path))
    report.results.update(
        {
            "analytic_source": source,
            "oracle": oracle.provenance,
            "max_abs_err_P": float(err[:, 0].max()),
            "max_abs_err_sigma32R": float(err[:, 1].max()),
            "oracle_physical": oracle.is_physical(),
        }
    )
    if cfg.preparation == "ground":
        report.results["plateau"] = closedform.plateau_value(k, phi)
    return report


def _preparations_for_mpemba(cfg, setup, strict, report) -> dict[str, np.ndarray]:
    state = _mpemba_state(cfg, setup, strict, report)
    with warnings.catch_warnings(record=True) as log:
        warnings.simplefilter("always")
        near = mpemba.perturb_state(state, cfg.epsilon, strict=strict)
    report.warnings.extend(str(w.message) for w in log)
    lay = setup.layout
    return {
        "M": generator.lift(state.reduced, lay),
        "N": generator.lift(generator.project(near), lay),
        "G": generator.lift(np.zeros(3), lay),
        "E": np.eye(3, dtype=complex) / 3,
    }


def _curve_summary(curves: dict[str, analysis.DistanceCurve], threshold: float, report: RunReport):
    teq = {}
    for label, curve in curves.items():
        try:
            teq[label] = analysis.equilibration_time(curve, threshold)
        except analysis.HorizonExceeded as exc:
            teq[label] = None
            report.warnings.append(f"{label}: {exc}")
    report.equilibration_times = {"threshold": threshold, **teq}
    labels = list(curves)
    for a, b in itertools.combinations(labels, 2):
        report.crossings[f"{a}-{b}"] = analysis.crossing_times(curves[a], curves[b])
    report.results["D0"] = {label: float(c.D[0]) for label, c in curves.items()}
    return teq


def cmd_mpemba(cfg: ExperimentConfig, out: Path, strict: bool = False) -> RunReport:
    report = RunReport("mpemba", cfg.to_dict())
    setup = _setup(cfg, report)
    preps = _preparations_for_mpemba(cfg, setup, strict, report)
    if len({b.temperature for b in cfg.bath_list}) == 1:
        reference = generator.gibbs_state(setup.system, cfg.bath_list[0].temperature)
        report.results["reference"] = "Gibbs state"
    else:
        reference = generator.full_steady_state(setup.full)
        report.results["reference"] = "nonequilibrium steady state of the full generator"
    times = _time_grid(cfg, np.real(setup.spectrum.slowest), report)
    curves = {
        label: analysis.distance_curve(analysis.propagate(setup.full, rho, times, layout=setup.layout), reference, label)
        for label, rho in preps.items()
    }
    teq = _curve_summary(curves, cfg.threshold, report)
    if teq.get("M") is not None and teq.get("G"):
        report.results["t_eq_ratio_M_over_G"] = teq["M"] / teq["G"]
    report.results["D_M0_exceeds_D_G0"] = bool(curves["M"].D[0] > curves["G"].D[0])
    report.results["D_M0_exceeds_D_E0"] = bool(curves["M"].D[0] > curves["E"].D[0])
    data = np.column_stack([times] + [c.D for c in curves.values()])
    cols = ["nu_t"] + [f"D_{label}" for label in curves]
    path = textio.write_csv(out / "distances.csv", cols, data, _meta(cfg, setup, "mpemba"))
    report.outputs.append(str(path))
    return report


def _classical_oracle(gen: classical.ClassicalGenerator, p0, times) -> np.ndarray:
    A = np.zeros((3, 3))
    A[:2, :2] = gen.L
    A[:2, 2] = gen.d
    U, _ = analysis.propagation_matrices(A, times)
    return (U @ np.append(p0, 1.0))[:, :2].real


def cmd_classical(cfg: ExperimentConfig, out: Path, strict: bool = False) -> RunReport:
    report = RunReport("classical", cfg.to_dict())
    bath = cfg.bath
    gen = classical.ClassicalGenerator.from_bath(cfg.nu, cfg.classical_delta, bath)
    lam1, lam2 = classical.classical_eigenvalues(gen)
    p_inf = classical.classical_equilibrium(gen)
    bounds = classical.classical_mpemba_bounds(gen, level=2)
    report.rates = {"k21": gen.k21, "k31": gen.k31, "k12": gen.k12, "k13": gen.k13}
    report.spectrum = {"lambda_1": lam1, "lambda_2": lam2, "ratio": lam2 / lam1}
    report.results["equilibrium"] = p_inf
    report.results["c22_bounds"] = {
        "interval": [bounds.lower, bounds.upper],
        "lower_active": bounds.lower_active,
        "upper_active": bounds.upper_active,
        "empty": bounds.empty,
    }
    if bounds.empty:
        report.warnings.append("no classical Mpemba state exists for these parameters")
    if cfg.c22 not in bounds:
        raise mpemba.PhysicalityError(
            f"c22 = {cfg.c22:g} is outside the admissible interval [{bounds.lower:.6g}, {bounds.upper:.6g}]"
        )
    preps = {"M": classical.classical_mpemba_state(gen, cfg.c22), "E": np.array([1 / 3, 1 / 3]), "G": np.zeros(2)}
    report.results["c23"] = float(classical.classical_coefficients(gen, preps["M"])[1, 1])
    stop = cfg.grid_stop or 10 / abs(lam1)
    times = analysis.log_time_grid(stop, start=min(cfg.grid_start, stop / 10), per_decade=cfg.per_decade)
    ref = classical.populations_to_density(p_inf)
    quantum = model.v_model_rates(cfg.nu, bath)
    meta = {
        "command": "classical",
        "model": "classical",
        "k": quantum.k,
        "phi": quantum.phi,
        "k21": gen.k21,
        "k31": gen.k31,
        "lambda_1": lam1,
        "lambda_2": lam2,
        "lambda_3": "none (two-mode classical dynamics)",
        "units": "energies in nu, time as nu*t",
    }
    curves, pops = {}, {}
    for label, p0 in preps.items():
        coeffs = classical.classical_coefficients(gen, p0)
        report.coefficients[label] = coeffs
        analytic = classical.classical_trajectory(gen, coeffs, times)
        oracle = _classical_oracle(gen, p0, times)
        pops[label] = oracle
        zeros = np.zeros(len(times))
        err = np.abs(analytic - oracle)
        data = np.column_stack([times, analytic, oracle, zeros, zeros, err])
        path = textio.write_csv(out / f"trajectory_{label}.csv", CLASSICAL_COLUMNS, data, meta)
        report.outputs.append(str(path))
        curves[label] = analysis.distance_curve(
            analysis.Trajectory(times, classical.populations_to_density(oracle), "oracle-classical"), ref, label
        )
    _curve_summary(curves, cfg.threshold, report)
    report.results["max_population_gap_M_E"] = float(np.max(np.abs(pops["M"] - pops["E"])))
    data = np.column_stack([times] + [c.D for c in curves.values()])
    path = textio.write_csv(out / "distances.csv", ["nu_t"] + [f"D_{k}" for k in curves], data, meta)
    report.outputs.append(str(path))
    return report


def sweep_point(args) -> tuple:
    """One sweep row; module-level so worker processes can import it."""
    nu, delta, temperature, gamma, omega_c, kind = args
    bath = model.BathSpec(temperature=temperature, gamma=gamma, omega_c=omega_c)
    rates = model.lambda_model_params(nu, bath) if kind == "lambda" else model.v_model_rates(nu, bath)
    gen = generator.reduced_from_rates(rates, delta, nu=nu)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", model.ValidityWarning)
        spec = lepe.lepe_spectrum(gen)
    exact = float(np.real(lepe.exact_eigenvalues(gen.L)[0]))
    approx = float(np.real(spec.slowest))
    ts = closedform.timescales(spec)
    return (delta, temperature, gamma, rates.k, rates.phi, exact, approx, abs(approx - exact) / abs(exact),
            ts.acceleration, float(spec.all_valid))


def cmd_sweep(cfg: ExperimentConfig, out: Path, strict: bool = False, threads: int = 1) -> RunReport:
    report = RunReport("sweep", cfg.to_dict())
    if cfg.model in ("multibath", "classical"):
        raise ConfigError(f"[model] kind: sweeps support v and lambda models, got {cfg.model!r}")
    points = [
        (cfg.nu, d, t, g, cfg.omega_c, cfg.model)
        for d, t, g in itertools.product(cfg.sweep_deltas, cfg.sweep_temperatures, cfg.sweep_gammas)
    ]
    if threads > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(sweep_point, points, chunksize=max(1, len(points) // (4 * threads))))
    else:
        rows = [sweep_point(p) for p in points]
    data = np.array(rows, dtype=float).reshape(-1, len(SWEEP_COLUMNS))
    slopes = {}
    for t, g in itertools.product(cfg.sweep_temperatures, cfg.sweep_gammas):
        sel = (data[:, 1] == t) & (data[:, 2] == g)
        if np.unique(data[sel, 0]).size >= 2:
            slope = np.polyfit(np.log(data[sel, 0]), np.log(np.abs(data[sel, 5])), 1)[0]
            slopes[f"T={t:g},gamma={g:g}"] = float(slope)
    report.results["slope_log_lambda1_vs_log_delta"] = slopes
    report.results["points"] = len(rows)
    if np.any(data[:, 9] == 0):
        report.validity_breach = True
        report.warnings.append(f"{int(np.sum(data[:, 9] == 0))} sweep points lie outside the perturbative regime")
    meta = {
        "command": "sweep",
        "model": cfg.model,
        "k": "per-row column k",
        "phi": "per-row column phi",
        "lambda_1": "per-row columns lambda1_exact, lambda1_lepe",
        "lambda_2": "not swept",
        "lambda_3": "not swept",
        "units": "energies in nu, time as nu*t",
    }
    path = textio.write_csv(out / "sweep.csv", SWEEP_COLUMNS, data, meta)
    report.outputs.append(str(path))
    return report


def cmd_validate(cfg: ExperimentConfig, out: Path | None = None, strict: bool = False) -> RunReport:
    report = RunReport("validate", cfg.to_dict())
    vcfg = ValidationConfig(nu=cfg.nu, temperature=cfg.temperature, gamma=cfg.gamma, delta=cfg.delta)
    results = run_battery(vcfg)
    print(format_results(results))
    report.results["checks"] = {r.name: {"status": r.status, "detail": r.detail} for r in results}
    return report


COMMANDS = {
    "simulate": cmd_simulate,
    "mpemba": cmd_mpemba,
    "classical": cmd_classical,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI configuration file (defaults: canonical parameters)")
    common.add_argument("--out", metavar="DIR", default="out", help="output directory (default: ./out)")
    common.add_argument("--strict", action="store_true", help="promote validity-regime warnings to exit code 3")
    common.add_argument("--threads", metavar="N", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--seed", type=int, default=None, help="reserved; no stochastic components")
    parser = argparse.ArgumentParser(prog="qmpemba", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "closed-form vs oracle trajectory",
        "mpemba": "distance-to-equilibrium curves for Mpemba, near-Mpemba, ground and mixed preparations",
        "classical": "fully secular three-level control",
        "sweep": "slow eigenvalue and acceleration over a (delta, T, gamma) grid",
        "validate": "run the invariant battery",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        fn = COMMANDS[args.command]
        kwargs = {"threads": args.threads} if args.command == "sweep" else {}
        report = fn(cfg, out, strict=args.strict, **kwargs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except mpemba.PhysicalityError as exc:
        print(f"physicality error: {exc}", file=sys.stderr)
        return EXIT_PHYSICALITY
    report.warnings = list(cfg.warnings) + report.warnings
    if args.strict and (report.validity_breach or cfg.warnings):
        report.exit_code = EXIT_VALIDITY
    path = textio.write_json(out / "report.json", report.to_dict())
    report.outputs.append(str(path))
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.command != "validate":
        for p in report.outputs:
            print(p)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())

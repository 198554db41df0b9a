import json
import math

import numpy as np
import pytest

from qmpemba import cli
from qmpemba.generator import full_steady_state
from qmpemba.textio import read_csv, write_matrix

from conftest import K, PHI


def run(tmp_path, command, ini=None, *extra, name="out"):
    args = [command, "--out", str(tmp_path / name)]
    if ini is not None:
        path = tmp_path / f"{name}.ini"
        path.write_text(ini)
        args += ["--config", str(path)]
    code = cli.main(args + list(extra))
    report = tmp_path / name / "report.json"
    return code, (json.loads(report.read_text()) if report.exists() else None)


class TestSimulate:
    def test_default_reproduces_small_splitting_regime(self, tmp_path):
        code, report = run(tmp_path, "simulate")
        assert code == 0
        meta, header, data = read_csv(tmp_path / "out" / "trajectory.csv")
        assert header == list(cli.SIMULATE_COLUMNS)
        assert data[:, 6].max() < 1e-3 and data[:, 7].max() < 1e-3
        assert float(meta["k"]) == pytest.approx(K, rel=1e-15)
        assert float(meta["phi"]) == pytest.approx(PHI, rel=1e-15)
        assert {"lambda_1", "lambda_2", "lambda_3"} <= set(meta)
        assert report["results"]["oracle"] == "oracle-redfield"
        assert report["results"]["plateau"] == pytest.approx(0.18877033439907272, rel=1e-14)

    def test_byte_identical(self, tmp_path):
        run(tmp_path, "simulate", name="a")
        run(tmp_path, "simulate", name="b")
        assert (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()

    def test_large_splitting_flags_breach(self, tmp_path):
        code, report = run(tmp_path, "simulate", "[model]\ndelta = 0.05\n")
        assert code == 0 and report["validity_breach"]
        code, _ = run(tmp_path, "simulate", "[model]\ndelta = 0.05\n", "--strict", name="strict")
        assert code == 3

    def test_steady_preparation(self, tmp_path):
        code, _ = run(tmp_path, "simulate", "[preparation]\nkind = steady\n")
        assert code == 0
        _, _, data = read_csv(tmp_path / "out" / "trajectory.csv")
        assert data[:, 6:].max() < 1e-5

    def test_explicit_matrix(self, tmp_path, canonical_full):
        write_matrix(tmp_path / "state.txt", np.eye(3) / 3)
        code, report = run(tmp_path, "simulate", "[preparation]\nkind = explicit-matrix\npath = state.txt\n")
        assert code == 0
        _, _, data = read_csv(tmp_path / "out" / "trajectory.csv")
        assert data[0, 3] == pytest.approx(1 / 3, rel=1e-14)

    def test_unphysical_matrix(self, tmp_path):
        write_matrix(tmp_path / "state.txt", np.diag([1.2, -0.1, -0.1]))
        code, _ = run(tmp_path, "simulate", "[preparation]\nkind = explicit-matrix\npath = state.txt\n")
        assert code == 2

    def test_config_error(self, tmp_path):
        code, report = run(tmp_path, "simulate", "[model]\nkind = nonsense\n")
        assert code == 1 and report is None

    def test_lambda_model(self, tmp_path):
        code, report = run(tmp_path, "simulate", "[model]\nkind = lambda\n")
        assert code == 0
        assert report["rates"]["k"] == pytest.approx(0.015414940825367983, rel=1e-14)
        assert report["results"]["max_abs_err_P"] < 1e-3


class TestMpemba:
    def test_canonical(self, tmp_path):
        code, report = run(tmp_path, "mpemba")
        assert code == 0
        _, header, data = read_csv(tmp_path / "out" / "distances.csv")
        assert header == ["nu_t", "D_M", "D_N", "D_G", "D_E"]
        assert report["results"]["t_eq_ratio_M_over_G"] < 1e-4
        assert report["results"]["D_M0_exceeds_D_E0"]
        assert report["crossings"]["M-E"]

    def test_strict_rejects_non_positive_default(self, tmp_path):
        code, _ = run(tmp_path, "mpemba", None, "--strict")
        assert code == 2

    def test_zero_coefficient_stays_near_equilibrium(self, tmp_path):
        code, _ = run(tmp_path, "mpemba", "[preparation]\nc2 = 0\n")
        assert code == 0
        _, _, data = read_csv(tmp_path / "out" / "distances.csv")
        assert data[:, 1].max() < 1e-3

    def test_out_of_bounds(self, tmp_path, capsys):
        code, _ = run(tmp_path, "mpemba", "[preparation]\nc2 = 0.3\n")
        assert code == 2
        err = capsys.readouterr().err
        assert "0.22593" in err

    def test_near_mpemba_lingers(self, tmp_path):
        run(tmp_path, "mpemba", "[preparation]\nc2 = -0.12\n")
        _, _, data = read_csv(tmp_path / "out" / "distances.csv")
        t, DM, DN = data[:, 0], data[:, 1], data[:, 2]
        late = (t > 1e4) & (t < 1e6)
        # Under the full oracle the Mpemba curve keeps an O(delta) slow residue, far below the perturbed one.
        assert np.all(DN[late] > 10 * DM[late])
        slope = np.polyfit(t[late], np.log(DN[late]), 1)[0]
        assert slope == pytest.approx(-PHI * 1e-8 / (K * (K + PHI)), rel=0.05)


class TestClassical:
    def test_secular_point(self, tmp_path):
        code, report = run(tmp_path, "classical")
        assert code == 0
        assert round(report["results"]["c23"], 4) == -0.2644
        assert report["crossings"]["M-E"]
        teq = report["equilibration_times"]
        assert 1 < teq["E"] / teq["M"] < 10
        for label in "MEG":
            _, header, data = read_csv(tmp_path / "out" / f"trajectory_{label}.csv")
            assert header == list(cli.CLASSICAL_COLUMNS)
            assert data[:, 7:].max() < 1e-12
            assert np.all(data[:, 5:7] == 0)

    def test_out_of_interval(self, tmp_path):
        code, _ = run(tmp_path, "classical", "[classical]\nc22 = -0.5\n")
        assert code == 2

    def test_equilibrium_start_is_flat(self, tmp_path):
        code, _ = run(tmp_path, "classical", "[classical]\nc22 = 0\n")
        assert code == 0
        _, _, data = read_csv(tmp_path / "out" / "distances.csv")
        assert data[:, 1].max() < 1e-15


class TestSweep:
    def test_slope(self, tmp_path):
        code, report = run(tmp_path, "sweep", "[sweep]\ndeltas = logspace(-5, -3, 9)\n")
        assert code == 0
        (slope,) = report["results"]["slope_log_lambda1_vs_log_delta"].values()
        assert slope == pytest.approx(2.0, abs=0.02)

    def test_single_point(self, tmp_path):
        code, _ = run(tmp_path, "sweep")
        _, header, data = read_csv(tmp_path / "out" / "sweep.csv")
        assert code == 0 and data.shape == (1, len(header))
        acc = data[0, header.index("acceleration")]
        assert acc == pytest.approx(K * (K + PHI) ** 2 / (PHI * 1e-8), rel=1e-4)

    def test_parallel_matches_serial(self, tmp_path):
        ini = "[sweep]\ndeltas = logspace(-5, -3, 6)\ntemperatures = 1, 2\n"
        run(tmp_path, "sweep", ini, name="serial")
        run(tmp_path, "sweep", ini, "--threads", "2", name="parallel")
        assert (tmp_path / "serial" / "sweep.csv").read_bytes() == (tmp_path / "parallel" / "sweep.csv").read_bytes()

    def test_oversize_grid(self, tmp_path):
        ini = "[sweep]\ndeltas = linspace(1e-5, 1e-3, 1001)\ntemperatures = linspace(1, 2, 1001)\n"
        code, _ = run(tmp_path, "sweep", ini)
        assert code == 1


class TestValidate:
    def test_all_pass(self, tmp_path, capsys):
        code, report = run(tmp_path, "validate")
        assert code == 0
        statuses = {v["status"] for v in report["results"]["checks"].values()}
        assert statuses == {"pass"}
        assert "PASS" in capsys.readouterr().out


def test_threads_must_be_positive(tmp_path):
    assert cli.main(["sweep", "--out", str(tmp_path), "--threads", "0"]) == 1


def test_non_positive_explicit_matrix_is_strict_only(tmp_path):
    rho = np.diag([0.5, 0.5 + 1e-3, -1e-3])
    write_matrix(tmp_path / "state.txt", rho)
    ini = "[preparation]\nkind = explicit-matrix\npath = state.txt\n"
    assert run(tmp_path, "simulate", ini)[0] == 0
    assert run(tmp_path, "simulate", ini, "--strict", name="strict")[0] == 2

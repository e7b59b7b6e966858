import json
import subprocess
import sys

import numpy as np
import pytest

from zigzag_pca import finite_solver as fs
from zigzag_pca.cli import main
from zigzag_pca.core_types import save_model
from conftest import three_letter_tensor


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    root = tmp_path_factory.mktemp("models")
    two = three_letter_tensor().restrict([1, 2])
    paths = {}

    paths["two_letter"] = root / "two_letter.json"
    save_model(paths["two_letter"], two.alphabet, two, "N")

    paths["two_letter_cycle"] = root / "two_letter_cycle.json"
    save_model(paths["two_letter_cycle"], two.alphabet, two, {"cycle": 3})

    rnd = fs.random_positive_tensor(2, 41)
    paths["random"] = root / "random.json"
    save_model(paths["random"], rnd.alphabet, rnd, "N")

    paths["gauss"] = root / "gauss.json"
    save_model(paths["gauss"], {"points": 129},
               {"family": "gaussian", "m": 3, "sigma": 1}, "N")

    paths["gauss_bad"] = root / "gauss_bad.json"
    save_model(paths["gauss_bad"], {"points": 129},
               {"family": "gaussian", "m": 1.5, "sigma": 1}, "N")

    paths["beta"] = root / "beta.json"
    save_model(paths["beta"], {"points": 129},
               {"family": "beta", "alpha": 1, "beta": 1, "m": 1, "theta": 1}, "N")

    paths["tasep"] = root / "tasep.json"
    save_model(paths["tasep"], {"points": 9},
               {"family": "tasep", "r": 0.5, "v": 2.0, "p": 1.0, "spacing": 1.0}, "Z")

    paths["broken"] = root / "broken.json"
    paths["broken"].write_text('{"alphabet": [}\n')

    paths["root"] = root
    return paths


def run_main(*argv):
    return main([str(a) for a in argv])


class TestCheck:
    def test_two_letter_reports_weights(self, files, capsys):
        code = run_main("check", "--model", files["two_letter"])
        doc = json.loads(capsys.readouterr().out)
        assert code == 0
        assert doc["passed"]
        assert np.abs(np.array(doc["eta"]) - [1 / 3, 2 / 3]).max() < 1e-10
        assert doc["triple"] == [0, 0, 0]

    def test_random_tensor_fails_with_quartic_residual(self, files, capsys):
        code = run_main("check", "--model", files["random"])
        doc = json.loads(capsys.readouterr().out)
        assert code == 1
        quartic = [r for r in doc["reports"] if r["condition"] == "quartic-identity"][0]
        assert not quartic["passed"]
        assert quartic["residual"] > 1e-3

    def test_gaussian_passes(self, files, capsys):
        code = run_main("check", "--model", files["gauss"])
        doc = json.loads(capsys.readouterr().out)
        assert code == 0
        assert doc["grid"]["points"] == 129
        assert doc["phi"] == pytest.approx(0.3819660112501051, abs=1e-12)

    def test_domain_guard_is_input_error(self, files, capsys):
        code = run_main("check", "--model", files["gauss_bad"])
        err = capsys.readouterr().err
        assert code == 2
        assert "|m| > 2" in err

    def test_malformed_file_reports_position(self, files, capsys):
        code = run_main("check", "--model", files["broken"])
        err = capsys.readouterr().err
        assert code == 2
        assert "line 1" in err and "column" in err

    def test_missing_file(self, files, capsys):
        code = run_main("check", "--model", files["root"] / "nope.json")
        assert code == 2

    def test_beta_fails_stationarity_only(self, files, capsys):
        code = run_main("check", "--model", files["beta"])
        doc = json.loads(capsys.readouterr().out)
        assert code == 1
        by_name = {r["condition"]: r for r in doc["reports"]}
        assert by_name["factorization"]["passed"]
        assert by_name["commutation"]["passed"]
        assert not by_name["stationarity"]["passed"]


class TestSolveVerify:
    def test_two_letter_roundtrip(self, files, capsys, tmp_path):
        spec = tmp_path / "spec.json"
        assert run_main("solve", "--model", files["two_letter"], "--out", spec) == 0
        doc = json.loads(spec.read_text())
        assert np.abs(np.array(doc["d"], dtype=float)
                      - [[2 / 3, 1 / 3], [1 / 3, 2 / 3]]).max() < 1e-12
        assert np.abs(np.array(doc["u"], dtype=float)
                      - [[1 / 3, 2 / 3], [2 / 3, 1 / 3]]).max() < 1e-12
        assert np.abs(np.array(doc["rho0"], dtype=float) - 0.5).max() < 1e-12
        capsys.readouterr()
        assert run_main("verify", "--model", files["two_letter"], "--spec", spec,
                        "--kmax", 3) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["reports"][0]["condition"] == "push-forward-oracle"
        assert out["reports"][0]["residual"] < 1e-10

    def test_verify_reports_are_reproducible(self, files, capsys, tmp_path):
        spec = tmp_path / "spec.json"
        run_main("solve", "--model", files["two_letter"], "--out", spec)
        capsys.readouterr()
        run_main("verify", "--model", files["two_letter"], "--spec", spec, "--seed", 9)
        first = capsys.readouterr().out
        run_main("verify", "--model", files["two_letter"], "--spec", spec, "--seed", 9)
        second = capsys.readouterr().out
        assert first == second

    def test_cycle_roundtrip(self, files, capsys, tmp_path):
        spec = tmp_path / "cspec.json"
        assert run_main("solve", "--model", files["two_letter_cycle"], "--out", spec) == 0
        capsys.readouterr()
        assert run_main("verify", "--model", files["two_letter_cycle"], "--spec", spec) == 0
        out = json.loads(capsys.readouterr().out)
        names = [r["condition"] for r in out["reports"]]
        assert "cycle-push-forward-oracle" in names

    def test_tampered_spec_fails_with_location(self, files, capsys, tmp_path):
        spec = tmp_path / "spec.json"
        run_main("solve", "--model", files["two_letter"], "--out", spec)
        doc = json.loads(spec.read_text())
        doc["u"] = [doc["u"][1], doc["u"][0]]
        spec.write_text(json.dumps(doc))
        capsys.readouterr()
        code = run_main("verify", "--model", files["two_letter"], "--spec", spec)
        out = json.loads(capsys.readouterr().out)
        assert code == 1
        assert out["reports"][0]["witnesses"]["argmax"] is not None

    def test_gaussian_solve_has_closed_form_fields(self, files, capsys, tmp_path):
        spec = tmp_path / "gspec.json"
        assert run_main("solve", "--model", files["gauss"], "--out", spec) == 0
        doc = json.loads(spec.read_text())
        for key in ("l", "phi", "sigma_prime_sq", "stationary_std"):
            assert key in doc

    def test_gaussian_verify(self, files, capsys, tmp_path):
        spec = tmp_path / "gspec.json"
        run_main("solve", "--model", files["gauss"], "--out", spec)
        capsys.readouterr()
        code = run_main("verify", "--model", files["gauss"], "--spec", spec,
                        "--width", 20001, "--seed", 3)
        out = json.loads(capsys.readouterr().out)
        assert code == 0
        names = [r["condition"] for r in out["reports"]]
        assert "monte-carlo-stationarity" in names

    def test_beta_solve_cites_stationarity(self, files, capsys):
        code = run_main("solve", "--model", files["beta"], "--out", "/tmp/never.json")
        doc = json.loads(capsys.readouterr().out)
        assert code == 1
        assert "stationarity" in doc["failure"]


class TestSimulate:
    def test_zero_steps_echo(self, files, capsys, tmp_path):
        out = tmp_path / "echo"
        code = run_main("simulate", "--model", files["gauss"], "--steps", 0,
                        "--width", 50, "--seed", 1, "--out", out)
        assert code == 0
        lines = (tmp_path / "echo.csv").read_text().strip().split("\n")
        assert len(lines) == 1
        assert len(lines[0].split(",")) == 50

    def test_frozen_exclusion_diagram_constant(self, files, capsys, tmp_path):
        out = tmp_path / "tasep"
        code = run_main("simulate", "--model", files["tasep"], "--steps", 5,
                        "--width", 12, "--out", out)
        assert code == 0
        rows = [[float(v) for v in line.split(",")]
                for line in (tmp_path / "tasep.csv").read_text().strip().split("\n")]
        for t, row in enumerate(rows):
            assert row == [float(i) for i in range(12 - t)]

    def test_gaussian_summary_and_binary(self, files, capsys, tmp_path):
        out = tmp_path / "g"
        code = run_main("simulate", "--model", files["gauss"], "--steps", 3,
                        "--width", 500, "--seed", 4, "--out", out)
        assert code == 0
        summary = json.loads((tmp_path / "g.summary.json").read_text())
        assert summary["final_width"] == 497
        assert "final_zigzag" in summary
        from zigzag_pca.simulator import read_diagram_binary
        diag = read_diagram_binary(tmp_path / "g.bin")
        assert diag.steps == 3 and diag.width == 500

    def test_gaussian_zigzag_statistics_in_summary(self, files, capsys, tmp_path):
        out = tmp_path / "stat"
        code = run_main("simulate", "--model", files["gauss"], "--steps", 3,
                        "--width", 20_000, "--seed", 12, "--out", out)
        assert code == 0
        summary = json.loads((tmp_path / "stat.summary.json").read_text())
        zig = summary["final_zigzag"]
        phi = 0.3819660112501051
        assert abs(zig["autocorr"][0] - phi) < 3 * zig["se_autocorr"][0]

    def test_deterministic_per_seed(self, files, capsys, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run_main("simulate", "--model", files["gauss"], "--steps", 2,
                 "--width", 64, "--seed", 5, "--out", a)
        run_main("simulate", "--model", files["gauss"], "--steps", 2,
                 "--width", 64, "--seed", 5, "--out", b)
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()


class TestReport:
    def test_pretty_print(self, files, capsys, tmp_path):
        rep = tmp_path / "rep.json"
        run_main("check", "--model", files["two_letter"], "--out", rep)
        capsys.readouterr()
        assert run_main("report", "--in", rep) == 0
        out = capsys.readouterr().out
        assert "overall: pass" in out
        assert "quartic-identity" in out


def test_console_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "zigzag_pca.cli", "check",
                           "--model", str(files["two_letter"])],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["passed"]

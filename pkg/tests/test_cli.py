import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from scipy import integrate

from ga0clutter import cli, ga0, raster_io


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def config_of(err):
    line = next(l for l in err.splitlines() if l.startswith("# config: "))
    return json.loads(line[len("# config: "):])


class TestCorrmap:
    def test_value(self, capsys):
        code, out, err = run(["corrmap", "--alpha=-1.5", "--looks", "1", "--rho", "0.5"], capsys)
        assert code == 0
        assert float(out) == pytest.approx(0.629, abs=0.01)
        assert len(out.strip().split(".")[1]) == 6
        assert config_of(err)["rho"] == 0.5

    def test_zero(self, capsys):
        _, out, _ = run(["corrmap", "--alpha=-3", "--rho", "0"], capsys)
        assert out.strip() in ("0.000000", "-0.000000")

    def test_infeasible(self, capsys):
        code, _, err = run(["corrmap", "--alpha=-1.5", "--looks", "1", "--rho=-0.9"], capsys)
        assert code == 2
        assert "feasible range" in err


class TestUsage:
    @pytest.mark.parametrize("argv", [[], ["corrmap", "--alpha=-3"], ["corrmap", "--alpha=-3",
                                      "--rho", "0", "--unknown", "1"], ["bogus"],
                                      ["density", "--alpha=-3"]])
    def test_exit_64(self, argv, capsys):
        with pytest.raises(SystemExit) as exc:
            code = cli.main(argv)
            raise SystemExit(code)
        assert exc.value.code == 64

    def test_bad_model(self, tmp_path, capsys):
        code, _, err = run(["simulate", "--alpha=-3", "--size", "8", "--model", "param:a=0.4",
                            "--out", str(tmp_path / "x.csv")], capsys)
        assert code == 64

    def test_alpha_without_variance(self, tmp_path, capsys):
        code, _, _ = run(["simulate", "--alpha=-0.5", "--size", "8", "--model", "delta",
                          "--out", str(tmp_path / "x.csv")], capsys)
        assert code == 64


class TestSimulate:
    def test_csv_and_audit_outputs(self, tmp_path, capsys):
        out, tau, psi = tmp_path / "f.csv", tmp_path / "t.csv", tmp_path / "p.csv"
        code, _, err = run(["simulate", "--alpha=-3", "--size", "32", "--model",
                            "matrix:" + str(self.write_matrix(tmp_path)), "--seed", "4",
                            "--out", str(out), "--emit-tau", str(tau), "--emit-psi", str(psi)],
                           capsys)
        assert code == 0
        field = raster_io.read_csv_raster(out)
        assert field.shape == (32, 32) and np.all(field > 0)
        assert raster_io.read_csv_raster(tau)[0, 0] == 1.0
        assert np.sum(raster_io.read_csv_raster(psi) ** 2) == pytest.approx(1.0, abs=1e-9)
        assert config_of(err)["seed"] == 4

    @staticmethod
    def write_matrix(tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("# lag matrix\n1,0.2\n0.2,0.05\n")
        return path

    def test_invalid_structure_exit_3(self, tmp_path, capsys):
        code, _, err = run(["simulate", "--alpha=-1.5", "--size", "64", "--model",
                            "param:a=0.4,L=2", "--out", str(tmp_path / "x.csv")], capsys)
        assert code == 3
        assert "--spectrum clip" in err

    def test_infeasible_exit_2(self, tmp_path, capsys):
        path = tmp_path / "m.csv"
        path.write_text("1,-0.8\n0,0\n")
        code, _, err = run(["simulate", "--alpha=-1.5", "--size", "16", "--model",
                            f"matrix:{path}", "--out", str(tmp_path / "x.csv")], capsys)
        assert code == 2
        assert "(0,1)" in err

    def test_pgm16_with_sidecar(self, tmp_path, capsys):
        out = tmp_path / "f.pgm"
        code, _, _ = run(["simulate", "--alpha=-3", "--size", "16", "--model", "delta",
                          "--out", str(out), "--format", "pgm16", "--pgm-min", "0",
                          "--pgm-max", "2"], capsys)
        assert code == 0
        img = raster_io.read_pgm16(out)
        assert img.shape == (16, 16)
        assert "min=0.0" in (tmp_path / "f.pgm.txt").read_text()

    def test_missing_matrix_file(self, tmp_path, capsys):
        code, _, _ = run(["simulate", "--alpha=-3", "--size", "8", "--model",
                          "matrix:" + str(tmp_path / "none.csv"), "--out", str(tmp_path / "x")],
                         capsys)
        assert code == 66


class TestEstimate:
    def test_constant(self, tmp_path, capsys):
        raster_io.write_csv_raster(tmp_path / "c.csv", np.ones((32, 32)))
        code, _, err = run(["estimate", "--input", str(tmp_path / "c.csv"), "--window", "4"], capsys)
        assert code == 2
        assert "constant" in err

    def test_missing_file(self, tmp_path, capsys):
        code, _, _ = run(["estimate", "--input", str(tmp_path / "no.csv"), "--window", "4"], capsys)
        assert code == 66

    def test_fit_moments(self, tmp_path, capsys):
        z = ga0.sample_iid(ga0.GA0Params(-3.0, 1.0, 1), 10**6, 12).reshape(1000, 1000)
        raster_io.write_csv_raster(tmp_path / "z.csv", z)
        out = tmp_path / "corr.csv"
        code, stdout, _ = run(["estimate", "--input", str(tmp_path / "z.csv"), "--window", "2",
                               "--output", str(out), "--fit-moments"], capsys)
        assert code == 0
        fields = dict(kv.split("=") for kv in stdout.split())
        assert float(fields["alpha"]) == pytest.approx(-3.0, abs=0.15)
        assert float(fields["gamma"]) == pytest.approx(1.0, abs=0.05)
        corr = np.loadtxt(out, delimiter=",", comments="#")
        assert corr.shape == (2, 2) and corr[0, 0] == 1.0


class TestDensity:
    def table(self, argv, capsys):
        code, out, _ = run(["density"] + argv, capsys)
        assert code == 0
        return np.loadtxt(io.StringIO(out), delimiter=",", skiprows=1)

    def test_integrates_to_one(self, capsys):
        t = self.table(["--alpha=-3", "--looks", "1", "--gamma", "1", "--zmax", "60",
                        "--points", "200001"], capsys)
        assert t[0, 0] == 0.0 and t[0, 1] == 0.0
        assert integrate.trapezoid(t[:, 1], t[:, 0]) == pytest.approx(1.0, abs=1e-4)

    def test_normalized_mean(self, capsys):
        t = self.table(["--alpha=-3", "--looks", "3", "--normalized", "--zmax", "80",
                        "--points", "200001"], capsys)
        assert integrate.trapezoid(t[:, 0] * t[:, 1], t[:, 0]) == pytest.approx(1.0, abs=1e-3)

    def test_log(self, capsys):
        t = self.table(["--alpha=-3", "--gamma", "1", "--zmax", "2", "--points", "5", "--log"],
                       capsys)
        assert t[0, 1] == -math.inf
        assert t[2, 1] == pytest.approx(math.log(ga0.pdf(ga0.GA0Params(-3.0), 1.0)), rel=1e-14)


class TestTable:
    def test_zero_row(self, capsys):
        code, out, _ = run(["table", "--rhos", "0", "--alphas=-3,-9", "--looks", "1,2"], capsys)
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 2
        assert lines[1].split(",")[1:] == ["0.000"] * 4

    def test_blank_cells(self, capsys):
        _, out, _ = run(["table", "--rhos=-0.9,0.5", "--alphas=-1.5", "--looks", "1"], capsys)
        rows = [l.split(",") for l in out.strip().splitlines()[1:]]
        assert rows[0][1] == ""
        assert float(rows[1][1]) == pytest.approx(0.629, abs=0.01)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ga0clutter", "corrmap", "--alpha=-3", "--rho", "0.3"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert float(res.stdout) == pytest.approx(0.328, abs=0.01)

import json
import os

import pytest
import mpmath
from mpmath import mp, mpf, mpc

from stokeswb import cli, gevrey, summation
from stokeswb.gevrey import GevreySeries


def run_cli(args):
    return cli.main([str(a) for a in args])


def gamma_spec(tmp_path, lam="1"):
    spec = {
        "P": [[f"-{lam}", "0"], ["1", "0"]],
        "Q": [["0", "0"], ["1", "0"]],
        "basepoint": [lam, "0"],
        "branch_paths": [[[lam, "0"]]],
        "f_offset": ["1", "0"],
        "omega_P": [["1", "0"]],
        "omega_Q": [["0", "0"], ["1", "0"]],
    }
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec))
    return path


class TestAnalyze:
    def test_gamma_report(self, tmp_path):
        spec = gamma_spec(tmp_path)
        out = tmp_path / "report.json"
        assert run_cli(["analyze", spec, "--out", out]) == 0
        report = json.loads(out.read_text())
        nongen = [mpf(a) for a in report["nongeneric_directions"]]
        assert len(nongen) == 2
        assert abs(nongen[0] - mp.pi / 2) < mpf("1e-12")
        assert abs(nongen[1] - 3 * mp.pi / 2) < mpf("1e-12")
        assert abs(mpf(report["support_radius"]) - 2 * mp.pi) < mpf("1e-12")

    def test_rank_zero_all_generic(self, tmp_path):
        spec = tmp_path / "xdx.json"
        spec.write_text(json.dumps({"P": [["0", "0"], ["1", "0"]],
                                    "Q": [["1", "0"]],
                                    "basepoint": ["0", "0"],
                                    "branch_paths": [[["0", "0"]]]}))
        out = tmp_path / "r.json"
        assert run_cli(["analyze", spec, "--out", out]) == 0
        report = json.loads(out.read_text())
        assert report["lattice"]["rank"] == 0
        assert report["nongeneric_directions"] == []

    def test_not_one_form_exit_2(self, tmp_path):
        spec = tmp_path / "bad.json"
        spec.write_text(json.dumps({"P": [["1", "0"]], "Q": [["1", "0"]]}))
        assert run_cli(["analyze", spec]) == 2

    def test_malformed_json_exit_1(self, tmp_path):
        spec = tmp_path / "broken.json"
        spec.write_text("{not json")
        assert run_cli(["analyze", spec]) == 1

    def test_support_failure_exit_3(self, tmp_path):
        # residues 1 and 1 + 1e-30: marginal near-relation, conservative
        # basis, support property fails downstream
        import warnings
        spec = tmp_path / "degenerate.json"
        spec.write_text(json.dumps({
            "P": [["-1", "0"], ["2.000000000000000000000000000001", "0"]],
            "Q": [["0", "0"], ["-1", "0"], ["1", "0"]],
            "basepoint": ["0.5", "0.5"],
        }))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            code = run_cli(["analyze", spec])
        assert code == 3


class TestSum:
    def euler_file(self, tmp_path, order=40):
        s = GevreySeries(tuple(mpmath.factorial(n) * mpc(-1) ** n
                               for n in range(order + 1)))
        path = tmp_path / "euler.json"
        path.write_text(json.dumps(s.to_json()))
        return path, s

    def test_euler_csv_matches_oracle(self, tmp_path):
        series_path, s = self.euler_file(tmp_path)
        out = tmp_path / "samples.csv"
        code = run_cli(["sum", series_path, "--direction", "0",
                        "--grid", "0.2:0.2:1:1", "--out", out])
        assert code == 0
        rows = out.read_text().splitlines()
        assert rows[0] == "z_re,z_im,f_re,f_im"
        z_re, z_im, f_re, f_im = [mpf(v) for v in rows[1].split(",")]
        with mp.workprec(mp.prec * 2):
            oracle = mpmath.quad(lambda t: mpmath.exp(-t / mpf("0.2")) / (1 + t),
                                 [0, mpmath.inf]) / mpf("0.2")
        assert abs(mpc(f_re, f_im) - oracle) < mpf("1e-9")
        sidecar = json.loads(open(str(out) + ".json").read())
        assert "source_hash" in sidecar

    def test_polynomial_identity(self, tmp_path):
        s = GevreySeries((mpc(1), mpc(1), mpc(1)) + (mpc(0),) * 6)
        path = tmp_path / "poly.json"
        path.write_text(json.dumps(s.to_json()))
        out = tmp_path / "poly.csv"
        assert run_cli(["sum", path, "--direction", "0",
                        "--grid", "0.1:0.1:1:1", "--out", out]) == 0
        row = out.read_text().splitlines()[1].split(",")
        assert abs(mpf(row[2]) - mpf("1.11")) < mpf("1e-9")

    def test_singular_direction_exit_4(self, tmp_path):
        series_path, _ = self.euler_file(tmp_path)
        code = run_cli(["sum", series_path, "--direction", str(mp.pi),
                        "--grid", "0.2:0.2:1:1", "--out", tmp_path / "x.csv"])
        assert code == 4

    def test_deterministic_output(self, tmp_path):
        series_path, _ = self.euler_file(tmp_path, order=25)
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli(["sum", series_path, "--direction", "0",
                 "--grid", "0.1:0.3:2:2", "--out", out1])
        run_cli(["sum", series_path, "--direction", "0",
                 "--grid", "0.1:0.3:2:2", "--out", out2])
        assert out1.read_bytes() == out2.read_bytes()


class TestFormalXi:
    def test_gamma_series(self, tmp_path):
        spec = gamma_spec(tmp_path)
        out = tmp_path / "fx.json"
        assert run_cli(["formal-xi", spec, "--order", "6", "--out", out]) == 0
        data = json.loads(out.read_text())
        series = GevreySeries.from_json(data[0])
        assert abs(series.coeffs[0] - 1) < mpf("1e-40")
        assert abs(series.coeffs[1] + mpf(1) / 12) < mpf("1e-40")

    def test_round_trip_is_bit_exact(self, tmp_path):
        spec = gamma_spec(tmp_path)
        out = tmp_path / "fx.json"
        run_cli(["formal-xi", spec, "--order", "5", "--out", out])
        data = json.loads(out.read_text())
        series = GevreySeries.from_json(data[0])
        assert series.to_json() == data[0]


class TestThimble:
    def test_trace_csv(self, tmp_path):
        spec = gamma_spec(tmp_path)
        out = tmp_path / "th.csv"
        assert run_cli(["thimble", spec, "--direction", "0", "--out", out]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "t,x_re,x_im,f_re,f_im"
        header = json.loads(open(str(out) + ".json").read())
        assert header["forward_terminal"]["in_boundary"]

    def test_deterministic(self, tmp_path):
        spec = gamma_spec(tmp_path)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli(["thimble", spec, "--direction", "2.0", "--out", a])
        run_cli(["thimble", spec, "--direction", "2.0", "--out", b])
        assert a.read_bytes() == b.read_bytes()


class TestCheck:
    def test_all_pass(self, capsys):
        assert run_cli(["check"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("1..")
        assert "not ok" not in out

    def test_filter(self, capsys):
        assert run_cli(["check", "--filter", "lattice"]) == 0
        out = capsys.readouterr().out
        for line in out.splitlines()[1:]:
            assert "lattice." in line

    def test_injected_corruption_exit_5(self, capsys):
        assert run_cli(["check", "--inject-corruption"]) == 5
        out = capsys.readouterr().out
        assert "not ok" in out
        assert "gevrey.ring_axioms" in out


class TestPrecisionOverride:
    def test_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv("STOKES_WB_PRECISION", "128")
        spec = gamma_spec(tmp_path)
        out = tmp_path / "report.json"
        assert run_cli(["analyze", spec, "--out", out]) == 0
        monkeypatch.setenv("STOKES_WB_PRECISION", "32")
        assert run_cli(["analyze", spec, "--out", out]) == 1

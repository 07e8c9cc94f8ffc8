import json
import os

import pytest

from mixwave.cli import ConfigError, main, read_config_file, resolve_config


def run_cli(args):
    return main(args)


class TestConfigResolution:
    def test_minimal_flags(self):
        cfg = resolve_config(["exponents", "--a", "1", "--b", "1",
                              "--sigma", "0.5", "--n", "1", "--p", "1.5"])
        assert cfg["command"] == "exponents"
        assert cfg["sigma"] == 0.5
        assert cfg["p"] == 1.5

    def test_config_file_with_flag_override(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# scenario\ncommand = exponents\na = 1\nb = 1\nsigma = 0.5\nn = 1\np = 1.5\n")
        cfg = resolve_config(["--config", str(path), "--p", "3.0"])
        assert cfg["p"] == 3.0
        assert cfg["a"] == 1.0

    def test_unknown_key_named(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("command = exponents\nwhatever = 3\n")
        with pytest.raises(ConfigError, match="unknown key 'whatever'"):
            read_config_file(str(path))

    def test_missing_b_named(self):
        with pytest.raises(ConfigError, match="missing required key 'b'"):
            resolve_config(["exponents", "--a", "1", "--sigma", "0.5", "--n", "1"])

    def test_sigma_one_excluded(self):
        with pytest.raises(ConfigError, match="sigma excluded"):
            resolve_config(["exponents", "--a", "1", "--b", "1",
                            "--sigma", "1", "--n", "1"])

    def test_out_of_range_named(self):
        with pytest.raises(ConfigError, match="out-of-range key 'threshold'"):
            resolve_config(["solve", "--a", "1", "--b", "1", "--sigma", "0.5",
                            "--n", "1", "--threshold", "10"])


class TestCommands:
    def test_exponents_minimal(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = run_cli(["exponents", "--a", "1", "--b", "1", "--sigma", "0.5",
                        "--n", "1", "--p", "1.5", "--out", str(out)])
        assert code == 0
        printed = capsys.readouterr().out
        assert "p_crit=2.0" in printed
        assert "lifespan_exp=-1.0" in printed
        payload = json.loads((out / "exponents.json").read_text())
        assert payload["exponents"][0]["p_crit"] == 2.0
        assert payload["exponents"][0]["lifespan_exp"] == -1.0
        assert payload["config"]["sigma"] == 0.5   # reproducibility closure

    def test_exponents_supercritical_prints_undefined(self, tmp_path, capsys):
        code = run_cli(["exponents", "--a", "1", "--b", "1", "--sigma", "0.5",
                        "--n", "1", "--p", "3.0", "--out", str(tmp_path / "o")])
        assert code == 0
        assert "lifespan_exp=undefined" in capsys.readouterr().out

    def test_sigma_one_exit_code(self, tmp_path, capsys):
        code = run_cli(["exponents", "--a", "1", "--b", "1", "--sigma", "1",
                        "--n", "1", "--out", str(tmp_path / "o")])
        assert code == 2
        assert "sigma excluded" in capsys.readouterr().err

    def test_kernels_smoke(self, tmp_path):
        out = tmp_path / "k"
        code = run_cli(["kernels", "--a", "1", "--b", "1", "--sigma", "0.5",
                        "--n", "1", "--out", str(out)])
        assert code == 0
        rows = (out / "kernels.csv").read_text().splitlines()
        assert rows[0] == "r,t,k0,k1,dk0,dk1"
        assert len(rows) == 2001
        rep = json.loads((out / "kernel_report.json").read_text())
        assert rep["pass"] is True
        assert rep["identity_residual_dk1"] <= 1e-10

    def test_kernels_deterministic(self, tmp_path):
        out = tmp_path / "k"
        args = ["kernels", "--a", "1", "--b", "1", "--sigma", "0.5", "--n", "1",
                "--seed", "7", "--out", str(out)]
        assert run_cli(args) == 0
        first = {name: (out / name).read_bytes()
                 for name in ("kernels.csv", "kernel_report.json")}
        assert run_cli(args) == 0
        for name, blob in first.items():
            assert (out / name).read_bytes() == blob

    def test_lifespan_single_epsilon_exit_2(self, tmp_path, capsys):
        code = run_cli(["lifespan-sweep", "--a", "1", "--b", "1", "--sigma", "0.5",
                        "--n", "1", "--p", "1.5", "--eps-list", "1.0",
                        "--grid-n", "256", "--box-l", "30",
                        "--out", str(tmp_path / "o")])
        assert code == 2
        assert "at least two" in capsys.readouterr().err

    def test_solve_writes_series_and_summary(self, tmp_path):
        out = tmp_path / "s"
        code = run_cli(["solve", "--a", "1", "--b", "1", "--sigma", "0.5",
                        "--n", "1", "--p", "3.0", "--eps", "0.01",
                        "--grid-n", "256", "--box-l", "40", "--t-end", "2.0",
                        "--snapshots", "--out", str(out)])
        assert code == 0
        header = (out / "series.csv").read_text().splitlines()[0]
        assert header == "t,l2,hs,linf,l1,mass,nonlinear_mass"
        summary = json.loads((out / "run.json").read_text())
        assert summary["status"] == "completed"
        assert summary["config"]["t_end"] == 2.0
        assert (out / "data_u0.bin").exists()
        assert (out / "final_slice.csv").exists()
        assert any(name.startswith("snap_") for name in os.listdir(out))

    def test_linear_decay_csv_contract(self, tmp_path):
        out = tmp_path / "d"
        code = run_cli(["linear-decay", "--a", "1", "--b", "1", "--sigma", "0.5",
                        "--n", "1", "--s-list", "0", "--out", str(out)])
        assert code == 0
        lines = (out / "decay_s0.csv").read_text().splitlines()
        assert lines[0] == "t,norm,scaled_norm,s,sigma,n"
        payload = json.loads((out / "linear_decay.json").read_text())
        fit = payload["fits"][0]
        assert {"slope", "target", "deviation", "tolerance", "pass"} <= set(fit)
        assert (out / "decay_s0.dat").exists()

    def test_profile_linear_smoke(self, tmp_path):
        out = tmp_path / "p"
        code = run_cli(["profile", "--a", "1", "--b", "1", "--sigma", "0.5",
                        "--n", "1", "--p", "3.0", "--eps", "0.1", "--linear",
                        "--grid-n", "512", "--box-l", "50", "--t-end", "5.0",
                        "--out", str(out)])
        assert code == 0
        payload = json.loads((out / "profile.json").read_text())
        assert payload["theta"] == pytest.approx(0.2, abs=1e-9)
        assert 0.9 <= payload["terminal_ratio"] <= 1.1
        assert (out / "profile_error.csv").exists()
        assert (out / "profile_error.dat").exists()

    def test_fraclap_check_smoke(self, tmp_path):
        out = tmp_path / "f"
        code = run_cli(["fraclap-check", "--a", "1", "--b", "1", "--sigma", "1.5",
                        "--n", "1", "--out", str(out)])
        assert code == 0
        payload = json.loads((out / "fraclap.json").read_text())
        assert payload["relative_change"] < 0.05

    def test_blowup_functional_from_stored_snapshots(self, tmp_path):
        solve_out = tmp_path / "solve"
        code = run_cli(["solve", "--a", "1", "--b", "1", "--sigma", "0.5",
                        "--n", "1", "--p", "1.5", "--eps", "1.0",
                        "--grid-n", "512", "--box-l", "50", "--t-end", "50.0",
                        "--snapshots", "--out", str(solve_out)])
        assert code == 0
        func_out = tmp_path / "func"
        code = run_cli(["blowup-functional", "--a", "1", "--b", "1",
                        "--sigma", "0.5", "--n", "1", "--p", "1.5",
                        "--eps", "1.0", "--snapshots-dir", str(solve_out),
                        "--out", str(func_out)])
        assert code == 0
        payload = json.loads((func_out / "blowup_functional.json").read_text())
        assert payload["j_tilde_le_j"] is True
        assert abs(payload["exponents"]["j4"] - payload["targets"]["j4"]) <= 0.15

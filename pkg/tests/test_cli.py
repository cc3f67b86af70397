"""Command-line interface: subcommands, CSV contract, exit codes."""

import json

import numpy as np
import pytest

import refgame as rg
import refgame.cli as cli


def demo_config_dict(**overrides):
    doc = {
        "params": {
            "firm_H": {"a": 8.70, "b": 2.00, "c": 0.82},
            "firm_L": {"a": 4.30, "b": 1.20, "c": 0.32},
            "alpha": 0.90,
            "p_lo": 0.10,
            "p_hi": 7.50,
        },
        "init_prices": [4.85, 4.86],
        "init_references": [0.10, 2.95],
        "schedule": {"kind": "inverse_sqrt", "c": 1.0},
        "horizon": 500,
        "output_path": "trajectory.csv",
        "seed": 0,
    }
    doc.update(overrides)
    return doc


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def summary_dict(captured: str) -> dict:
    out = {}
    for line in captured.splitlines():
        if " = " in line:
            key, _, value = line.partition(" = ")
            out[key.strip()] = value.strip()
    return out


class TestConfigParsing:
    def test_round_trip(self, tmp_path):
        path = write_config(tmp_path, demo_config_dict())
        config = rg.load_config(path)
        assert config.horizon == 500
        assert config.params.firm_H.a == 8.70
        assert config.schedule.kind == "inverse_sqrt"

    def test_missing_field_names_the_field(self, tmp_path):
        doc = demo_config_dict()
        del doc["params"]["alpha"]
        path = write_config(tmp_path, doc)
        with pytest.raises(rg.ConfigError, match="alpha"):
            rg.load_config(path)

    def test_invalid_json_reports_position(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"params": ', encoding="utf-8")
        with pytest.raises(rg.ConfigError, match="line"):
            rg.load_config(str(path))

    def test_bad_horizon(self, tmp_path):
        path = write_config(tmp_path, demo_config_dict(horizon=0))
        with pytest.raises(rg.ConfigError, match="horizon"):
            rg.load_config(path)

    def test_out_of_box_initial_state(self, tmp_path):
        path = write_config(tmp_path, demo_config_dict(init_prices=[9.0, 1.0]))
        with pytest.raises(rg.ConfigError, match="init_prices"):
            rg.load_config(path)

    def test_missing_file(self):
        with pytest.raises(rg.ConfigError, match="cannot read"):
            rg.load_config("/nonexistent/cfg.json")


class TestSimulateCommand:
    def test_writes_csv_with_exact_schema(self, tmp_path, capsys):
        out = tmp_path / "run.csv"
        path = write_config(tmp_path, demo_config_dict(horizon=50))
        code = cli.main(["simulate", "--config", path, "--out", str(out)])
        assert code == 0
        raw = out.read_bytes()
        assert b"\r" not in raw
        lines = raw.decode("ascii").split("\n")
        assert lines[0] == "t,p_H,p_L,r_H,r_L,D_H,D_L,dist2_sne,eps_l1"
        assert lines[-1] == ""  # trailing LF
        assert len(lines) == 1 + 51 + 1
        first = lines[1].split(",")
        assert first[0] == "0"
        assert float(first[1]) == 4.85
        summary = summary_dict(capsys.readouterr().out)
        assert summary["command"] == "simulate"
        assert "verdict" in summary

    def test_horizon_one_yields_two_rows(self, tmp_path, capsys):
        out = tmp_path / "tiny.csv"
        path = write_config(tmp_path, demo_config_dict(horizon=1))
        assert cli.main(["simulate", "--config", path, "--out", str(out)]) == 0
        rows = out.read_text(encoding="ascii").strip().split("\n")
        assert len(rows) == 3  # header + 2 data rows
        capsys.readouterr()

    def test_seventeen_significant_digits(self, tmp_path, capsys):
        out = tmp_path / "digits.csv"
        path = write_config(tmp_path, demo_config_dict(horizon=5))
        cli.main(["simulate", "--config", path, "--out", str(out)])
        capsys.readouterr()
        row = out.read_text(encoding="ascii").strip().split("\n")[1].split(",")
        # 4.85 is not exactly representable; 17 significant digits expose it
        assert row[1] == "4.8499999999999996"

    def test_invalid_config_exits_1(self, tmp_path, capsys):
        path = write_config(tmp_path, demo_config_dict(horizon=-3))
        assert cli.main(["simulate", "--config", path]) == 1
        capsys.readouterr()

    def test_inadmissible_box_exits_1(self, tmp_path, capsys):
        doc = demo_config_dict()
        doc["params"]["p_hi"] = 5.0  # below the admissibility threshold? no: 5.0 > 3.29
        doc["params"]["firm_H"]["a"] = 12.0  # raises the threshold above 5
        doc["init_prices"] = [4.85, 4.86]
        path = write_config(tmp_path, doc)
        code = cli.main(["simulate", "--config", path])
        assert code == 1
        assert "p_hi" in capsys.readouterr().err

    def test_missing_config_file_exits_1(self, capsys):
        assert cli.main(["simulate", "--config", "/no/such/file.json"]) == 1
        capsys.readouterr()

    def test_solver_failure_exits_2(self, tmp_path, capsys, monkeypatch):
        def boom(params, cfg=None):
            raise rg.SolverError("forced failure", period=3)

        monkeypatch.setattr(cli, "solve_sne", boom)
        path = write_config(tmp_path, demo_config_dict(horizon=5))
        assert cli.main(["simulate", "--config", path]) == 2
        assert "forced failure" in capsys.readouterr().err


class TestSneCommand:
    def test_symmetric_prints_equal_prices(self, tmp_path, capsys):
        doc = demo_config_dict()
        doc["params"] = {
            "firm_H": {"a": 10.0, "b": 1.0, "c": 1.0},
            "firm_L": {"a": 10.0, "b": 1.0, "c": 1.0},
            "alpha": 0.5,
            "p_lo": 0.4,
            "p_hi": 8.0,
        }
        doc["init_prices"] = [2.0, 2.0]
        doc["init_references"] = [2.0, 2.0]
        path = write_config(tmp_path, doc)
        assert cli.main(["sne", "--config", path]) == 0
        summary = summary_dict(capsys.readouterr().out)
        assert abs(float(summary["sne_p_H"]) - float(summary["sne_p_L"])) < 1e-10
        # the worked threshold value prints to four decimals
        assert float(summary["bound_upper_H"]) == pytest.approx(7.3785, abs=5e-5)

    def test_demo_instance_reports(self, tmp_path, capsys):
        path = write_config(tmp_path, demo_config_dict())
        assert cli.main(["sne", "--config", path]) == 0
        summary = summary_dict(capsys.readouterr().out)
        assert float(summary["sne_residual"]) < 1e-10
        assert float(summary["hessian_det"]) > 0.0
        assert summary["bounds_contained"] == "true"


class TestCompareCommand:
    def test_demo_compare_small(self, tmp_path, capsys):
        out = tmp_path / "cmp.csv"
        path = write_config(tmp_path, demo_config_dict(horizon=3000))
        assert cli.main(["compare", "--config", path, "--out", str(out)]) == 0
        summary = summary_dict(capsys.readouterr().out)
        policy_file = tmp_path / "cmp_policy.csv"
        assert out.exists() and policy_file.exists()
        header = policy_file.read_text(encoding="ascii").split("\n")[0]
        assert header == "t,r_H_grad,r_L_grad,r_H_policy,r_L_policy,ref_gap"
        assert int(summary["policy_horizon"]) == 1000
        assert float(summary["terminal_mutual_gap"]) < 1e-2

    def test_stationary_start_has_zero_gap(self, tmp_path, capsys, fig1_sne):
        sne = fig1_sne.prices
        doc = demo_config_dict(horizon=50)
        doc["init_prices"] = [sne.p_H, sne.p_L]
        doc["init_references"] = [sne.p_H, sne.p_L]
        path = write_config(tmp_path, doc)
        out = tmp_path / "flat.csv"
        assert cli.main(["compare", "--config", path, "--out", str(out)]) == 0
        summary = summary_dict(capsys.readouterr().out)
        assert float(summary["terminal_mutual_gap"]) < 1e-9

    def test_zero_horizon_rejected(self, tmp_path, capsys):
        path = write_config(tmp_path, demo_config_dict())
        assert cli.main(["compare", "--config", path, "--horizon", "0"]) == 1
        capsys.readouterr()


class TestVerifyCommand:
    def test_small_sweep_passes(self, capsys):
        assert cli.main(["verify", "--random", "3", "--seed", "7"]) == 0
        summary = summary_dict(capsys.readouterr().out)
        assert summary["sweep_total"] == "3"
        assert summary["sweep_contained"] == "3"
        assert summary["sweep_solver_failures"] == "0"
        assert summary["verify_pass"] == "true"

    def test_zero_sweep_is_vacuous_but_grid_checks_run(self, capsys):
        assert cli.main(["verify", "--random", "0"]) == 0
        summary = summary_dict(capsys.readouterr().out)
        assert summary["sweep_total"] == "0"
        assert float(summary["gradient_max_rel_err"]) < 1e-6
        assert summary["drift_shells_increasing"] == "true"
        assert summary["verify_pass"] == "true"

    def test_determinism_of_report(self, capsys):
        assert cli.main(["verify", "--random", "2", "--seed", "5"]) == 0
        first = capsys.readouterr().out
        assert cli.main(["verify", "--random", "2", "--seed", "5"]) == 0
        second = capsys.readouterr().out
        assert first == second


class TestFigure1Command:
    def test_variant_a_short_run(self, tmp_path, capsys):
        out = tmp_path / "a.csv"
        code = cli.main(
            ["figure1", "--variant", "a", "--horizon", "2000", "--out", str(out)]
        )
        assert code == 0
        summary = summary_dict(capsys.readouterr().out)
        assert summary["verdict"] == "CONVERGED"
        assert float(summary["terminal_price_gap_inf"]) < 1e-2

    def test_variant_b_cycles(self, tmp_path, capsys):
        out = tmp_path / "b.csv"
        code = cli.main(
            ["figure1", "--variant", "b", "--horizon", "3000", "--out", str(out)]
        )
        assert code == 0
        summary = summary_dict(capsys.readouterr().out)
        assert summary["verdict"] == "CYCLING"

    def test_repeated_runs_byte_identical(self, tmp_path, capsys):
        out1 = tmp_path / "r1.csv"
        out2 = tmp_path / "r2.csv"
        cli.main(["figure1", "--variant", "a", "--horizon", "1500", "--out", str(out1)])
        cli.main(["figure1", "--variant", "a", "--horizon", "1500", "--out", str(out2)])
        capsys.readouterr()
        assert out1.read_bytes() == out2.read_bytes()

    def test_unknown_variant_rejected(self, capsys):
        with pytest.raises(SystemExit):
            cli.main(["figure1", "--variant", "z"])
        capsys.readouterr()

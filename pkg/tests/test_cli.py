import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from noma_secrecy.cli import main
from noma_secrecy.experiments import build_config, load_spec


def write_spec(path, **overrides):
    spec = {
        "scenario": "clitest",
        "system": {
            "n_antennas": 32,
            "n_clusters": 2,
            "users_per_cluster": 2,
            "coherence_len": 300,
            "eav_gain": 10.0,
        },
        "powers": {"p_max_db": 0.0, "q_max_db": 10.0},
        "trials": 200,
        "seed": 7,
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(spec.get(key), dict):
            spec[key].update(value)
        else:
            spec[key] = value
    path.write_text(json.dumps(spec))
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestSpecLoading:
    def test_round_trip(self, tmp_path):
        spec_path = write_spec(tmp_path / "spec.json")
        spec = load_spec(str(spec_path))
        assert spec.scenario == "clitest"
        assert spec.trials == 200
        cfg = build_config(spec)
        assert cfg.n_clusters == 2
        assert cfg.pilot_len == 2  # defaults to the cluster count

    def test_explicit_clusters_sorted(self, tmp_path):
        spec_path = write_spec(
            tmp_path / "spec.json",
            system={
                "n_antennas": 16,
                "clusters": [[5.0, 50.0], [1.0, 9.0]],
            },
        )
        cfg = build_config(load_spec(str(spec_path)))
        np.testing.assert_array_equal(cfg.beta(0), [50.0, 5.0])

    def test_beta_pool_reused_across_partitions(self, tmp_path):
        spec_path = write_spec(
            tmp_path / "spec.json",
            system={
                "n_antennas": 16,
                "n_clusters": 2,
                "users_per_cluster": 2,
                "total_users": 4,
            },
        )
        spec = load_spec(str(spec_path))
        pool = np.sort(
            np.concatenate([build_config(spec, users_per_cluster=2).beta(m) for m in range(2)])
        )
        pool4 = np.sort(build_config(spec, users_per_cluster=4).beta(0))
        np.testing.assert_allclose(pool, pool4)

    def test_rejects_unknown_axis(self, tmp_path):
        spec_path = write_spec(
            tmp_path / "spec.json", sweep={"axis": "bananas", "values": [1, 2]}
        )
        with pytest.raises(ValueError, match="sweep.axis"):
            load_spec(str(spec_path))

    def test_rejects_unsorted_sweep(self, tmp_path):
        spec_path = write_spec(
            tmp_path / "spec.json", sweep={"axis": "n_antennas", "values": [32, 16]}
        )
        with pytest.raises(ValueError, match="strictly increasing"):
            load_spec(str(spec_path))


class TestRatesCommand:
    def test_outputs_and_recomposition(self, tmp_path):
        spec_path = write_spec(tmp_path / "spec.json")
        out = tmp_path / "rates.csv"
        assert main(["rates", "--spec", str(spec_path), "--out", str(out)]) == 0
        rows = read_rows(out)
        users = [r for r in rows if r["role"] == "user"]
        assert len(users) == 4
        for row in users:
            # columns carry 9 significant digits, so the recomposition is
            # good to the print precision of the larger operand
            secrecy = max(float(row["legit"]) - float(row["eaves"]), 0.0)
            assert float(row["secrecy"]) == pytest.approx(secrecy, abs=1e-8)
        summary = read_rows(tmp_path / "rates_summary.csv")
        assert summary[0]["allocator"] == "fixed"
        total = sum(float(r["secrecy"]) for r in users)
        assert float(summary[0]["sum_secrecy"]) == pytest.approx(total, rel=1e-8)

    def test_zero_budget_zero_rates(self, tmp_path):
        spec_path = write_spec(tmp_path / "spec.json", powers={"q_max_db": -400.0})
        out = tmp_path / "rates.csv"
        assert main(["rates", "--spec", str(spec_path), "--out", str(out)]) == 0
        for row in read_rows(out):
            if row["role"] == "user":
                assert float(row["secrecy"]) == pytest.approx(0.0, abs=1e-9)

    def test_byte_identical_rerun(self, tmp_path):
        spec_path = write_spec(tmp_path / "spec.json")
        out_a = tmp_path / "a.csv"
        out_b = tmp_path / "b.csv"
        main(["rates", "--spec", str(spec_path), "--out", str(out_a)])
        main(["rates", "--spec", str(spec_path), "--out", str(out_b)])
        assert out_a.read_bytes() == out_b.read_bytes()


class TestValidateCommand:
    def test_bands_and_flags(self, tmp_path):
        spec_path = write_spec(tmp_path / "spec.json")
        out = tmp_path / "val.csv"
        assert main(["validate", "--spec", str(spec_path), "--out", str(out)]) == 0
        rows = read_rows(out)
        moments = [r for r in rows if r["kind"] == "moment"]
        assert moments, "moment rows missing"
        beam = [r for r in moments if r["name"] == "eave_beam_power"]
        for row in beam:
            assert float(row["predicted"]) == 1.0
            assert abs(float(row["z_score"])) < 5.0
        assert all(r["degenerate"] == "false" for r in moments)

    def test_single_trial_is_degenerate(self, tmp_path):
        spec_path = write_spec(tmp_path / "spec.json", trials=1)
        out = tmp_path / "val.csv"
        assert main(["validate", "--spec", str(spec_path), "--out", str(out)]) == 0
        rates = [r for r in read_rows(out) if r["kind"] == "rate"]
        assert rates and all(r["degenerate"] == "true" for r in rates)


class TestOptimizeCommand:
    def test_se_trace_monotone(self, tmp_path):
        spec_path = write_spec(tmp_path / "spec.json")
        out = tmp_path / "opt.csv"
        assert main(["optimize", "--spec", str(spec_path), "--out", str(out)]) == 0
        trace = [
            float(r["value"])
            for r in read_rows(tmp_path / "opt_trace.csv")
            if r["kind"] == "objective"
        ]
        assert len(trace) >= 2
        assert all(b >= a - 1e-9 for a, b in zip(trace, trace[1:]))

    def test_ee_lambda_monotone(self, tmp_path):
        spec_path = write_spec(
            tmp_path / "spec.json",
            system={"n_antennas": 16},
            powers={"q_max_db": 5.0, "circuit_power_db": -5.0},
        )
        out = tmp_path / "opt.csv"
        assert (
            main(["optimize", "--spec", str(spec_path), "--out", str(out), "--mode", "ee"])
            == 0
        )
        lambdas = [
            float(r["value"])
            for r in read_rows(tmp_path / "opt_trace.csv")
            if r["kind"] == "lambda"
        ]
        assert lambdas[0] == 0.0
        assert all(b >= a - 1e-12 for a, b in zip(lambdas, lambdas[1:]))
        summary = read_rows(tmp_path / "opt_summary.csv")[0]
        assert summary["allocator"] == "proposed_ee"
        assert float(summary["lambda_final"]) == pytest.approx(lambdas[-1], rel=1e-9)

    def test_ee_requires_circuit_power(self, tmp_path):
        spec_path = write_spec(tmp_path / "spec.json")
        out = tmp_path / "opt.csv"
        code = main(
            ["optimize", "--spec", str(spec_path), "--out", str(out), "--mode", "ee"]
        )
        assert code == 1


class TestSweepCommand:
    def _sweep_spec(self, tmp_path):
        return write_spec(
            tmp_path / "spec.json",
            system={"n_antennas": 16},
            sweep={"axis": "n_antennas", "values": [16, 32]},
        )

    def test_proposed_dominates_and_grows(self, tmp_path):
        spec_path = self._sweep_spec(tmp_path)
        out = tmp_path / "sweep.csv"
        assert main(["sweep", "--spec", str(spec_path), "--out", str(out)]) == 0
        summary = read_rows(tmp_path / "sweep_summary.csv")
        by_point = {}
        for row in summary:
            by_point.setdefault(float(row["axis_value"]), {})[row["allocator"]] = float(
                row["sum_secrecy"]
            )
        for point in by_point.values():
            assert point["proposed"] >= point["downlink"] - 1e-6
            assert point["proposed"] >= point["uplink"] - 1e-6
            assert point["proposed"] >= point["fixed"] - 1e-6
            assert "oma" in point
        values = sorted(by_point)
        assert by_point[values[1]]["proposed"] >= by_point[values[0]]["proposed"]

    def test_missing_sweep_section_fails(self, tmp_path):
        spec_path = write_spec(tmp_path / "spec.json")
        out = tmp_path / "sweep.csv"
        assert main(["sweep", "--spec", str(spec_path), "--out", str(out)]) == 1

    def test_budget_axis(self, tmp_path):
        spec_path = write_spec(
            tmp_path / "spec.json",
            system={"n_antennas": 16},
            sweep={"axis": "q_max_db", "values": [0.0, 10.0]},
        )
        out = tmp_path / "sweep.csv"
        assert main(["sweep", "--spec", str(spec_path), "--out", str(out)]) == 0
        summary = read_rows(tmp_path / "sweep_summary.csv")
        fixed = {
            float(r["axis_value"]): float(r["downlink_power"])
            for r in summary
            if r["allocator"] == "fixed"
        }
        assert fixed[0.0] == pytest.approx(1.0, rel=1e-9)
        assert fixed[10.0] == pytest.approx(10.0, rel=1e-9)
        proposed = {
            float(r["axis_value"]): float(r["sum_secrecy"])
            for r in summary
            if r["allocator"] == "proposed"
        }
        assert proposed[10.0] >= proposed[0.0] - 1e-9

    def test_users_per_cluster_axis_repartitions_pool(self, tmp_path):
        spec_path = write_spec(
            tmp_path / "spec.json",
            system={
                "n_antennas": 16,
                "n_clusters": 2,
                "users_per_cluster": 2,
                "total_users": 4,
            },
            sweep={"axis": "users_per_cluster", "values": [1, 2]},
        )
        out = tmp_path / "sweep.csv"
        assert main(["sweep", "--spec", str(spec_path), "--out", str(out)]) == 0
        rows = read_rows(out)
        betas = {}
        for row in rows:
            if row["role"] == "user" and row["allocator"] == "fixed":
                betas.setdefault(float(row["axis_value"]), []).append(float(row["beta"]))
        # same four drawn gains, re-partitioned into 4x1 and 2x2 layouts
        assert sorted(betas[1.0]) == sorted(betas[2.0])
        assert len(betas[1.0]) == 4

    def test_thread_count_does_not_change_bytes(self, tmp_path):
        spec_path = self._sweep_spec(tmp_path)
        out1 = tmp_path / "s1.csv"
        out2 = tmp_path / "s2.csv"
        assert main(["sweep", "--spec", str(spec_path), "--out", str(out1)]) == 0
        assert (
            main(["sweep", "--spec", str(spec_path), "--out", str(out2), "--threads", "3"])
            == 0
        )
        assert out1.read_bytes() == out2.read_bytes()
        assert (tmp_path / "s1_summary.csv").read_bytes() == (
            tmp_path / "s2_summary.csv"
        ).read_bytes()


class TestCliSurface:
    def test_missing_spec_file_is_error_exit(self, tmp_path):
        out = tmp_path / "x.csv"
        assert main(["rates", "--spec", str(tmp_path / "nope.json"), "--out", str(out)]) == 1

    def test_invalid_config_is_error_exit(self, tmp_path):
        spec_path = write_spec(
            tmp_path / "spec.json",
            system={"n_antennas": 16, "n_clusters": 3, "users_per_cluster": 1, "pilot_len": 2},
        )
        out = tmp_path / "x.csv"
        assert main(["rates", "--spec", str(spec_path), "--out", str(out)]) == 1

    def test_seed_override_changes_scenario(self, tmp_path):
        spec_path = write_spec(tmp_path / "spec.json")
        out_a = tmp_path / "a.csv"
        out_b = tmp_path / "b.csv"
        main(["rates", "--spec", str(spec_path), "--out", str(out_a)])
        main(["rates", "--spec", str(spec_path), "--out", str(out_b), "--seed", "8"])
        assert out_a.read_bytes() != out_b.read_bytes()

    def test_log_env_var_accepted(self, tmp_path, monkeypatch, caplog):
        monkeypatch.setenv("NOMA_SECRECY_LOG", "INFO")
        spec_path = write_spec(tmp_path / "spec.json")
        out = tmp_path / "rates.csv"
        import logging

        with caplog.at_level(logging.INFO, logger="noma_secrecy"):
            assert main(["rates", "--spec", str(spec_path), "--out", str(out)]) == 0
        assert any("running rates" in r.message for r in caplog.records)

    def test_console_entry_point(self, tmp_path):
        spec_path = write_spec(tmp_path / "spec.json")
        out = tmp_path / "rates.csv"
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "noma_secrecy.cli",
                "rates",
                "--spec",
                str(spec_path),
                "--out",
                str(out),
            ],
            capture_output=True,
            text=True,
            timeout=300,
        )
        assert proc.returncode == 0
        assert str(out) in proc.stdout
        assert out.exists()

import csv
import json
import subprocess
import sys

import pytest

from qmcecon.cli import main
from qmcecon.econ import DEFAULT_STRESS, write_stress_config


def run_cli(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


class TestExitCodes:
    def test_unknown_subcommand_usage_exit_1(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 1

    def test_unknown_flag_exit_1(self):
        with pytest.raises(SystemExit) as exc:
            main(["run", "simple", "--warp", "9"])
        assert exc.value.code == 1

    def test_classical_sweep_needs_repeats(self, capsys):
        code, _, err = run_cli(
            ["sweep", "--app", "neoclassical", "--estimator", "classical",
             "--n-samples", "100", "--repeats", "0"], capsys)
        assert code == 1
        assert "repeats" in err

    def test_resource_cap_exit_2(self, capsys):
        code, _, err = run_cli(
            ["run", "stress", "--m", "5", "--n", "25", "--method", "powers"],
            capsys)
        assert code == 2
        assert "resource" in err.lower()


class TestOracle:
    def test_stress_values(self, capsys):
        code, out, _ = run_cli(["oracle", "stress"], capsys)
        assert code == 0
        cont = float(out.split("continuous loss fraction:")[1].split()[0])
        assert abs(cont - 0.01618) / 0.01618 < 0.01
        assert "grid loss fraction" in out

    def test_simple_values(self, capsys):
        code, out, _ = run_cli(["oracle", "simple"], capsys)
        assert code == 0
        assert "0.4323" in out


class TestRun:
    def test_simple_run_prints_estimates(self, capsys):
        code, out, _ = run_cli(["run", "simple", "--m", "5", "--n", "6"], capsys)
        assert code == 0
        theta = float(out.split("theta_hat=")[1].split()[0])
        mu = float(out.split("mu=")[1].split()[0])
        assert abs(theta - 0.453125) < 1e-9
        assert abs(mu - 0.432) < 0.01

    def test_distribution_sidecar(self, tmp_path, capsys):
        sidecar = tmp_path / "dist.csv"
        code, _, _ = run_cli(
            ["run", "simple", "--m", "3", "--n", "4",
             "--distribution-out", str(sidecar)], capsys)
        assert code == 0
        rows = list(csv.DictReader(
            line for line in sidecar.read_text().splitlines()
            if not line.startswith("#")))
        assert len(rows) == 16
        total = sum(float(r["probability"]) for r in rows)
        assert abs(total - 1.0) < 1e-9

    def test_run_with_scenario_config(self, tmp_path, capsys):
        path = tmp_path / "scenario.ini"
        write_stress_config(path, DEFAULT_STRESS)
        code, out, _ = run_cli(
            ["--config", str(path), "run", "stress", "--m", "3", "--n", "3"],
            capsys)
        assert code == 0
        assert "theta_hat" in out


class TestSweepOutput:
    def test_csv_deterministic_excluding_wall_time(self, tmp_path, capsys):
        args = ["--seed", "7", "--out", None, "sweep", "--app", "neoclassical",
                "--estimator", "classical", "--n-samples", "100,1000",
                "--repeats", "3"]
        outputs = []
        for name in ("a.csv", "b.csv"):
            path = tmp_path / name
            args[3] = str(path)
            code, _, _ = run_cli(list(args), capsys)
            assert code == 0
            outputs.append(path.read_text())
        header_a, *lines_a = outputs[0].splitlines()
        header_b, *lines_b = outputs[1].splitlines()
        assert header_a == "# nondeterministic-columns: wall_time_s"
        assert header_a == header_b
        reader_a = list(csv.DictReader(lines_a))
        reader_b = list(csv.DictReader(lines_b))
        for ra, rb in zip(reader_a, reader_b):
            for key in ra:
                if key != "wall_time_s":
                    assert ra[key] == rb[key]

    def test_json_format(self, tmp_path, capsys):
        path = tmp_path / "rows.json"
        code, _, _ = run_cli(
            ["--out", str(path), "--format", "json", "sweep", "--app", "simple",
             "--estimator", "qmc_exact", "--n-min", "3", "--n-max", "4",
             "--m", "3"], capsys)
        assert code == 0
        rows = json.loads(path.read_text())
        assert [row["N"] for row in rows] == [7, 15]


class TestResourcesCommand:
    def test_rows_and_runtime(self, tmp_path, capsys):
        path = tmp_path / "res.csv"
        code, out, _ = run_cli(
            ["--out", str(path), "resources", "--m", "3", "--layers", "2",
             "--n-min", "3", "--n-max", "4", "--gate-time", "1e-9"], capsys)
        assert code == 0
        rows = list(csv.DictReader(path.read_text().splitlines()))
        assert [r["n"] for r in rows] == ["3", "4"]
        assert "runtime=" in out


class TestTrainCommand:
    def test_train_writes_reloadable_params(self, tmp_path, capsys):
        params = tmp_path / "params.txt"
        code, out, _ = run_cli(
            ["--seed", "1", "train-a", "--m", "3", "--layers", "1",
             "--stages", "30:0.05", "--params-out", str(params)], capsys)
        assert code == 0
        assert "final_cost" in out
        from qmcecon.distributions import load_ansatz

        ansatz, meta = load_ansatz(params)
        assert ansatz.m == 3 and ansatz.layers == 1
        assert meta["seed"] == "1"


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "qmcecon.cli", "oracle", "simple"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "grid mean" in proc.stdout

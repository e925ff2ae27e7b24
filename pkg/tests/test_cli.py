import csv
import json
import subprocess
import sys

import pytest

from kacspec.cli import RunConfig, UsageError, main
from kacspec.kernel import CrossSectionParams, KernelTables, build_tables


def run(tmp_path, *argv):
    return main(list(argv) + ["--out", str(tmp_path)])


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def write_config(tmp_path, **fields):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(fields))
    return str(path)


class TestEig:
    def test_table(self, tmp_path):
        assert run(tmp_path, "eig", "--s", "0.5", "--k-max", "4") == 0
        rows = read_rows(tmp_path / "eigenvalues.csv")
        assert len(rows) == 5
        assert abs(float(rows[2]["lambda"])) <= 1e-10
        assert float(rows[1]["lambda"]) == pytest.approx(3.06147, abs=1e-5)
        assert abs(float(rows[1]["lambda"]) - 3.0614674589) <= 1e-6

    @pytest.mark.parametrize("s", ["1.2", "0", "-0.5"])
    def test_bad_s(self, tmp_path, s):
        assert run(tmp_path, "eig", "--s", s) == 1

    def test_unknown_command(self, tmp_path):
        assert main(["bogus"]) == 1

    def test_coeff(self, tmp_path):
        assert run(tmp_path, "coeff", "--k-max", "2", "--l-max", "2") == 0
        rows = read_rows(tmp_path / "alpha.csv")
        assert len(rows) == 9
        assert float(rows[2]["alpha"]) == pytest.approx(-5.824040565, rel=1e-9)


class TestSimulate:
    def test_time_zero(self, tmp_path):
        cfg = write_config(tmp_path, N_v=8, N_x=8)
        assert run(tmp_path, "simulate", "--config", cfg, "--T", "0") == 0
        info = json.loads((tmp_path / "manifest.json").read_text())
        assert info["snapshots"] == ["snapshot_0000.csv"]
        assert info["config_sha256"] and "package" in info["version"]

    def test_deterministic(self, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            cfg = write_config(tmp_path, N_v=16, N_x=16, T=0.2, dt=0.05, every=2)
            assert main(["simulate", "--config", cfg, "--seed", "5", "--out", str(out)]) == 0
            outs.append(out)
        files = sorted(p.name for p in outs[0].glob("snapshot_*.csv"))
        assert len(files) == 3
        for name in files:
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()

    def test_homogeneous_conservation(self, tmp_path):
        modes = [[0, 0, 0.2, 0.0], [2, 0, -0.3, 0.0]]
        cfg = write_config(tmp_path, N_v=16, N_x=1, T=1.0, dt=0.01, every=100,
                           initial={"kind": "polynomial", "modes": modes})
        assert run(tmp_path, "simulate", "--config", cfg) == 0
        info = json.loads((tmp_path / "manifest.json").read_text())
        first = read_rows(tmp_path / info["snapshots"][0])
        last = read_rows(tmp_path / info["snapshots"][-1])
        for a, b in zip(first, last):
            if a["n"] in ("0", "2"):
                assert abs(float(a["re"]) - float(b["re"])) <= 1e-10
                assert abs(float(a["im"]) - float(b["im"])) <= 1e-10

    def test_stability_abort(self, tmp_path):
        modes = [[1, 1, 1e200, 0.0]]
        cfg = write_config(tmp_path, N_v=8, N_x=8, T=0.5, dt=0.1,
                           initial={"kind": "polynomial", "modes": modes})
        assert run(tmp_path, "simulate", "--config", cfg) == 2

    def test_config_errors(self, tmp_path):
        assert run(tmp_path, "simulate", "--config", write_config(tmp_path, N_x=12)) == 1
        assert run(tmp_path, "simulate", "--config", write_config(tmp_path, colour="red")) == 1
        assert run(tmp_path, "simulate", "--config", str(tmp_path / "missing.json")) == 1
        assert run(tmp_path, "simulate", "--dt", "0") == 1


class TestRunConfig:
    def test_overrides(self, tmp_path):
        cfg = RunConfig.load(write_config(tmp_path, s=0.3, N_x=16), T=2.0, seed=9)
        assert cfg.s == 0.3 and cfg.T == 2.0 and cfg.initial["seed"] == 9
        assert cfg.digest() == RunConfig.load(write_config(tmp_path, s=0.3, N_x=16), T=2.0, seed=9).digest()
        with pytest.raises(UsageError):
            RunConfig(scheme="euler").validate()
        with pytest.raises(UsageError):
            RunConfig(initial={"kind": "smooth"}).validate()


class TestOtherCommands:
    def test_picard(self, tmp_path):
        cfg = write_config(tmp_path, N_v=8, N_x=8, T=0.2, dt=0.05,
                           initial={"kind": "rough", "amplitude": 1e-3, "a": 1, "b": 1, "seed": 0})
        assert run(tmp_path, "picard", "--config", cfg, "--iters", "3") == 0
        res = json.loads((tmp_path / "picard.json").read_text())
        assert res["contracted"] and len(res["differences"]) == 3

    def test_besov(self, tmp_path):
        cfg = write_config(tmp_path, N_v=4, N_x=32)
        assert run(tmp_path, "besov", "--config", cfg, "--sigma", "0", "--r", "2") == 0
        rows = read_rows(tmp_path / "besov.csv")
        assert rows[0]["q"] == "-1"

    def test_smoothing_fit(self, tmp_path):
        cfg = write_config(tmp_path, N_v=16, N_x=32, T=0.5, dt=0.05, every=2)
        assert run(tmp_path, "smoothing-fit", "--config", cfg) == 0
        res = json.loads((tmp_path / "smoothing.json").read_text())
        assert res["c"] > 0 and set(res["fits"]) == {"hermite", "fourier"}
        assert (tmp_path / "monitor.csv").read_text().startswith("t,weighted_norm")

    def test_kolmogorov_check(self, tmp_path):
        assert run(tmp_path, "kolmogorov-check", "--s", "0.5") == 0
        res = json.loads((tmp_path / "kolmogorov.json").read_text())
        assert res["brute_min_ratio"] == pytest.approx(res["oracle_min_ratio"], rel=1e-6)

    def test_bobylev_check(self, tmp_path):
        assert run(tmp_path, "bobylev-check", "--k-max", "4") == 0


class TestVerify:
    def test_kernel_identities(self, tmp_path):
        assert run(tmp_path, "verify", "kernel-identities") == 0
        verdict = json.loads((tmp_path / "verdict.json").read_text())
        assert verdict["passed"]

    def test_cached_tables(self, tmp_path):
        path = tmp_path / "tables.csv"
        build_tables(65, CrossSectionParams(0.5)).to_csv(path)
        assert run(tmp_path, "verify", "kernel-identities", "--tables", str(path)) == 0

    def test_corrupted_tables(self, tmp_path):
        tab = build_tables(65, CrossSectionParams(0.5))
        tab.alphas[0, 5] *= 1.001
        path = tmp_path / "tables.csv"
        tab.to_csv(path)
        assert run(tmp_path, "verify", "kernel-identities", "--tables", str(path)) == 3
        verdict = json.loads((tmp_path / "verdict.json").read_text())
        failed = verdict["criteria"][0]["detail"]["failed_identities"]
        assert failed == ["alpha_(0,5) = -lambda_5"]

    def test_lp_suite(self, tmp_path):
        assert run(tmp_path, "verify", "lp") == 0
        verdict = json.loads((tmp_path / "verdict.json").read_text())
        detail = verdict["criteria"][0]["detail"]
        assert detail["partition_residual"] <= 1e-12

    def test_unknown_suite(self, tmp_path):
        assert run(tmp_path, "verify", "nonsense") == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "kacspec", "eig", "--k-max", "3", "--threads", "1",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["rows"] == 4

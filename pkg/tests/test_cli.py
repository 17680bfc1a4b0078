"""Command-line front-end: config parsing, verdicts, exit codes, determinism."""

from __future__ import annotations

import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

import isoflow
from isoflow.cli import load_config, main, resolved_config_text
from isoflow.errors import ConfigError

CONFIG_DIR = Path(isoflow.__file__).parent / "configs"
GAUSSIAN_CFG = str(CONFIG_DIR / "gaussian_slab.cfg")
QUADRATIC_CFG = str(CONFIG_DIR / "quadratic_slab.cfg")

ALL_COMMANDS = ("profile", "transport", "stability", "jacobi", "spectrum", "optimize")


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_json(out_dir, name):
    with open(os.path.join(out_dir, name)) as handle:
        return json.load(handle)


class TestLoadConfig:
    def test_bundled_configs_parse(self):
        for path in (GAUSSIAN_CFG, QUADRATIC_CFG):
            config = load_config(path)
            density = config.density()
            assert density.dim == 2
            assert density.slab == (-1.0, 1.0)

    def test_defaults_fill_missing_sections(self, tmp_path):
        config = load_config(write_cfg(tmp_path, "[density]\nweight = zero\n"))
        assert config.value("run", "seed") == 20260816
        assert config.value("transport", "grid_size") == 2001
        assert config.value("jacobi", "steps") == (0.004, 0.002, 0.001)

    def test_unknown_section_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write_cfg(tmp_path, "[density]\nweight = zero\n[turbo]\nx = 1\n"))

    def test_unknown_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write_cfg(tmp_path, "[density]\nflavor = spicy\n"))

    def test_unparseable_value_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write_cfg(tmp_path, "[density]\nc = fast\n"))

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "absent.cfg"))

    def test_unknown_weight_rejected(self, tmp_path):
        config = load_config(write_cfg(tmp_path, "[density]\nweight = cubic\n"))
        with pytest.raises(ConfigError):
            config.density()

    def test_wrong_arity_rejected(self, tmp_path):
        config = load_config(write_cfg(tmp_path, "[density]\nweight = affine\nparams = 1, 2, 3\n"))
        with pytest.raises(ConfigError):
            config.density()

    def test_piecewise_weight_built_from_flat_pairs(self, tmp_path):
        config = load_config(
            write_cfg(
                tmp_path,
                "[density]\nweight = piecewise_linear\nparams = -1, 0, 0, 0.3, 1, 0\n",
            )
        )
        density = config.density()
        assert density.weight.value(0.0) == pytest.approx(0.3)

    def test_infinite_slab_literals(self, tmp_path):
        config = load_config(write_cfg(tmp_path, "[density]\nweight = zero\nslab = -inf, inf\n"))
        assert config.density().slab == (-float("inf"), float("inf"))

    def test_resolved_text_roundtrip(self, tmp_path):
        config = load_config(QUADRATIC_CFG)
        echoed = write_cfg(tmp_path, resolved_config_text(config), "resolved.cfg")
        assert load_config(echoed) == config


@pytest.fixture(scope="module")
def gaussian_run(tmp_path_factory):
    out = str(tmp_path_factory.mktemp("gauss"))
    code = main(["all", "--config", GAUSSIAN_CFG, "--out", out])
    return code, out


@pytest.fixture(scope="module")
def quadratic_run(tmp_path_factory):
    out = str(tmp_path_factory.mktemp("quad"))
    code = main(["all", "--config", QUADRATIC_CFG, "--out", out])
    return code, out


class TestGaussianRun:
    def test_exit_code_zero(self, gaussian_run):
        code, _ = gaussian_run
        assert code == 0

    def test_summary_all_verified(self, gaussian_run):
        _, out = gaussian_run
        summary = read_json(out, "summary.json")
        assert summary["status"] == "verified"
        assert [r["command"] for r in summary["verdicts"]] == list(ALL_COMMANDS)
        assert all(r["status"] == "verified" for r in summary["verdicts"])

    def test_expected_files_present(self, gaussian_run):
        _, out = gaussian_run
        expected = {
            "resolved.cfg",
            "summary.json",
            "profile_parallel.csv",
            "profile_perp.csv",
            "compare.json",
            "transport.csv",
            "transport.json",
            "stability.json",
            "jacobi.csv",
            "jacobi_curve.csv",
            "jacobi.json",
            "spectrum.csv",
            "spectrum.json",
            "optimize_trace.csv",
            "chord.csv",
            "optimize.json",
        }
        assert expected.issubset(set(os.listdir(out)))

    def test_identity_transport_and_strict_comparison(self, gaussian_run):
        _, out = gaussian_run
        compare = read_json(out, "compare.json")
        assert compare["metrics"]["comparison"] == "strict"
        transport = read_json(out, "transport.json")
        assert transport["metrics"]["max_derivative"] <= 1.0 + 1e-6

    def test_jacobi_second_order(self, gaussian_run):
        _, out = gaussian_run
        jacobi = read_json(out, "jacobi.json")
        assert all(r >= 3.5 for r in jacobi["metrics"]["ratios"])

    def test_resolved_config_reloads_to_same_values(self, gaussian_run):
        _, out = gaussian_run
        resolved = load_config(os.path.join(out, "resolved.cfg"))
        original = load_config(GAUSSIAN_CFG).with_overrides(out_dir=out)
        assert resolved == original


class TestQuadraticRun:
    def test_exit_code_zero(self, quadratic_run):
        code, _ = quadratic_run
        assert code == 0

    def test_parallel_instability_expected_and_verified(self, quadratic_run):
        _, out = quadratic_run
        stability = read_json(out, "stability.json")
        assert stability["status"] == "verified"
        assert stability["metrics"]["parallel_verdict"] == "unstable"
        assert stability["metrics"]["witness_index_value"] < -1e-3
        assert stability["metrics"]["vertical_sweep_min"] >= -1e-6

    def test_optimizer_matches_perpendicular_profile(self, quadratic_run):
        _, out = quadratic_run
        record = read_json(out, "optimize.json")
        assert record["status"] == "verified"
        assert record["metrics"]["relative_gap"] <= 5e-3


class TestExitCodes:
    def test_malformed_slab_exits_one_without_outputs(self, tmp_path, capsys):
        out = str(tmp_path / "never")
        cfg = write_cfg(tmp_path, "[density]\nweight = zero\nslab = 1, -1\n")
        assert main(["profile", "--config", cfg, "--out", out]) == 1
        assert not os.path.exists(out)
        assert "error" in capsys.readouterr().err

    def test_missing_config_exits_one(self, tmp_path, capsys):
        code = main(["profile", "--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path)])
        assert code == 1
        capsys.readouterr()

    def test_nonsmooth_weight_profile_exits_one_with_error_record(self, tmp_path, capsys):
        cfg = write_cfg(
            tmp_path,
            "[density]\nweight = piecewise_linear\nparams = -1, 0, 0, 0.3, 1, 0\n",
        )
        out = str(tmp_path / "out")
        assert main(["profile", "--config", cfg, "--out", out]) == 1
        record = read_json(out, "profile_error.json")
        assert record["status"] == "error"
        assert "message" in record["metrics"]
        capsys.readouterr()

    def test_expect_bound_turns_diagnostic_into_violation(self, tmp_path, capsys):
        cfg = write_cfg(
            tmp_path,
            "[density]\nweight = quadratic\nparams = -4, 0, 0\nc = 0.5\nslab = -1, 1\n",
        )
        out = str(tmp_path / "out")
        assert main(["spectrum", "--config", cfg, "--out", out]) == 0
        plain = read_json(out, "spectrum.json")
        assert plain["status"] == "verified"
        assert not plain["metrics"]["certified"]
        assert main(["spectrum", "--config", cfg, "--out", out, "--expect-bound"]) == 2
        flagged = read_json(out, "spectrum.json")
        assert flagged["status"] == "violated"
        assert flagged["witness"]["value"] == pytest.approx(
            plain["metrics"]["lambda"], rel=1e-12
        )
        capsys.readouterr()

    def test_violation_dominates_in_summary(self, tmp_path, capsys):
        cfg = write_cfg(
            tmp_path,
            "[density]\nweight = quadratic\nparams = -4, 0, 0\nc = 0.5\nslab = -1, 1\n"
            "[transport]\nrequire_concave = false\n",
        )
        out = str(tmp_path / "out")
        code = main(["all", "--config", cfg, "--out", out, "--expect-bound"])
        assert code in (1, 2)
        summary = read_json(out, "summary.json")
        statuses = {r["command"]: r["status"] for r in summary["verdicts"]}
        assert statuses["spectrum"] == "violated"
        capsys.readouterr()


class TestSingleCommand:
    def test_affine_whole_space_ties_everywhere(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            "[density]\nweight = affine\nparams = 1, 0\nc = 0.5\nslab = -inf, inf\n",
        )
        out = str(tmp_path / "out")
        assert main(["profile", "--config", cfg, "--out", out]) == 0
        record = read_json(out, "compare.json")
        assert record["status"] == "verified"
        assert record["metrics"]["strict"] is False
        assert record["metrics"]["n_ties"] == record["metrics"]["n_grid"]

    def test_log_power_transport_contracts(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            "[density]\nweight = log_power\nparams = 2\nc = 0.5\nslab = 0, inf\n",
        )
        out = str(tmp_path / "out")
        assert main(["transport", "--config", cfg, "--out", out]) == 0
        record = read_json(out, "transport.json")
        assert record["status"] == "verified"
        assert record["metrics"]["max_derivative"] <= 1.0 + 1e-6

    def test_profile_writes_only_its_files(self, tmp_path):
        out = str(tmp_path / "out")
        assert main(["profile", "--config", GAUSSIAN_CFG, "--out", out]) == 0
        files = set(os.listdir(out))
        assert {"resolved.cfg", "profile_parallel.csv", "profile_perp.csv", "compare.json"} == files

    def test_exact_jacobi_shot_passes_via_floor(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            "[density]\nweight = quadratic\nparams = 1, 0, 0\nc = 0.5\nslab = -1, 1\n"
            "[jacobi]\ntarget_hf = -0.5\nstart_x = 0.5\nstart_t = 0.0\n"
            "angle = 1.5707963267948966\nsteps = 0.004, 0.002\nmax_length = 0.9\n",
        )
        out = str(tmp_path / "out")
        assert main(["jacobi", "--config", cfg, "--out", out]) == 0
        record = read_json(out, "jacobi.json")
        assert max(record["metrics"]["max_residuals"]) <= 1e-9


class TestDeterminism:
    def test_reruns_are_byte_identical(self, tmp_path):
        out_a = str(tmp_path / "a")
        out_b = str(tmp_path / "b")
        for out in (out_a, out_b):
            assert main(["all", "--config", QUADRATIC_CFG, "--out", out]) == 0
        names = sorted(n for n in os.listdir(out_a) if n.endswith(".csv"))
        assert names
        for name in names:
            with open(os.path.join(out_a, name), "rb") as fa:
                blob_a = fa.read()
            with open(os.path.join(out_b, name), "rb") as fb:
                blob_b = fb.read()
            assert blob_a == blob_b, name

    def test_stability_sweep_metric_reproduces(self, tmp_path):
        values = []
        for sub in ("a", "b"):
            out = str(tmp_path / sub)
            assert main(["stability", "--config", GAUSSIAN_CFG, "--out", out]) == 0
            values.append(read_json(out, "stability.json")["metrics"]["vertical_sweep_min"])
        assert values[0] == values[1]


class TestThreads:
    def test_cli_flag_wins(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ISOFLOW_THREADS", "7")
        out = str(tmp_path / "out")
        assert main(["profile", "--config", GAUSSIAN_CFG, "--out", out, "--threads", "3"]) == 0
        resolved = load_config(os.path.join(out, "resolved.cfg"))
        assert resolved.value("run", "threads") == 3

    def test_environment_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ISOFLOW_THREADS", "7")
        out = str(tmp_path / "out")
        assert main(["profile", "--config", GAUSSIAN_CFG, "--out", out]) == 0
        resolved = load_config(os.path.join(out, "resolved.cfg"))
        assert resolved.value("run", "threads") == 7


class TestSubprocessEntry:
    def test_python_dash_m_invocation(self, tmp_path):
        out = str(tmp_path / "out")
        proc = subprocess.run(
            [sys.executable, "-m", "isoflow", "stability", "--config", GAUSSIAN_CFG, "--out", out],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert os.path.exists(os.path.join(out, "stability.json"))
        assert "Traceback" not in proc.stderr

    def test_malformed_config_has_no_traceback(self, tmp_path):
        cfg = write_cfg(tmp_path, "[density]\nweight = zero\nslab = 1, -1\n")
        proc = subprocess.run(
            [sys.executable, "-m", "isoflow", "all", "--config", cfg, "--out", str(tmp_path / "o")],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 1
        assert "Traceback" not in proc.stderr
        assert "error" in proc.stderr

"""Command-line workflows, artifact contracts and exit codes."""

import csv
import json

import numpy as np
import pytest

from acdcopf import cli

from conftest import two_bus_case, write_case


def run_cli(*argv):
    return cli.main(list(argv))


@pytest.fixture(scope="module")
def model_dir(tmp_path_factory):
    """A trained screening model (reduced sample count, still valid)."""
    out = tmp_path_factory.mktemp("model")
    code = run_cli("train-screen", "--case", "bundled:case14_acdc",
                   "--seed", "3", "--samples", "30", "--out", str(out))
    assert code == 0
    return out


class TestPowerflowCmd:
    def test_bundled_smoke(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ACDCOPF_OUTPUT_DIR", str(tmp_path))
        assert run_cli("powerflow", "--case", "bundled:case14_acdc") == 0

    def test_outputs_written(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ACDCOPF_OUTPUT_DIR", str(tmp_path))
        assert run_cli("powerflow", "--case", "bundled:case14_acdc") == 0
        for name in ("powerflow_buses.csv", "powerflow_branches.csv",
                     "powerflow_converters.csv", "powerflow_dc.csv",
                     "powerflow.json"):
            assert (tmp_path / name).exists(), name
        header = (tmp_path / "powerflow_buses.csv").read_text().splitlines()[0]
        assert header.startswith("# config_hash=")

    def test_controls_override_reflected(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ACDCOPF_OUTPUT_DIR", str(tmp_path))
        controls = tmp_path / "controls.json"
        controls.write_text(json.dumps({"P_s:VSC1": -0.7776}))
        assert run_cli("powerflow", "--case", "bundled:case14_acdc",
                       "--controls", str(controls)) == 0
        with (tmp_path / "powerflow_converters.csv").open() as fh:
            fh.readline()
            rows = list(csv.DictReader(fh))
        vsc1 = next(r for r in rows if r["converter"] == "VSC1")
        # droop shifts the realised transfer slightly off the schedule
        assert float(vsc1["p_s"]) == pytest.approx(-0.7776, abs=0.05)

    def test_malformed_case_no_partial_output(self, tmp_path, monkeypatch):
        out = tmp_path / "out"
        monkeypatch.setenv("ACDCOPF_OUTPUT_DIR", str(out))
        bad = tmp_path / "bad.json"
        bad.write_text("{broken")
        code = run_cli("powerflow", "--case", str(bad))
        assert code == cli.EXIT_VALIDATION
        assert not (out / "powerflow_buses.csv").exists()

    def test_unknown_control_component(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ACDCOPF_OUTPUT_DIR", str(tmp_path))
        controls = tmp_path / "controls.json"
        controls.write_text(json.dumps({"P_s:VSC9": 0.0}))
        code = run_cli("powerflow", "--case", "bundled:case14_acdc",
                       "--controls", str(controls))
        assert code == cli.EXIT_VALIDATION


class TestTrainScreenCmd:
    def test_zero_samples_rejected(self, tmp_path):
        code = run_cli("train-screen", "--case", "bundled:case14_acdc",
                       "--seed", "1", "--samples", "0",
                       "--out", str(tmp_path))
        assert code == cli.EXIT_VALIDATION

    def test_seed_mandatory(self, tmp_path):
        code = run_cli("train-screen", "--case", "bundled:case14_acdc",
                       "--out", str(tmp_path))
        assert code == cli.EXIT_VALIDATION

    def test_artifacts(self, model_dir):
        model = json.loads((model_dir / "screening_model.json").read_text())
        assert model["version"] == "screening-model/1"
        assert len(model["sigma"]) == len(model["feature_names"])
        table = (model_dir / "screen_error_table.csv").read_text()
        assert "L1(1-2)" in table
        validation = json.loads(
            (model_dir / "screen_validation.json").read_text())
        assert validation["validation"]["n_training_rows"] > 0

    def test_rerun_byte_identical(self, tmp_path):
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            assert run_cli("train-screen", "--case", "bundled:case14_acdc",
                           "--seed", "3", "--samples", "30",
                           "--out", str(out)) == 0
            outs.append((out / "screening_model.json").read_bytes())
        assert outs[0] == outs[1]


class TestRankCmd:
    def test_rank_and_critical_set(self, model_dir, tmp_path, monkeypatch):
        monkeypatch.setenv("ACDCOPF_OUTPUT_DIR", str(tmp_path))
        code = run_cli("rank", "--model",
                       str(model_dir / "screening_model.json"),
                       "--case", "bundled:case14_acdc")
        assert code == 0
        doc = json.loads((tmp_path / "rank.json").read_text())
        critical = doc["critical_set"]
        for label in ("DC1(1-2)", "DC2(2-3)", "DC3(1-3)"):
            assert label in critical
        assert len(doc["entries"]) == 17

    def test_exact_column(self, model_dir, tmp_path, monkeypatch):
        monkeypatch.setenv("ACDCOPF_OUTPUT_DIR", str(tmp_path))
        code = run_cli("rank", "--model",
                       str(model_dir / "screening_model.json"),
                       "--case", "bundled:case14_acdc", "--exact")
        assert code == 0
        with (tmp_path / "rank.csv").open() as fh:
            fh.readline()
            rows = list(csv.DictReader(fh))
        assert "exact" in rows[0] and "error_percent" in rows[0]

    def test_model_case_mismatch(self, model_dir, tmp_path, monkeypatch):
        monkeypatch.setenv("ACDCOPF_OUTPUT_DIR", str(tmp_path))
        other = write_case(tmp_path, two_bus_case())
        code = run_cli("rank", "--model",
                       str(model_dir / "screening_model.json"),
                       "--case", str(other))
        assert code == cli.EXIT_VALIDATION

    def test_missing_model_file(self, tmp_path):
        code = run_cli("rank", "--model", str(tmp_path / "nope.json"),
                       "--case", "bundled:case14_acdc")
        assert code == cli.EXIT_IO


class TestOptimizeAndDecideCmd:
    def test_small_run_artifacts(self, model_dir, tmp_path):
        cfg = {
            "case": "bundled:case14_acdc",
            "seed": 11,
            "output_dir": str(tmp_path),
            "optimizer": {"population": 12, "iterations": 2, "workers": 1},
            "screening": {"model_path": str(model_dir
                                            / "screening_model.json")},
        }
        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(json.dumps(cfg))
        code = run_cli("optimize", "--config", str(cfg_path))
        assert code in (0, cli.EXIT_INFEASIBLE)
        assert (tmp_path / "archive.json").exists()
        assert (tmp_path / "progress.csv").exists()
        if code == 0:
            assert (tmp_path / "bcs.json").exists()
            assert (tmp_path / "summary.csv").exists()
            doc = json.loads((tmp_path / "archive.json").read_text())
            assert doc["members"]
            # decision rerun over the written archive
            out2 = tmp_path / "redecide"
            code2 = run_cli("decide", "--archive",
                            str(tmp_path / "archive.json"),
                            "--seed", "11", "--out", str(out2))
            assert code2 == 0
            assert (out2 / "bcs.json").exists()

    def test_unknown_config_key_rejected(self, tmp_path):
        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(json.dumps({"case": "bundled:case14_acdc",
                                        "seed": 1, "bogus": 1}))
        assert run_cli("optimize", "--config",
                       str(cfg_path)) == cli.EXIT_VALIDATION

    def test_decide_missing_archive(self, tmp_path):
        code = run_cli("decide", "--archive", str(tmp_path / "none.json"),
                       "--seed", "1", "--out", str(tmp_path))
        assert code == cli.EXIT_IO

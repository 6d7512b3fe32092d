import json

import pandas as pd
import pytest
import yaml

from main import main


def write_config(tmp_path, **values):
    path = tmp_path / "run.yml"
    path.write_text(yaml.safe_dump(values))
    return str(path)


@pytest.fixture
def noiseless_config(tmp_path):
    return write_config(
        tmp_path, scenarios=["a"], thetas=[1.0], steps=[4], n_clusters=8, cluster_size=3,
        overrides={"sigma_c2": 0.0, "sigma_d2": 0.0, "sigma_e2": 0.0, "beta_age": 0.0, "beta_widowed": 0.0},
    )


class TestGenerate:
    def test_closed_cohort_rows(self, tmp_path, capsys):
        out = tmp_path / "obs.csv"
        assert main(["generate", "--scenario", "a", "--steps", "4", "--seed", "3", "--out", str(out)]) == 0
        assert capsys.readouterr().out.strip() == "1920"
        assert len(pd.read_csv(out)) == 1920

    def test_open_cohort_rows(self, tmp_path, capsys):
        out = tmp_path / "obs.csv"
        assert main(["generate", "--scenario", "d", "--steps", "4", "--out", str(out)]) == 0
        assert capsys.readouterr().out.strip() == "1920"

    def test_same_seed_same_bytes(self, tmp_path):
        first, second = tmp_path / "one.csv", tmp_path / "two.csv"
        for out in (first, second):
            assert main(["generate", "--steps", "4", "--seed", "17", "--out", str(out)]) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_design_and_panel_outputs(self, tmp_path):
        design, panel = tmp_path / "design.csv", tmp_path / "panel.csv"
        assert main(["generate", "--steps", "4", "--out", str(tmp_path / "obs.csv"),
                     "--design-out", str(design), "--panel-out", str(panel)]) == 0
        assert len(pd.read_csv(design)) == 48 * 5
        assert len(pd.read_csv(panel)) == 48 * 8 * 5


class TestFit:
    def test_noiseless_dataset_recovers_effect(self, tmp_path, noiseless_config, capsys):
        data = tmp_path / "obs.csv"
        assert main(["generate", "--config", noiseless_config, "--out", str(data)]) == 0
        capsys.readouterr()
        assert main(["fit", str(data), "--model", "1"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["test"]["estimate"] == pytest.approx(1.0, abs=1e-6)

    def test_model_4_labels(self, tmp_path, capsys):
        data = tmp_path / "obs.csv"
        assert main(["generate", "--steps", "4", "--out", str(data)]) == 0
        capsys.readouterr()
        assert main(["fit", str(data), "--model", "4"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["fit"]["labels"] == ["intercept", "exposed", "period_1", "period_2", "period_3", "period_4"]
        assert payload["test"]["df"] > 0
        assert 0.0 <= payload["test"]["p_value"] <= 1.0

    def test_malformed_csv(self, tmp_path, capsys):
        data = tmp_path / "bad.csv"
        data.write_text("cluster,period\n0,zero\n")
        assert main(["fit", str(data)]) != 0
        captured = capsys.readouterr()
        assert captured.out == ""
        assert "line 1" in captured.err

    def test_unknown_model(self, tmp_path, capsys):
        data = tmp_path / "obs.csv"
        assert main(["generate", "--steps", "4", "--out", str(data)]) == 0
        capsys.readouterr()
        assert main(["fit", str(data), "--model", "9"]) == 3
        assert capsys.readouterr().out == ""


class TestSimulate:
    def test_smoke_grid(self, tmp_path, capsys):
        out = tmp_path / "results"
        config = write_config(tmp_path, scenarios=["a"], thetas=[0.5], steps=[4], models=[1, 4], n_reps=5,
                              n_clusters=8, cluster_size=3)
        assert main(["simulate", "--config", config, "--out", str(out)]) == 0
        assert len(pd.read_csv(out / "replicates.csv")) == 10
        assert len(pd.read_csv(out / "summary.csv")) == 2
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["status"] == "completed"
        assert manifest["config"]["output_dir"] == str(out)

    def test_cli_flags_override_file(self, tmp_path):
        out = tmp_path / "results"
        config = write_config(tmp_path, scenarios=["a"], thetas=[0.5], steps=[4], models=[1, 4], n_reps=5,
                              n_clusters=8, cluster_size=3, master_seed=1)
        assert main(["simulate", "--config", config, "--out", str(out), "--reps", "2", "--model", "4",
                     "--seed", "9"]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["n_reps"] == 2
        assert manifest["config"]["models"] == [4]
        assert manifest["master_seed"] == 9

    def test_config_errors_listed_together(self, tmp_path, capsys):
        config = write_config(tmp_path, models=[1, 9], n_reps=0, colour="blue")
        assert main(["simulate", "--config", config]) == 2
        err = capsys.readouterr().err
        assert "n_reps" in err
        assert "colour" in err

    def test_unbalanced_design_is_config_error(self, tmp_path):
        config = write_config(tmp_path, steps=[5])
        assert main(["simulate", "--config", config]) == 2

    def test_missing_config_file(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "absent.yml")]) == 2

    def test_print_schema(self, capsys):
        assert main(["simulate", "--print-schema"]) == 0
        schema = json.loads(capsys.readouterr().out)
        assert "n_reps" in schema["properties"]
        assert schema.get("additionalProperties") is False


class TestSummarize:
    def test_resummarize_replicates(self, tmp_path):
        out = tmp_path / "results"
        config = write_config(tmp_path, scenarios=["a"], thetas=[0.0, 0.5], steps=[4], models=[4], n_reps=3,
                              n_clusters=8, cluster_size=3)
        assert main(["simulate", "--config", config, "--out", str(out)]) == 0
        again = tmp_path / "again.csv"
        assert main(["summarize", str(out / "replicates.csv"), "--out", str(again)]) == 0
        original, rebuilt = pd.read_csv(out / "summary.csv"), pd.read_csv(again)
        pd.testing.assert_frame_equal(original, rebuilt, check_exact=False, rtol=1e-12)

import os

import pytest
import yaml

from config import InferenceSettings, SimulationSettings, SolverSettings
from models import RunConfig, ScenarioName
from utils.errors import ConfigError
from utils.run_config_loader import load_run_config


class TestSettings:
    def test_defaults(self):
        solver = SolverSettings()
        assert solver.start_points == [-2.0, 0.0]
        assert solver.boundary_tolerance == 1e-8
        assert InferenceSettings().alpha == 0.05

    def test_environment_prefix(self, monkeypatch):
        monkeypatch.setenv("SOLVER_MAX_EVALUATIONS", "123")
        monkeypatch.setenv("SIMULATION_WORKERS", "3")
        assert SolverSettings().max_evaluations == 123
        assert SimulationSettings().workers == 3


class TestRunConfig:
    def test_table_defaults(self):
        config = RunConfig()
        assert config.scenarios == [ScenarioName.A]
        assert config.thetas == [0.0, 0.25, 0.5, 0.75, 1.0]
        assert config.steps == [4, 6, 8]
        assert config.models == [1, 2, 3, 4, 5, 6]
        assert (config.n_clusters, config.cluster_size, config.period_length) == (48, 8, 0.5)

    def test_round_trip_through_json(self):
        config = RunConfig(scenarios=["b", "d"], thetas=[0.25], overrides={"sigma_c2": 5.0})
        assert RunConfig(**config.model_dump(mode="json")) == config


class TestLoader:
    def test_precedence(self, tmp_path):
        path = tmp_path / "run.yml"
        path.write_text(yaml.safe_dump({"n_reps": 50, "workers": 2, "overrides": {"sigma_c2": 1.0}}))
        config = load_run_config(str(path), {"n_reps": 7, "workers": None, "overrides": {"sigma_d2": 2.0}})
        assert config.n_reps == 7
        assert config.workers == 2
        assert config.overrides.sigma_c2 == 1.0
        assert config.overrides.sigma_d2 == 2.0

    def test_all_problems_reported(self, tmp_path):
        path = tmp_path / "run.yml"
        path.write_text(yaml.safe_dump({"n_reps": -1, "alpha": 2.0, "overrides": {"sigma_x": 1}}))
        with pytest.raises(ConfigError) as error:
            load_run_config(str(path))
        text = " ".join(error.value.messages)
        assert "n_reps" in text
        assert "alpha" in text
        assert "sigma_x" in text

    def test_top_level_must_be_mapping(self, tmp_path):
        path = tmp_path / "run.yml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError):
            load_run_config(str(path))

    def test_shipped_configs_parse(self):
        for name in ("smoke", "full_grid", "acceptance"):
            path = os.path.join(os.path.dirname(__file__), "..", "conf", f"{name}.yml")
            assert load_run_config(path).n_reps >= 1

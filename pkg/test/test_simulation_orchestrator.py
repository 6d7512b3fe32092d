import json
import os

import numpy as np
import pytest

from models import ReplicateResult, RunConfig, ScenarioOverrides, get_formulation, get_formulations
from services.outcome_generator import scenario_preset
from services.results_recorder import ReplicateRecorder
from services.simulation_orchestrator import (
    SimulationOrchestrator,
    all_cells_converged,
    fit_and_test,
    replicate_seed,
    run_grid,
    run_replicate,
    summarize,
)
from services.trial_design import standard_swd


def without_timing(results):
    return sorted((r.model_dump(exclude={"wall_time"}) for r in results),
                  key=lambda r: (r["scenario"], r["theta"], r["n_steps"], r["model"], r["replicate"]))


def record(estimate, significant=False, converged=True, standard_error=0.5, theta=0.5, replicate=0):
    return ReplicateResult(
        scenario="a", theta=theta, n_steps=4, replicate=replicate, model=4, estimate=estimate,
        standard_error=standard_error, df=30.0, p_value=0.01 if significant else 0.5, significant=significant,
        ci_lower=estimate - 1.0, ci_upper=estimate + 1.0, sigma_c2=10.0, sigma_d2=10.0, sigma_e2=20.0,
        converged=converged,
    )


def small_run_config(tmp_path, **values) -> RunConfig:
    defaults = dict(scenarios=["a"], thetas=[0.0, 0.5], steps=[4], models=[1, 4], n_reps=10, n_clusters=8,
                    cluster_size=3, master_seed=11, workers=1, output_dir=str(tmp_path / "out"))
    defaults.update(values)
    return RunConfig(**defaults)


class TestRunReplicate:
    def test_one_record_per_model_on_shared_keys(self):
        design = standard_swd(12, 3)
        results = run_replicate(scenario_preset("a", 0.5, 3), design, get_formulations([1, 2, 3, 4, 5, 6]),
                                seed=5, replicate=2, cluster_size=4)
        assert [r.model for r in results] == [1, 2, 3, 4, 5, 6]
        assert {(r.scenario, r.theta, r.n_steps, r.replicate) for r in results} == {("a", 0.5, 3, 2)}

    def test_same_seed_identical_records(self):
        design = standard_swd(12, 3)
        models = get_formulations([1, 4])
        first = run_replicate(scenario_preset("c", 0.5, 3), design, models, seed=99, cluster_size=4)
        second = run_replicate(scenario_preset("c", 0.5, 3), design, models, seed=99, cluster_size=4)
        assert without_timing(first) == without_timing(second)

    def test_noiseless_data_recovered_by_every_model(self):
        overrides = ScenarioOverrides(sigma_c2=0.0, sigma_d2=0.0, sigma_e2=0.0, beta_age=0.0, beta_widowed=0.0,
                                      widowhood_hazard=0.5)
        scenario = scenario_preset("a", 1.0, 3, overrides)
        results = run_replicate(scenario, standard_swd(12, 3), get_formulations([1, 2, 3, 4, 5, 6]), seed=3,
                                cluster_size=4)
        for result in results:
            assert result.error == ""
            assert result.estimate == pytest.approx(1.0, abs=1e-6)

    def test_failure_recorded_not_raised(self, small_table):
        result = fit_and_test(small_table.drop(columns=["age"]), get_formulation(3),
                              dict(scenario="a", theta=0.5, n_steps=3, replicate=0))
        assert not result.converged
        assert "missing" in result.error
        assert np.isnan(result.estimate)


class TestRunGrid:
    def test_record_count(self, tmp_path):
        results = list(run_grid(small_run_config(tmp_path)))
        assert len(results) == 40
        assert {(r.theta, r.replicate, r.model) for r in results} == {
            (theta, replicate, model) for theta in (0.0, 0.5) for replicate in range(10) for model in (1, 4)
        }

    def test_worker_count_does_not_change_records(self, tmp_path):
        config = small_run_config(tmp_path, n_reps=3)
        serial = list(run_grid(config))
        parallel = list(run_grid(config.model_copy(update={"workers": 2})))
        assert without_timing(serial) == without_timing(parallel)

    def test_replicate_seeds_keyed_by_cell(self):
        seeds = {replicate_seed(1, scenario, theta, steps, rep)
                 for scenario in "abcd" for theta in (0.0, 0.5) for steps in (4, 8) for rep in range(5)}
        assert len(seeds) == 4 * 2 * 2 * 5


class TestSummarize:
    def test_hand_computed_group(self):
        summary, = summarize([record(0.2, significant=True), record(0.5), record(1.1, significant=True, replicate=1)])
        assert summary.n_reps == 3
        assert summary.n_converged == 3
        assert summary.mean_estimate == pytest.approx(0.6)
        assert summary.bias == pytest.approx(0.1)
        assert summary.empirical_sd == pytest.approx(np.std([0.2, 0.5, 1.1], ddof=1))
        assert summary.mc_se == pytest.approx(summary.empirical_sd / np.sqrt(3))
        assert summary.power == pytest.approx(2 / 3)
        assert summary.median_estimate == pytest.approx(0.5)
        assert summary.iqr_estimate == pytest.approx(summary.q75_estimate - summary.q25_estimate)
        assert summary.mean_model_se == pytest.approx(0.5)

    def test_exact_estimates(self):
        summary, = summarize([record(0.5, replicate=i) for i in range(4)])
        assert summary.bias == 0.0
        assert summary.empirical_sd == 0.0
        assert summary.coverage == 1.0

    def test_non_converged_excluded_but_counted(self):
        summary, = summarize([record(0.4), record(100.0, converged=False, replicate=1)])
        assert summary.n_reps == 2
        assert summary.n_converged == 1
        assert summary.mean_estimate == pytest.approx(0.4)
        assert summary.empirical_sd == 0.0

    def test_bias_plus_theta_is_mean(self):
        summary, = summarize([record(0.3, replicate=i) for i in range(2)] + [record(0.9, replicate=5)])
        assert summary.bias + summary.theta == pytest.approx(summary.mean_estimate, abs=1e-15)

    def test_order_independent(self):
        records = [record(0.1 * i, replicate=i) for i in range(7)]
        assert summarize(records) == summarize(list(reversed(records)))

    def test_cells_sorted(self):
        records = [record(0.5, theta=1.0), record(0.5, theta=0.0), record(0.5, theta=0.5)]
        assert [s.theta for s in summarize(records)] == [0.0, 0.5, 1.0]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            summarize([])

    def test_all_cells_converged(self):
        assert all_cells_converged(summarize([record(0.5)]))
        assert not all_cells_converged(summarize([record(0.5, converged=False)]))


class TestSimulationOrchestrator:
    def test_writes_outputs(self, tmp_path):
        config = small_run_config(tmp_path, thetas=[0.5], n_reps=5)
        orchestrator = SimulationOrchestrator(config)
        summaries = orchestrator.run()
        assert len(summaries) == 2
        with open(orchestrator.outputs["replicates"], encoding="utf-8") as file:
            assert len(file.read().splitlines()) == 1 + 10
        with open(orchestrator.outputs["manifest"], encoding="utf-8") as file:
            manifest = json.load(file)
        assert manifest["status"] == "completed"
        assert manifest["records_written"] == 10
        assert manifest["master_seed"] == 11
        assert RunConfig(**manifest["config"]) == config

    def test_summary_bytes_independent_of_workers(self, tmp_path):
        serial = small_run_config(tmp_path / "serial", n_reps=3)
        parallel = small_run_config(tmp_path / "parallel", n_reps=3, workers=8)
        outputs = []
        for config in (serial, parallel):
            orchestrator = SimulationOrchestrator(config)
            orchestrator.run()
            with open(orchestrator.outputs["summary"], "rb") as file:
                outputs.append(file.read())
        assert outputs[0] == outputs[1]

    def test_sink_failure_writes_aborted_manifest(self, tmp_path):
        class FailingRecorder(ReplicateRecorder):
            def record(self, result):
                if self.records_written == 3:
                    raise OSError("disk full")
                super().record(result)

        config = small_run_config(tmp_path, thetas=[0.5], n_reps=5)
        orchestrator = SimulationOrchestrator(config, recorder_factory=FailingRecorder)
        with pytest.raises(OSError, match="disk full"):
            orchestrator.run()
        with open(orchestrator.outputs["manifest"], encoding="utf-8") as file:
            manifest = json.load(file)
        assert manifest["status"] == "aborted"
        assert manifest["records_written"] == 3
        assert "disk full" in manifest["error"]
        assert not os.path.exists(orchestrator.outputs["summary"])

"""
Monte Carlo engine: simulate replicate datasets over the scenario grid, fit
every requested analysis model to the same dataset and aggregate the results.
"""
import logging
import multiprocessing as mp
import os
import platform
import time
from datetime import datetime, timezone
from importlib import metadata
from itertools import groupby
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import logfire
import numpy as np
import pandas as pd

from models import (
    CohortMode,
    CohortPanel,
    ModelFormulation,
    ReplicateResult,
    RunConfig,
    RunManifest,
    RunStatus,
    ScenarioConfig,
    ScenarioSummary,
    TrialDesign,
    get_formulations,
)
from services.cohort_generator import generate_closed_cohort, generate_open_cohort
from services.model_matrix_builder import build_matrices
from services.outcome_generator import generate_outcomes, scenario_preset
from services.reml_solver import RemlSolver
from services.results_recorder import ReplicateRecorder, config_hash, write_manifest, write_summary_csv
from services.satterthwaite import satterthwaite_df, wald_t_test
from services.trial_design import randomize_allocation, standard_swd
from utils.rng import KeyedStreams, StreamPurpose, derive_seed

logger = logging.getLogger(__name__)

EFFECT_LABEL = "exposed"
REPORTED_PACKAGES = ("numpy", "scipy", "pandas", "pydantic", "pydantic-settings", "logfire")


def simulate_dataset(scenario: ScenarioConfig, design: TrialDesign, seed: int, cluster_size: int = 8,
                     rerandomize: bool = True) -> Tuple[TrialDesign, CohortPanel, pd.DataFrame]:
    """Allocation, cohort and observation table of one replicate, all drawn from streams keyed by seed."""
    streams = KeyedStreams(seed)
    if rerandomize:
        design = randomize_allocation(design, streams.stream(StreamPurpose.ALLOCATION))
    if scenario.cohort_mode == CohortMode.OPEN:
        panel = generate_open_cohort(design, cluster_size, scenario.attrition_rate, streams,
                                     hazard=scenario.widowhood_hazard,
                                     baseline_age_range=scenario.baseline_age_range,
                                     joiner_age_range=scenario.joiner_age_range)
    else:
        panel = generate_closed_cohort(design, cluster_size, streams, hazard=scenario.widowhood_hazard,
                                       age_range=scenario.baseline_age_range)
    return design, panel, generate_outcomes(panel, scenario, streams)


def _failed_result(keys: dict, model: int, error: Exception, started: float) -> ReplicateResult:
    nan = float("nan")
    return ReplicateResult(
        **keys, model=model, estimate=nan, standard_error=nan, df=nan, p_value=nan, significant=False,
        ci_lower=nan, ci_upper=nan, sigma_c2=nan, sigma_d2=nan, sigma_e2=nan, converged=False,
        error=f"{type(error).__name__}: {error}", wall_time=time.perf_counter() - started,
    )


def fit_and_test(table: pd.DataFrame, formulation: ModelFormulation, keys: dict,
                 alpha: Optional[float] = None) -> ReplicateResult:
    """Fit one formulation and test the intervention effect; failures come back as a non-converged record."""
    started = time.perf_counter()
    try:
        matrices = build_matrices(table, formulation)
        solver = RemlSolver(matrices)
        fit = solver.fit()
        df = satterthwaite_df(matrices, fit, EFFECT_LABEL, solver=solver)
        test = wald_t_test(fit, df.df, EFFECT_LABEL, alpha=alpha, df_fallback=df.fallback)
    except Exception as e:
        logger.warning(f"Model {formulation.id} failed on scenario {keys['scenario']} replicate {keys['replicate']}: {e}")
        return _failed_result(keys, formulation.id, e, started)

    return ReplicateResult(
        **keys,
        model=formulation.id,
        estimate=test.estimate,
        standard_error=test.standard_error,
        df=test.df,
        p_value=test.p_value,
        significant=test.significant,
        ci_lower=test.ci_lower,
        ci_upper=test.ci_upper,
        sigma_c2=fit.components.sigma_c2,
        sigma_d2=fit.components.sigma_d2,
        sigma_e2=fit.components.sigma_e2,
        converged=fit.converged,
        df_fallback=test.df_fallback,
        wall_time=time.perf_counter() - started,
    )


def run_replicate(scenario: ScenarioConfig, design: TrialDesign, models: Sequence[ModelFormulation], seed: int,
                  replicate: int = 0, alpha: Optional[float] = None, rerandomize: bool = True,
                  cluster_size: int = 8) -> List[ReplicateResult]:
    """
    One simulated trial analysed by every formulation in models.

    All models see the same dataset. A model that fails is recorded with converged=False
    and the error message instead of raising.
    """
    keys = dict(scenario=scenario.name, theta=scenario.theta, n_steps=design.n_steps, replicate=replicate)
    with logfire.span("replicate {scenario} theta={theta} J={n_steps} rep={replicate}", **keys):
        _, _, table = simulate_dataset(scenario, design, seed, cluster_size=cluster_size, rerandomize=rerandomize)
        return [fit_and_test(table, formulation, keys, alpha=alpha) for formulation in models]


def replicate_seed(master_seed: int, scenario: str, theta: float, n_steps: int, replicate: int) -> int:
    return derive_seed(master_seed, scenario, float(theta), int(n_steps), int(replicate))


def _grid_tasks(config: RunConfig) -> Iterator[Tuple[RunConfig, str, float, int, int]]:
    for scenario in config.scenarios:
        for theta in config.thetas:
            for n_steps in config.steps:
                for replicate in range(config.n_reps):
                    yield config, scenario.value, float(theta), n_steps, replicate


def _run_task(task: Tuple[RunConfig, str, float, int, int]) -> List[ReplicateResult]:
    config, scenario_name, theta, n_steps, replicate = task
    scenario = scenario_preset(scenario_name, theta, n_steps, config.overrides)
    design = standard_swd(config.n_clusters, n_steps, config.period_length)
    return run_replicate(
        scenario, design, get_formulations(config.models),
        seed=replicate_seed(config.master_seed, scenario_name, theta, n_steps, replicate),
        replicate=replicate, alpha=config.alpha, rerandomize=config.rerandomize, cluster_size=config.cluster_size,
    )


def run_grid(config: RunConfig) -> Iterator[ReplicateResult]:
    """
    Every (scenario, theta, J, replicate) cell exactly once, streamed as replicates complete.

    Each replicate seed is a keyed hash of its cell, so the set of records does not depend
    on the number of workers; only their arrival order does.
    """
    n_tasks = len(config.scenarios) * len(config.thetas) * len(config.steps) * config.n_reps
    with logfire.span("run grid of {n_tasks} replicates on {workers} workers", n_tasks=n_tasks, workers=config.workers):
        if config.workers == 1:
            for task in _grid_tasks(config):
                yield from _run_task(task)
            return
        with mp.get_context("spawn").Pool(processes=config.workers) as pool:
            for results in pool.imap_unordered(_run_task, _grid_tasks(config), chunksize=1):
                yield from results


def _sort_key(result: ReplicateResult):
    return result.scenario, result.theta, result.n_steps, result.model, result.replicate


def _cell_summary(cell: Tuple[str, float, int, int], records: List[ReplicateResult]) -> ScenarioSummary:
    scenario, theta, n_steps, model = cell
    usable = [r for r in records if r.converged and not r.error and np.isfinite(r.estimate)]
    n = len(usable)
    nan = float("nan")
    if n == 0:
        return ScenarioSummary(
            scenario=scenario, theta=theta, n_steps=n_steps, model=model, n_reps=len(records), n_converged=0,
            mean_estimate=nan, bias=nan, mc_se=nan, empirical_sd=nan, mean_model_se=nan, power=nan,
            median_estimate=nan, q25_estimate=nan, q75_estimate=nan, iqr_estimate=nan, mean_df=nan, coverage=nan,
        )
    estimates = np.array([r.estimate for r in usable])
    mean_estimate = float(np.mean(estimates))
    empirical_sd = float(np.std(estimates, ddof=1)) if n > 1 else 0.0
    q25, median, q75 = (float(q) for q in np.percentile(estimates, [25, 50, 75]))
    covered = [r.ci_lower <= theta <= r.ci_upper for r in usable]
    return ScenarioSummary(
        scenario=scenario,
        theta=theta,
        n_steps=n_steps,
        model=model,
        n_reps=len(records),
        n_converged=n,
        mean_estimate=mean_estimate,
        bias=mean_estimate - theta,
        mc_se=empirical_sd / np.sqrt(n),
        empirical_sd=empirical_sd,
        mean_model_se=float(np.mean([r.standard_error for r in usable])),
        power=float(np.mean([r.significant for r in usable])),
        median_estimate=median,
        q25_estimate=q25,
        q75_estimate=q75,
        iqr_estimate=q75 - q25,
        mean_df=float(np.mean([r.df for r in usable])),
        coverage=float(np.mean(covered)),
    )


def summarize(results: Sequence[ReplicateResult]) -> List[ScenarioSummary]:
    """Aggregate per (scenario, theta, J, model); non-converged fits are left out of every mean."""
    if not results:
        raise ValueError("Cannot summarize an empty set of replicate results")
    ordered = sorted(results, key=_sort_key)
    return [_cell_summary(cell, list(records)) for cell, records in groupby(ordered, key=lambda r: r.cell)]


def all_cells_converged(summaries: Sequence[ScenarioSummary]) -> bool:
    return all(s.n_converged >= 1 for s in summaries)


def package_versions() -> Dict[str, str]:
    versions = {"python": platform.python_version()}
    for package in REPORTED_PACKAGES:
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = "unknown"
    return versions


class SimulationOrchestrator:
    """Runs one RunConfig end to end: replicate CSV, summary CSV and manifest in the output directory."""

    REPLICATES_FILE = "replicates.csv"
    SUMMARY_FILE = "summary.csv"
    MANIFEST_FILE = "manifest.json"

    def __init__(self, config: RunConfig, recorder_factory: Callable[[str], ReplicateRecorder] = ReplicateRecorder):
        self.config = config
        self.recorder_factory = recorder_factory
        self.outputs = {
            "replicates": os.path.join(config.output_dir, self.REPLICATES_FILE),
            "summary": os.path.join(config.output_dir, self.SUMMARY_FILE),
            "manifest": os.path.join(config.output_dir, self.MANIFEST_FILE),
        }

    def _manifest(self, started_at: str, wall_time: float, records: int, status: RunStatus,
                  error: Optional[str] = None) -> RunManifest:
        resolved = self.config.model_dump(mode="json")
        return RunManifest(
            config=resolved,
            config_hash=config_hash(resolved),
            master_seed=self.config.master_seed,
            versions=package_versions(),
            started_at=started_at,
            wall_time=wall_time,
            records_written=records,
            status=status,
            error=error,
            outputs=self.outputs,
        )

    def run(self) -> List[ScenarioSummary]:
        """
        :return: the cell summaries, sorted by scenario, theta, J and model.
        :raises OSError: if a sink write fails; an aborted manifest is written first.
        """
        started_at = datetime.now(timezone.utc).isoformat()
        clock = time.perf_counter()
        recorder = self.recorder_factory(self.outputs["replicates"])
        results: List[ReplicateResult] = []
        try:
            with recorder:
                for result in run_grid(self.config):
                    recorder.record(result)
                    results.append(result)
        except OSError as e:
            logger.error(f"Replicate sink failed after {recorder.records_written} records: {e}")
            write_manifest(self._manifest(started_at, time.perf_counter() - clock, recorder.records_written,
                                          RunStatus.ABORTED, error=str(e)), self.outputs["manifest"])
            raise

        summaries = summarize(results)
        write_summary_csv(summaries, self.outputs["summary"])
        write_manifest(self._manifest(started_at, time.perf_counter() - clock, recorder.records_written,
                                      RunStatus.COMPLETED), self.outputs["manifest"])
        logger.info(f"Wrote {recorder.records_written} replicate records and {len(summaries)} summaries "
                    f"to {self.config.output_dir}")
        return summaries

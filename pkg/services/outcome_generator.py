import logging
from typing import Optional

import numpy as np
import pandas as pd

from models import (
    OBSERVATION_COLUMNS,
    SECULAR_TREND,
    AgeResponse,
    CohortMode,
    CohortPanel,
    NonlinearForm,
    ScenarioConfig,
    ScenarioName,
    ScenarioOverrides,
)
from utils.rng import KeyedStreams, StreamPurpose

logger = logging.getLogger(__name__)

OPEN_COHORT_ATTRITION = 0.15


def scenario_preset(name: str, theta: float, n_steps: int, overrides: Optional[ScenarioOverrides] = None) -> ScenarioConfig:
    """
    Scenarios:
        a: linear age + widowhood, no secular trend, closed cohort
        b: nonlinear age + widowhood, no secular trend, closed cohort
        c: as a, plus the secular trend truncated to J+1 periods
        d: as c, in an open cohort replacing 15% of participants per period
    """
    try:
        scenario = ScenarioName(name)
    except ValueError:
        raise ValueError(f"Unknown scenario '{name}'; expected one of {[s.value for s in ScenarioName]}") from None
    if n_steps < 1:
        raise ValueError(f"Number of steps must be positive, got {n_steps}")

    no_trend = [0.0] * (n_steps + 1)
    # longer designs need an explicit trend override; generate_outcomes rejects a short vector
    trend = list(SECULAR_TREND[: n_steps + 1])
    presets = {
        ScenarioName.A: dict(age_response=AgeResponse.LINEAR, secular_trend=no_trend),
        ScenarioName.B: dict(age_response=AgeResponse.NONLINEAR, secular_trend=no_trend),
        ScenarioName.C: dict(age_response=AgeResponse.LINEAR, secular_trend=trend),
        ScenarioName.D: dict(age_response=AgeResponse.LINEAR, secular_trend=trend,
                             cohort_mode=CohortMode.OPEN, attrition_rate=OPEN_COHORT_ATTRITION),
    }
    values = dict(name=scenario.value, theta=theta, **presets[scenario])
    if overrides is not None:
        values.update(overrides.model_dump(exclude_none=True))
    return ScenarioConfig(**values)


def age_effect(ages: np.ndarray, config: ScenarioConfig) -> np.ndarray:
    linear = config.beta_age * ages
    if config.age_response == AgeResponse.LINEAR:
        return linear
    offset = ages - config.nonlinear_center
    if config.nonlinear_form == NonlinearForm.HINGE:
        offset = np.maximum(offset, 0.0)
    return linear + config.nonlinear_coefficient * offset ** 2


def generate_outcomes(panel: CohortPanel, config: ScenarioConfig, streams: KeyedStreams) -> pd.DataFrame:
    """
    Simulate y_ijk = mu + c_i + d_ik + theta x_ij + f_age(a_ijk) + beta_wid w_ijk + beta_j + e_ijk
    for every active (cluster, period, participant), returned as an observation table
    sorted by cluster, period and participant.
    """
    design = panel.design
    for field in ("sigma_c2", "sigma_d2", "sigma_e2"):
        if getattr(config, field) < 0:
            raise ValueError(f"{field} must be non-negative, got {getattr(config, field)}")
    trend = np.asarray(config.trend_for(design.n_steps))
    exposure = design.exposure

    sd_c, sd_d, sd_e = np.sqrt([config.sigma_c2, config.sigma_d2, config.sigma_e2])
    cluster_effects = np.array([
        streams.stream(StreamPurpose.CLUSTER_INTERCEPT, cluster).normal(0.0, sd_c)
        for cluster in range(design.n_clusters)
    ])

    columns = {name: [] for name in OBSERVATION_COLUMNS}
    for trajectory in panel.trajectories:
        cluster, participant = trajectory.cluster, trajectory.participant
        periods = np.asarray(trajectory.periods)
        ages = np.asarray(trajectory.ages)
        widowed = np.asarray(trajectory.widowed, dtype=int)
        participant_effect = streams.stream(StreamPurpose.PARTICIPANT_INTERCEPT, cluster, participant).normal(0.0, sd_d)
        # residuals are drawn to study end so the draw for a period never depends on exit
        residuals = streams.stream(StreamPurpose.RESIDUAL, cluster, participant).normal(
            0.0, sd_e, size=design.n_periods - trajectory.entry_period)[: periods.size]
        exposed = exposure[cluster, periods].astype(int)
        outcome = (config.intercept + cluster_effects[cluster] + participant_effect + config.theta * exposed
                   + age_effect(ages, config) + config.beta_widowed * widowed + trend[periods] + residuals)

        columns["cluster"].append(np.full(periods.size, cluster))
        columns["period"].append(periods)
        columns["participant"].append(np.full(periods.size, participant))
        columns["exposed"].append(exposed)
        columns["age"].append(ages)
        columns["baseline_age"].append(np.full(periods.size, ages[0]))
        columns["widowed"].append(widowed)
        columns["baseline_widowed"].append(np.full(periods.size, widowed[0]))
        columns["outcome"].append(outcome)

    table = pd.DataFrame({name: np.concatenate(parts) if parts else np.array([]) for name, parts in columns.items()})
    table = table.sort_values(["cluster", "period", "participant"], kind="mergesort").reset_index(drop=True)
    logger.debug(f"Generated {len(table)} observations for scenario {config.name} (theta={config.theta})")
    return table

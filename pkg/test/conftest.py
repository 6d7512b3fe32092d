"""Shared fixtures: small designs, simulated tables and dense reference computations."""
import logfire
import numpy as np
import pandas as pd
import pytest

from models import ScenarioConfig, ScenarioOverrides
from services.outcome_generator import scenario_preset
from services.simulation_orchestrator import simulate_dataset
from services.trial_design import standard_swd


@pytest.fixture(scope="session", autouse=True)
def quiet_logfire():
    logfire.configure(send_to_logfire=False, console=False)


@pytest.fixture
def small_design():
    return standard_swd(6, 3)


@pytest.fixture
def scenario_a() -> ScenarioConfig:
    # high hazard so the small panel always has widowed participants at baseline
    return scenario_preset("a", 0.5, 3, ScenarioOverrides(widowhood_hazard=0.5))


@pytest.fixture
def small_table(small_design, scenario_a) -> pd.DataFrame:
    _, _, table = simulate_dataset(scenario_a, small_design, seed=12345, cluster_size=4)
    return table


def random_panel(rng: np.random.Generator, n_clusters: int, max_participants: int, max_obs: int):
    """Unbalanced nested layout: returns (cluster of each row, participant code of each row)."""
    clusters, participants = [], []
    code = 0
    for cluster in range(n_clusters):
        for _ in range(int(rng.integers(1, max_participants + 1))):
            n_obs = int(rng.integers(1, max_obs + 1))
            clusters.extend([cluster] * n_obs)
            participants.extend([code] * n_obs)
            code += 1
    return np.asarray(clusters), np.asarray(participants)


def dense_reml(y, X, cluster_codes, participant_codes, sigma_c2, sigma_d2, sigma_e2):
    """Brute-force -2 REML log-likelihood, GLS estimates and covariance with an explicit N x N V."""
    n, p = X.shape
    Zc = (cluster_codes[:, None] == np.unique(cluster_codes)[None, :]).astype(float)
    Zd = (participant_codes[:, None] == np.unique(participant_codes)[None, :]).astype(float)
    V = sigma_e2 * np.eye(n) + sigma_c2 * Zc @ Zc.T + sigma_d2 * Zd @ Zd.T
    V_inv = np.linalg.inv(V)
    XtViX = X.T @ V_inv @ X
    covariance = np.linalg.inv(XtViX)
    beta = covariance @ X.T @ V_inv @ y
    r = y - X @ beta
    deviance = ((n - p) * np.log(2 * np.pi) + np.linalg.slogdet(V)[1] + np.linalg.slogdet(XtViX)[1]
                + r @ V_inv @ r)
    return deviance, beta, covariance


@pytest.fixture
def dense_oracle():
    return dense_reml


@pytest.fixture
def panel_layout():
    return random_panel

import logging
from typing import List, Tuple

import numpy as np
import pandas as pd
import scipy.linalg

from models import FixedTerm, ModelFormulation, ModelMatrices
from utils.errors import RankDeficiencyError

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ["cluster", "period", "participant", "outcome"]


def _period_dummies(periods: np.ndarray) -> Tuple[np.ndarray, List[str]]:
    # period 0 is the reference category
    levels = np.arange(1, int(periods.max()) + 1)
    return (periods[:, np.newaxis] == levels[np.newaxis, :]).astype(float), [f"period_{j}" for j in levels]


def check_full_rank(X: np.ndarray, labels: List[str]) -> None:
    """Raise RankDeficiencyError naming the columns a pivoted QR finds dependent on earlier ones."""
    if X.shape[0] < X.shape[1]:
        raise RankDeficiencyError(labels[X.shape[0]:])
    R, pivots = scipy.linalg.qr(X, mode="r", pivoting=True)
    diagonal = np.abs(np.diag(R))
    tolerance = max(X.shape) * np.finfo(float).eps * (diagonal[0] if diagonal.size else 0.0)
    rank = int(np.sum(diagonal > tolerance))
    if rank < X.shape[1]:
        raise RankDeficiencyError([labels[i] for i in sorted(pivots[rank:])])


def build_matrices(table: pd.DataFrame, formulation: ModelFormulation) -> ModelMatrices:
    """
    Fixed-effect design and grouping structure for one analysis model.

    Columns follow the formulation's term order, the intercept first and the
    categorical period as indicators for periods 1..J.

    :raises ValueError: if the table is empty or lacks a required column.
    :raises RankDeficiencyError: if X does not have full column rank.
    """
    if table.empty:
        raise ValueError("Observation table is empty")
    needed = REQUIRED_COLUMNS + [t.value for t in formulation.fixed_terms
                                 if t not in (FixedTerm.INTERCEPT, FixedTerm.PERIOD)]
    missing = [c for c in dict.fromkeys(needed) if c not in table.columns]
    if missing:
        raise ValueError(f"Model {formulation.id} needs columns missing from the table: {missing}")

    blocks, labels = [], []
    for term in formulation.fixed_terms:
        if term == FixedTerm.INTERCEPT:
            blocks.append(np.ones((len(table), 1)))
            labels.append("intercept")
        elif term == FixedTerm.PERIOD:
            dummies, names = _period_dummies(table["period"].to_numpy(dtype=int))
            blocks.append(dummies)
            labels.extend(names)
        else:
            blocks.append(table[term.value].to_numpy(dtype=float)[:, np.newaxis])
            labels.append(term.value)
    X = np.hstack(blocks)
    check_full_rank(X, labels)

    cluster_codes = pd.factorize(table["cluster"], sort=True)[0]
    participant_codes = table.groupby(["cluster", "participant"], sort=True).ngroup().to_numpy()
    participant_cluster = np.zeros(int(participant_codes.max()) + 1, dtype=int)
    participant_cluster[participant_codes] = cluster_codes

    return ModelMatrices(
        formulation_id=formulation.id,
        y=table["outcome"].to_numpy(dtype=float),
        X=X,
        cluster_codes=cluster_codes,
        participant_codes=participant_codes,
        participant_cluster=participant_cluster,
        labels=labels,
    )

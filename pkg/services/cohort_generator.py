import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np

from models import CohortMode, CohortPanel, ParticipantTrajectory, TrialDesign
from utils.rng import KeyedStreams, StreamPurpose

logger = logging.getLogger(__name__)

BASELINE_AGE_RANGE = (18.0, 102.0)
JOINER_AGE_RANGE = (18.0, 96.0)
WIDOWHOOD_HAZARD = 0.05


def advance_widowhood(current: bool, hazard: float, rng: np.random.Generator) -> bool:
    """Widowhood is absorbing; a non-widowed participant becomes widowed with probability `hazard`."""
    if not 0.0 <= hazard <= 1.0:
        raise ValueError(f"Hazard must lie in [0, 1], got {hazard}")
    # one draw either way keeps stream consumption independent of the state
    draw = rng.random()
    return current or draw < hazard


def widowhood_path(n_periods: int, hazard: float, rng: np.random.Generator) -> List[bool]:
    """Status at entry (initial probability `hazard`) followed by one transition per later period."""
    path = [advance_widowhood(False, hazard, rng)]
    for _ in range(n_periods - 1):
        path.append(advance_widowhood(path[-1], hazard, rng))
    return path


def _trajectory(design: TrialDesign, streams: KeyedStreams, cluster: int, participant: int, entry_period: int,
                entry_age: float, hazard: float, exit_period: Optional[int] = None) -> ParticipantTrajectory:
    # the path always runs to study end so truncation never changes the draws
    full_length = design.n_periods - entry_period
    widowed = widowhood_path(full_length, hazard, streams.stream(StreamPurpose.WIDOWHOOD, cluster, participant))
    observed = full_length if exit_period is None else exit_period - entry_period + 1
    ages = [entry_age + design.period_length * step for step in range(observed)]
    return ParticipantTrajectory(
        cluster=cluster,
        participant=participant,
        entry_period=entry_period,
        exit_period=exit_period,
        ages=ages,
        widowed=widowed[:observed],
    )


def _entry_age(streams: KeyedStreams, cluster: int, participant: int, age_range: Tuple[float, float]) -> float:
    low, high = age_range
    return float(streams.stream(StreamPurpose.ENTRY_AGE, cluster, participant).uniform(low, high))


def generate_closed_cohort(design: TrialDesign, cluster_size: int, streams: KeyedStreams,
                           hazard: float = WIDOWHOOD_HAZARD,
                           age_range: Tuple[float, float] = BASELINE_AGE_RANGE) -> CohortPanel:
    """Every participant enters at baseline and is observed in all J+1 periods."""
    if cluster_size < 1:
        raise ValueError(f"Cluster size must be at least 1, got {cluster_size}")
    trajectories = [
        _trajectory(design, streams, cluster, participant, 0, _entry_age(streams, cluster, participant, age_range), hazard)
        for cluster in range(design.n_clusters)
        for participant in range(cluster_size)
    ]
    return CohortPanel(design=design, mode=CohortMode.CLOSED, cluster_size=cluster_size, trajectories=trajectories)


def leaver_count(expected: float, rng: np.random.Generator) -> int:
    """Stochastic rounding: floor(expected) plus one more with probability equal to the fractional part."""
    base = math.floor(expected)
    return base + int(rng.random() < expected - base)


def generate_open_cohort(design: TrialDesign, cluster_size: int, attrition_rate: float, streams: KeyedStreams,
                         hazard: float = WIDOWHOOD_HAZARD,
                         baseline_age_range: Tuple[float, float] = BASELINE_AGE_RANGE,
                         joiner_age_range: Tuple[float, float] = JOINER_AGE_RANGE) -> CohortPanel:
    """
    Closed baseline cohort where, at the start of each period j >= 1, the oldest
    active participants of each cluster leave (exit period j-1) and are replaced
    one-for-one by joiners entering at period j.

    Ties in age are broken by participant index, lowest index leaving first.
    """
    if cluster_size < 1:
        raise ValueError(f"Cluster size must be at least 1, got {cluster_size}")
    if not 0.0 <= attrition_rate < 1.0:
        raise ValueError(f"Attrition rate must lie in [0, 1), got {attrition_rate}")

    trajectories: List[ParticipantTrajectory] = []
    for cluster in range(design.n_clusters):
        # participant -> (entry period, entry age)
        active: Dict[int, Tuple[int, float]] = {
            participant: (0, _entry_age(streams, cluster, participant, baseline_age_range))
            for participant in range(cluster_size)
        }
        exits: Dict[int, int] = {}
        entries: Dict[int, Tuple[int, float]] = dict(active)
        next_id = cluster_size
        for period in range(1, design.n_periods):
            attrition_rng = streams.stream(StreamPurpose.ATTRITION, cluster, period)
            n_leave = min(leaver_count(attrition_rate * cluster_size, attrition_rng), cluster_size)
            if n_leave == 0:
                continue

            def current_age(participant: int) -> float:
                entry_period, entry_age = active[participant]
                return entry_age + design.period_length * (period - 1 - entry_period)

            leavers = sorted(active, key=lambda p: (-current_age(p), p))[:n_leave]
            for participant in leavers:
                exits[participant] = period - 1
                del active[participant]
            for _ in range(n_leave):
                entry = (period, _entry_age(streams, cluster, next_id, joiner_age_range))
                active[next_id] = entry
                entries[next_id] = entry
                next_id += 1

        for participant, (entry_period, entry_age) in entries.items():
            trajectories.append(_trajectory(design, streams, cluster, participant, entry_period, entry_age, hazard,
                                            exit_period=exits.get(participant)))

    n_joiners = sum(1 for t in trajectories if t.entry_period > 0)
    logger.debug(f"Open cohort: {len(trajectories)} trajectories, {n_joiners} joiners")
    return CohortPanel(design=design, mode=CohortMode.OPEN, cluster_size=cluster_size, attrition_rate=attrition_rate,
                       trajectories=trajectories)

import logging

import numpy as np

from models import TrialDesign

logger = logging.getLogger(__name__)


def standard_swd(n_clusters: int, n_steps: int, period_length: float = 0.5) -> TrialDesign:
    """
    Build the balanced standard stepped-wedge design.

    Period 0 is an all-control baseline and group g crosses over at period g.
    Clusters are assigned to groups in cluster order, I/J clusters per group.

    :raises ValueError: if an argument is not positive or I is not a multiple of J.
    """
    if n_clusters <= 0 or n_steps <= 0:
        raise ValueError(f"Number of clusters and steps must be positive, got I={n_clusters}, J={n_steps}")
    if period_length <= 0:
        raise ValueError(f"Period length must be positive, got {period_length}")
    if n_clusters < n_steps or n_clusters % n_steps:
        raise ValueError(f"Only balanced designs are supported: I={n_clusters} is not a multiple of J={n_steps}")
    per_group = n_clusters // n_steps
    allocation = np.repeat(np.arange(1, n_steps + 1), per_group).tolist()
    return TrialDesign(n_clusters=n_clusters, n_steps=n_steps, period_length=period_length, allocation=allocation)


def randomize_allocation(design: TrialDesign, rng: np.random.Generator) -> TrialDesign:
    """Uniformly permute the group assignment over clusters; group sizes are preserved."""
    allocation = rng.permutation(np.asarray(design.allocation)).tolist()
    logger.debug(f"Randomized allocation for {design.n_clusters} clusters over {design.n_steps} groups")
    return design.model_copy(update={"allocation": allocation})

"""
REML fitting of y = X beta + Z_c c + Z_d d + e with nested cluster and
participant random intercepts.

With variance ratios gamma_c = sigma_c2 / sigma_e2 and gamma_d = sigma_d2 / sigma_e2,
V* = I + gamma_c Z_c Z_c' + gamma_d Z_d Z_d'. The mixed-model equations for
[u, beta, y] are reduced by block Cholesky elimination, participants first and
then clusters. Both random-effect blocks stay diagonal because participants
are nested in clusters, so one evaluation costs O(N p^2) once the participant
sums are cached, and only a (p + 1) x (p + 1) dense factor is ever formed.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse
from scipy.optimize import minimize

from models import LmmFit, ModelMatrices, SolverOptions, VarianceComponents
from utils.errors import SingularSystemError

logger = logging.getLogger(__name__)

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class NormalEquations:
    """Factorized GLS system at fixed variance ratios."""
    factor: Tuple[np.ndarray, bool]
    beta: np.ndarray
    quadratic_form: float
    logdet_v: float
    logdet_xvx: float


@dataclass
class _Candidate:
    criterion: float
    gamma_c: float
    gamma_d: float
    converged: bool
    boundary_rank: int


class RemlSolver:
    """Caches the participant-level sums of one ModelMatrices and evaluates the REML criterion."""

    def __init__(self, matrices: ModelMatrices):
        self.matrices = matrices
        self.n_obs, self.n_fixed = matrices.X.shape
        W = np.column_stack([matrices.X, matrices.y])
        codes = matrices.participant_codes
        n_participants = matrices.n_participants

        incidence = scipy.sparse.csr_matrix(
            (np.ones(self.n_obs), (codes, np.arange(self.n_obs))), shape=(n_participants, self.n_obs)
        )
        self.counts = np.bincount(codes, minlength=n_participants).astype(float)
        sums = np.asarray(incidence @ W)
        self.means = sums / self.counts[:, np.newaxis]
        # within-participant cross products do not depend on the variance ratios
        self.within = W.T @ W - (sums / self.counts[:, np.newaxis]).T @ sums
        self.cluster_of = matrices.participant_cluster
        self.cluster_incidence = scipy.sparse.csr_matrix(
            (np.ones(n_participants), (self.cluster_of, np.arange(n_participants))),
            shape=(matrices.n_clusters, n_participants),
        )
        self.y_variance = float(np.var(matrices.y))
        self.sigma_floor = 1e-10 * self.y_variance if self.y_variance > 0 else 1e-10

    @property
    def residual_df(self) -> int:
        return self.n_obs - self.n_fixed

    def normal_equations(self, gamma_c: float, gamma_d: float) -> NormalEquations:
        """Reduce and factorize the mixed-model equations at (gamma_c, gamma_d)."""
        if gamma_c < 0 or gamma_d < 0:
            raise ValueError(f"Variance ratios must be non-negative, got ({gamma_c}, {gamma_d})")
        p = self.n_fixed
        # participant block: d_k = 1 + gamma_d n_k
        d = 1.0 + gamma_d * self.counts
        weights = self.counts / d
        # cluster block after eliminating participants: e_i = 1 + gamma_c sum_k n_k / d_k
        cluster_weight = np.asarray(self.cluster_incidence @ weights).ravel()
        e = 1.0 + gamma_c * cluster_weight
        cluster_means = np.asarray(self.cluster_incidence @ (weights[:, np.newaxis] * self.means))
        cluster_means /= cluster_weight[:, np.newaxis]
        deviations = self.means - cluster_means[self.cluster_of]

        S = (self.within
             + (deviations * weights[:, np.newaxis]).T @ deviations
             + (cluster_means * (cluster_weight / e)[:, np.newaxis]).T @ cluster_means)

        try:
            factor = scipy.linalg.cho_factor(S[:p, :p], lower=True, check_finite=True)
        except (np.linalg.LinAlgError, ValueError) as error:
            raise SingularSystemError(
                f"X' V*^-1 X is not positive definite at gamma_c={gamma_c:.4g}, gamma_d={gamma_d:.4g}: {error}"
            ) from error
        beta = scipy.linalg.cho_solve(factor, S[:p, p])
        quadratic_form = float(S[p, p] - S[:p, p] @ beta)
        return NormalEquations(
            factor=factor,
            beta=beta,
            quadratic_form=max(quadratic_form, self.residual_df * self.sigma_floor),
            logdet_v=float(np.sum(np.log(d)) + np.sum(np.log(e))),
            logdet_xvx=float(2.0 * np.sum(np.log(np.diag(factor[0])))),
        )

    def reml_objective(self, gamma_c: float, gamma_d: float) -> Tuple[float, float, np.ndarray]:
        """Profiled -2 REML log-likelihood, with the profiled residual variance and GLS estimates."""
        system = self.normal_equations(gamma_c, gamma_d)
        dof = self.residual_df
        criterion = (system.logdet_v + system.logdet_xvx + dof * np.log(system.quadratic_form)
                     + dof * (1.0 + LOG_2PI - np.log(dof)))
        return float(criterion), system.quadratic_form / dof, system.beta

    def reml_deviance(self, components: VarianceComponents) -> float:
        """-2 REML log-likelihood at explicit (sigma_c2, sigma_d2, sigma_e2), not profiled."""
        if components.sigma_e2 <= 0:
            raise ValueError("Residual variance must be positive")
        gamma_c, gamma_d = components.ratios
        system = self.normal_equations(gamma_c, gamma_d)
        return float(self.residual_df * (LOG_2PI + np.log(components.sigma_e2)) + system.logdet_v
                     + system.logdet_xvx + system.quadratic_form / components.sigma_e2)

    def gls_fixed_effects(self, components: VarianceComponents) -> Tuple[np.ndarray, np.ndarray]:
        """GLS estimates and their covariance sigma_e2 (X' V*^-1 X)^-1 at fixed components."""
        if components.sigma_e2 <= 0:
            raise ValueError("Residual variance must be positive")
        system = self.normal_equations(*components.ratios)
        covariance = components.sigma_e2 * scipy.linalg.cho_solve(system.factor, np.eye(self.n_fixed))
        return system.beta, (covariance + covariance.T) / 2.0

    def _criterion_at(self, log_gamma_c: Optional[float], log_gamma_d: Optional[float]) -> float:
        gamma_c = 0.0 if log_gamma_c is None else float(np.exp(log_gamma_c))
        gamma_d = 0.0 if log_gamma_d is None else float(np.exp(log_gamma_d))
        try:
            return self.reml_objective(gamma_c, gamma_d)[0]
        except SingularSystemError:
            return np.inf

    def _search(self, objective, starts: List[Tuple[float, ...]], options: SolverOptions):
        best, evaluations = None, 0
        for start in starts:
            result = minimize(
                objective,
                x0=np.asarray(start, dtype=float),
                method="Nelder-Mead",
                bounds=[options.log_ratio_bounds] * len(start),
                options={"fatol": options.fatol, "xatol": options.xatol, "maxfev": options.max_evaluations},
            )
            evaluations += int(result.nfev)
            if best is None or result.fun < best.fun:
                best = result
        return best, evaluations

    def _gradient_norm(self, candidate: _Candidate) -> float:
        free = [value > 0 for value in (candidate.gamma_c, candidate.gamma_d)]
        if not any(free):
            return 0.0
        point = np.log([max(candidate.gamma_c, 1e-300), max(candidate.gamma_d, 1e-300)])
        gradient = []
        for index in (i for i, is_free in enumerate(free) if is_free):
            step = 1e-5 * max(1.0, abs(point[index]))
            shifted = [point.copy(), point.copy()]
            shifted[0][index] += step
            shifted[1][index] -= step
            values = [self._criterion_at(*(s[i] if free[i] else None for i in range(2))) for s in shifted]
            gradient.append((values[0] - values[1]) / (2.0 * step))
        return float(np.linalg.norm(gradient))

    def _boundary_derivative(self, candidate: _Candidate, step: float = 1e-4) -> Optional[float]:
        """
        Smallest one-sided derivative of the profiled criterion in each ratio held at 0,
        moving into the admissible region with the other ratio fixed. None for interior solutions.
        """
        fixed = [index for index, value in enumerate((candidate.gamma_c, candidate.gamma_d)) if value == 0.0]
        if not fixed:
            return None
        derivatives = []
        for index in fixed:
            values = []
            for multiple in (0.0, 1.0, 2.0):
                gammas = [candidate.gamma_c, candidate.gamma_d]
                gammas[index] = multiple * step
                values.append(self.reml_objective(*gammas)[0])
            # second-order forward difference
            derivatives.append((-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * step))
        return float(min(derivatives))

    def fit(self, options: Optional[SolverOptions] = None) -> LmmFit:
        """
        Minimize the profiled criterion over (log gamma_c, log gamma_d) from a crossed
        grid of starts, then over each boundary gamma = 0 and at the corner.
        A boundary solution wins whenever it is within the boundary tolerance of the best.
        """
        options = options or SolverOptions()
        matrices = self.matrices
        if self.n_obs <= self.n_fixed + 2:
            raise ValueError(f"Need more than p + 2 = {self.n_fixed + 2} observations, got {self.n_obs}")
        if matrices.n_clusters < 2:
            raise ValueError("Need at least 2 clusters")
        if np.bincount(matrices.participant_cluster).max() < 2:
            raise ValueError("Need at least one cluster with 2 or more participants")

        candidates: List[_Candidate] = []
        evaluations = 0

        interior, used = self._search(lambda x: self._criterion_at(x[0], x[1]),
                                      list(itertools.product(options.start_points, repeat=2)), options)
        evaluations += used
        candidates.append(_Candidate(float(interior.fun), float(np.exp(interior.x[0])), float(np.exp(interior.x[1])),
                                     bool(interior.success), 0))

        starts = [(s,) for s in options.start_points]
        cluster_only, used = self._search(lambda x: self._criterion_at(x[0], None), starts, options)
        evaluations += used
        candidates.append(_Candidate(float(cluster_only.fun), float(np.exp(cluster_only.x[0])), 0.0,
                                     bool(cluster_only.success), 1))
        participant_only, used = self._search(lambda x: self._criterion_at(None, x[0]), starts, options)
        evaluations += used
        candidates.append(_Candidate(float(participant_only.fun), 0.0, float(np.exp(participant_only.x[0])),
                                     bool(participant_only.success), 1))
        candidates.append(_Candidate(self._criterion_at(None, None), 0.0, 0.0, True, 2))
        evaluations += 1

        finite = [c for c in candidates if np.isfinite(c.criterion)]
        if not finite:
            raise SingularSystemError("REML criterion is not finite anywhere on the search grid")
        lowest = min(c.criterion for c in finite)
        chosen = max((c for c in finite if c.criterion <= lowest + options.boundary_tolerance),
                     key=lambda c: (c.boundary_rank, -c.criterion))

        criterion, sigma_e2, _ = self.reml_objective(chosen.gamma_c, chosen.gamma_d)
        sigma_e2 = max(sigma_e2, self.sigma_floor)
        components = VarianceComponents(sigma_c2=chosen.gamma_c * sigma_e2, sigma_d2=chosen.gamma_d * sigma_e2,
                                        sigma_e2=sigma_e2)
        beta, covariance = self.gls_fixed_effects(components)
        if not chosen.converged:
            logger.warning(f"REML search for model {matrices.formulation_id} did not converge "
                           f"after {evaluations} evaluations")

        return LmmFit(
            formulation_id=matrices.formulation_id,
            labels=list(matrices.labels),
            estimates=beta.tolist(),
            covariance=covariance.tolist(),
            components=components,
            criterion=criterion,
            converged=chosen.converged,
            iterations=evaluations,
            gradient_norm=self._gradient_norm(chosen),
            boundary_derivative=self._boundary_derivative(chosen),
            on_boundary=chosen.gamma_c == 0.0 or chosen.gamma_d == 0.0,
            n_obs=self.n_obs,
            n_fixed=self.n_fixed,
            n_clusters=matrices.n_clusters,
            n_participants=matrices.n_participants,
        )


def reml_objective(matrices: ModelMatrices, gamma_c: float, gamma_d: float) -> Tuple[float, float, np.ndarray]:
    return RemlSolver(matrices).reml_objective(gamma_c, gamma_d)


def gls_fixed_effects(matrices: ModelMatrices, components: VarianceComponents) -> Tuple[np.ndarray, np.ndarray]:
    return RemlSolver(matrices).gls_fixed_effects(components)


def fit_reml(matrices: ModelMatrices, options: Optional[SolverOptions] = None) -> LmmFit:
    return RemlSolver(matrices).fit(options)
